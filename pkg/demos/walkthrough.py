"""Split the running example three ways, solve taint both ways, and build a SEG.

    python3 demos/walkthrough.py
"""

from importlib import resources

from ssikit.checks import ssi_violations
from ssikit.clients import get_client
from ssikit.dataflow import check_equivalence, solve, solve_dense
from ssikit.interp import fuzz_equivalence
from ssikit.seg import ReachingUses, build_seg, seg_equivalence
from ssikit.ssify import ssify
from ssikit.text import parse, print_program


def load(name):
    return parse((resources.files("ssikit") / "corpus" / f"{name}.ssir").read_text())


diamond = load("diamond")
for row in ("ssi", "abcd", "uses-up"):
    q, report = ssify(diamond, row)
    print(f"--- {row}: {report.counts()['total']} inserted")
    print(print_program(q))
    print(fuzz_equivalence(diamond, q, trials=20))

taint = get_client("taint")
q, _ = ssify(load("taint_sanitize"), taint.strategy)
fn = q.function()
print(ssi_violations(fn, taint).summary())
sparse = solve(fn, taint)
print(sparse.to_text())
print(check_equivalence(solve_dense(fn, taint), sparse))

uses = load("reaching_uses")
print(build_seg(uses, "v", ReachingUses()).to_text())
print(seg_equivalence(uses, "v", ReachingUses()))
