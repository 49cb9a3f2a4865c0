from __future__ import annotations

import pytest

from ssikit.checks import overlap_violations, ssa_violations
from ssikit.generate import generate_program
from ssikit.graphs import dominator_tree
from ssikit.ir import In, Out, Var, ValidationError, alpha_equivalent
from ssikit.ssify import SplitReport, clean, rename, split, ssify
from ssikit.strategy import eval_strategy, parse_strategy
from ssikit.text import parse, print_program

from conftest import program


def _split(p, row, base="v"):
    fn = p.function()
    trees = (dominator_tree(fn), dominator_tree(fn, "reverse"))
    report = SplitReport()
    strategy = eval_strategy(parse_strategy(row), fn)[base]
    return split(fn, base, strategy, report, trees), report


def test_constprop_split_inserts_one_phi(diamond):
    _, report = _split(diamond, "constprop")
    assert report.inserted == [("v", In("L3"), "phi")]


def test_abcd_split_inserts_sigma_and_phi(diamond):
    _, report = _split(diamond, "abcd")
    assert [(n, k) for _, n, k in report.inserted] == [(Out("entry"), "sigma"), (In("L3"), "phi")]


def test_uses_up_split_adds_copies_at_the_uses(diamond):
    out, report = _split(diamond, "uses-up")
    kinds = sorted(k for _, _, k in report.inserted)
    assert kinds == ["copy", "copy", "phi", "sigma"]
    assert "use v || v = v" in print_program(out)


def test_rename_after_constprop_split(diamond):
    out, _ = _split(diamond, "constprop")
    text = print_program(rename(out, "v"))
    assert "v.1 = input" in text
    assert "v.2 = const 1" in text
    assert "v.3 = phi(L1: v.2, L2: v.1)" in text
    assert "use v.1\n" in text and "use v.3\n" in text


def test_rename_after_abcd_split(diamond):
    out, _ = _split(diamond, "abcd")
    text = print_program(rename(out, "v"))
    assert "(L1: v.2, L2: v.3) = sigma(v.1)" in text
    assert "v.4 = const 1" in text
    assert "v.5 = phi(L1: v.4, L2: v.3)" in text


def test_use_of_undefined_variable_becomes_undef():
    p = program("func main {\nentry:\n  use w\n  ret\n}\n")
    assert "use undef" in print_program(ssify(p, "defs_down")[0])


def test_clean_drops_sigma_destination_that_is_never_read(diamond):
    q, report = ssify(diamond, "abcd")
    text = print_program(q)
    assert "(L1: undef, L2: v.3) = sigma(v.1)" in text
    assert report.counts() == {"phi": 1, "sigma": 1, "copy": 0, "total": 2}


def test_clean_removes_a_phi_nobody_reads():
    p = program("""func main {
entry:
  v = input
  branch v == 0, L1, L2
L1:
  v = const 1
  jump L3
L2:
  jump L3
L3:
  ret
}""")
    q, report = ssify(p, "constprop")
    assert "phi" not in print_program(q)
    assert report.removed == [("v", In("L3"), "phi")]


def test_clean_is_identity_when_every_pseudo_is_used(diamond):
    _, report = ssify(diamond, "constprop")
    assert not report.removed


def test_ccp_matches_abcd_on_diamond(diamond):
    assert print_program(ssify(diamond, "ccp")[0]) == print_program(ssify(diamond, "abcd")[0])


def test_ssi_inserts_at_least_as_much_as_abcd_on_diamond(diamond):
    assert ssify(diamond, "ssi")[1].counts()["total"] >= ssify(diamond, "abcd")[1].counts()["total"]


def test_empty_strategy_on_single_assignment_program_changes_nothing_but_names():
    p = program("""func main {
entry:
  a = input
  b = add a a
  branch b == 0, L1, L2
L1:
  use a
  ret
L2:
  use b
  ret
}""")
    q, report = ssify(p, "empty")
    assert report.counts()["total"] == 0
    assert alpha_equivalent(p.function(), q.function())


def test_versioned_input_is_rejected():
    p = program("func main {\nentry:\n  v.1 = input\n  ret\n}\n")
    with pytest.raises(ValidationError, match="unversioned"):
        ssify(p, "ssi")


def test_ssify_does_not_mutate_its_input(diamond):
    before = print_program(diamond)
    ssify(diamond, "uses-up")
    assert print_program(diamond) == before


def test_report_text_lists_kept_pseudo_instructions(diamond):
    text = ssify(diamond, "abcd")[1].to_text()
    assert "kept sigma v Out(entry)" in text and "kept phi v In(L3)" in text


@pytest.mark.parametrize("row", ["ssi", "abcd", "ccp", "uses-up", "defs-uses-down", "hochstadt"])
@pytest.mark.parametrize("seed", range(0, 60, 3))
def test_ssify_output_is_valid_ssa(row, seed):
    q, _ = ssify(generate_program(seed), row)
    fn = q.function()
    assert ssa_violations(fn) == []
    assert overlap_violations(fn) == []
    assert parse(print_program(q)) == q


def test_ssify_is_deterministic():
    p = generate_program(11)
    assert print_program(ssify(p, "ssi")[0]) == print_program(ssify(p, "ssi")[0])
