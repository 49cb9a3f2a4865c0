"""Property suites over the bundled and generated corpora.

Each suite returns a :class:`SuiteResult`.  The command line's ``verify``
command and the acceptance tests both run these, so a failure seen in one
can be reproduced with the other from the printed seed.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Optional

from .checks import overlap_violations, ssa_violations, ssi_violations
from .clients import get_client
from .dataflow import check_equivalence, solve, solve_dense
from .generate import cfg_function, generate_program, random_cfg
from .graphs import dominator_tree, iterated_frontier
from .interp import fuzz_equivalence
from .ir import CfgIndex, Program
from .oracles import (brute_edge_frontier, brute_frontier, brute_idoms,
                      brute_iterated_frontier, forward_graph, reverse_graph)
from .seg import ReachingUses, random_instance, seg_equivalence
from .ssify import ssify
from .text import parse, print_program

SEMANTICS_STRATEGIES = ("ssi", "abcd", "ccp", "uses-up", "defs-uses-down")
# constants, taint, null and class inference, plus the conditional variant of constants
EQUIVALENCE_CLIENTS = ("constprop", "taint", "nullptr", "classinf", "ccp")


@dataclass
class SuiteResult:
    name: str
    seed: int
    checked: int = 0
    failures: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        line = (f"suite={self.name} status={status} checked={self.checked} "
                f"failures={len(self.failures)} seed={self.seed} "
                f"seconds={self.seconds:.1f}")
        return line

    def report(self, limit: int = 10) -> str:
        lines = [self.summary()]
        lines += [f"  note: {n}" for n in self.notes]
        lines += [f"  fail: {f}" for f in self.failures[:limit]]
        if len(self.failures) > limit:
            lines.append(f"  ... {len(self.failures) - limit} more")
        return "\n".join(lines)


def bundled_corpus() -> dict:
    """Name -> parsed program for every ``.ssir`` file shipped with the package."""
    out = {}
    root = resources.files("ssikit") / "corpus"
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".ssir"):
            out[entry.name[:-5]] = parse(entry.read_text())
    return out


def _timed(fn: Callable) -> Callable:
    def wrapper(*args, **kwargs) -> SuiteResult:
        start = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - start
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _programs(trials: int, seed: int, corpus: bool) -> list:
    progs = [(f"seed {seed + i}", generate_program(seed + i)) for i in range(trials)]
    if corpus:
        progs += sorted(bundled_corpus().items())
    return progs


@_timed
def semantics(trials: int = 100, seed: int = 0, inputs: int = 10,
              fuel: int = 10_000) -> SuiteResult:
    """Every strategy preserves the observable trace on random inputs."""
    res = SuiteResult("semantics", seed)
    outcomes: dict = {}
    for name, p in _programs(trials, seed, corpus=False):
        cache: dict = {}
        for st in SEMANTICS_STRATEGIES:
            q, _ = ssify(p, st)
            rep = fuzz_equivalence(p, q, inputs, seed, fuel, cache)
            res.checked += inputs
            for k, v in rep.outcomes.items():
                outcomes[k] = outcomes.get(k, 0) + v
            if not rep.ok:
                res.failures.append(f"{name} strategy {st}: {rep}")
    if outcomes:
        res.notes.append("original outcomes " + " ".join(
            f"{k}={v}" for k, v in sorted(outcomes.items())))
    return res


@_timed
def equivalence(trials: int = 100, seed: int = 0) -> SuiteResult:
    """Dense and sparse solutions agree on live ranges for every client."""
    res = SuiteResult("equivalence", seed)
    for name, p in _programs(trials, seed, corpus=True):
        for cname in EQUIVALENCE_CLIENTS:
            client = get_client(cname)
            q, _ = ssify(p, client.strategy)
            fn = q.function()
            rep = check_equivalence(solve_dense(fn, client), solve(fn, client))
            res.checked += rep.checked
            if not rep.ok:
                res.failures.append(f"{name} client {cname}: {rep}")
    return res


@_timed
def ssi(trials: int = 100, seed: int = 0, strict_meet: bool = False) -> SuiteResult:
    """The five SSI properties hold for each client on its own strategy."""
    res = SuiteResult("ssi" + ("-strict-meet" if strict_meet else ""), seed)
    for name, p in _programs(trials, seed, corpus=True):
        for cname in EQUIVALENCE_CLIENTS:
            client = get_client(cname)
            q, _ = ssify(p, client.strategy)
            rep = ssi_violations(q.function(), client, seed=seed,
                                 strict_meet=strict_meet)
            res.checked += 1
            if not rep.ok:
                prop, detail = rep.first()
                res.failures.append(f"{name} client {cname}: {prop}: {detail}")
    return res


@_timed
def ssa(trials: int = 100, seed: int = 0) -> SuiteResult:
    """Single definitions that dominate their uses, and no overlapping versions."""
    res = SuiteResult("ssa", seed)
    for name, p in _programs(trials, seed, corpus=True):
        for st in SEMANTICS_STRATEGIES + ("constprop", "taint", "classinf", "hochstadt"):
            q, _ = ssify(p, st)
            for fn in q.functions:
                res.checked += 1
                for msg in ssa_violations(fn) + overlap_violations(fn):
                    res.failures.append(f"{name} strategy {st}: {msg}")
    return res


@_timed
def seg(trials: int = 200, seed: int = 0) -> SuiteResult:
    """Random forward partitioned problems, plus the reaching-uses corpus file."""
    res = SuiteResult("seg", seed)
    i = 0
    s = seed
    while i < trials:
        p, v, nodes = random_instance(s)
        s += 1
        if v is None:
            continue
        i += 1
        rep = seg_equivalence(p, v, nodes)
        res.checked += 1
        if not rep.ok:
            res.failures.append(f"seed {s - 1} variable {v}: {rep}")
    corpus = bundled_corpus()
    if "reaching_uses" in corpus:
        rep = seg_equivalence(corpus["reaching_uses"], "v", ReachingUses())
        res.checked += 1
        res.notes.append(f"reaching_uses.ssir {rep}")
        if not rep.ok:
            res.failures.append(f"reaching_uses.ssir: {rep}")
    return res


def growth_counts(program: Program) -> tuple:
    """Surviving inserted pseudo-instructions under CCP, ABCD and SSI."""
    return tuple(ssify(program, st)[1].counts()["total"] for st in ("ccp", "abcd", "ssi"))


@_timed
def growth(trials: int = 100, seed: int = 0) -> SuiteResult:
    """CCP <= ABCD <= SSI on every bundled program, strictly on at least one.

    Generated programs are counted in a note; they are not part of the
    bundled corpus the ordering is stated over.
    """
    res = SuiteResult("growth", seed)
    strict = []
    for name, p in sorted(bundled_corpus().items()):
        c, a, s = growth_counts(p)
        res.checked += 1
        res.notes.append(f"{name} ccp={c} abcd={a} ssi={s}")
        if not (c <= a <= s):
            res.failures.append(f"{name}: ccp={c} abcd={a} ssi={s} breaks ccp <= abcd <= ssi")
        if c < a < s:
            strict.append(name)
    if not strict:
        res.failures.append("no bundled program has ccp < abcd < ssi")
    else:
        res.notes.append("strict on " + ", ".join(strict))
    ca = asb = 0
    for _, p in _programs(trials, seed, corpus=False):
        c, a, s = growth_counts(p)
        ca += c > a
        asb += a > s
    if trials:
        res.notes.append(f"generated programs: ccp>abcd on {ca}/{trials}, "
                         f"abcd>ssi on {asb}/{trials}")
    return res


@_timed
def dominance(trials: int = 500, seed: int = 0, max_blocks: int = 12) -> SuiteResult:
    """Dominators, frontiers and edge frontiers against path-enumeration oracles."""
    res = SuiteResult("dominance", seed)
    rng = random.Random(seed)
    for t in range(trials):
        succs = random_cfg(rng, max_blocks)
        fn = cfg_function(succs, "n0")
        cfg = CfgIndex(fn)
        for direction in ("forward", "reverse"):
            tree = dominator_tree(cfg, direction)
            root, g = forward_graph(cfg) if direction == "forward" else reverse_graph(tree)
            res.checked += 1
            where = f"cfg {t} {direction}"
            if tree.idom != brute_idoms(root, g):
                res.failures.append(f"{where}: idoms differ")
                continue
            for b in tree.idom:
                if tree.frontier(b) != brute_frontier(root, g, b):
                    res.failures.append(f"{where}: frontier of {b} differs")
            for u in cfg.labels:
                for w in cfg.succs[u]:
                    a, b = (u, w) if direction == "forward" else (w, u)
                    if tree.edge_frontier(u, w) != brute_edge_frontier(root, g, a, b):
                        res.failures.append(f"{where}: frontier of edge {u}->{w} differs")
            seeds = [b for b in tree.idom if rng.random() < 0.3]
            naive = brute_iterated_frontier(lambda b: brute_frontier(root, g, b), seeds)
            if iterated_frontier(tree, seeds) != naive:
                res.failures.append(f"{where}: iterated frontier of {seeds} differs")
    return res


@_timed
def roundtrip(trials: int = 1000, seed: int = 0) -> SuiteResult:
    """Printing then parsing gives back the same program and the same text."""
    res = SuiteResult("roundtrip", seed)
    for name, p in _programs(trials, seed, corpus=True):
        text = print_program(p)
        q = parse(text)
        res.checked += 1
        if q != p or print_program(q) != text:
            res.failures.append(f"{name}: parse(print(p)) differs from p")
        # split programs carry phis, sigmas and attached copies
        r, _ = ssify(p, "ssi")
        text = print_program(r)
        if print_program(parse(text)) != text:
            res.failures.append(f"{name}: ssi form does not round-trip")
    return res


@_timed
def examples(trials: int = 0, seed: int = 0) -> SuiteResult:
    """Exact lattice values of the taint and null worked examples."""
    res = SuiteResult("examples", seed)
    corpus = bundled_corpus()
    expected = {
        ("taint_sanitize", "taint"): {"v.1": "Tainted", "v.2": "Clean",
                                      "v.4": "Tainted", "v.5": "Clean"},
        ("null_receiver", "nullptr"): {"v.2": "NotNull", "v.4": "PossiblyNull"},
    }
    for (fname, cname), want in expected.items():
        client = get_client(cname)
        q, _ = ssify(corpus[fname], client.strategy)
        sol = solve(q, client)
        got = {str(v): sol.lattice.show(x) for v, x in sol.values.items()}
        for v, value in want.items():
            res.checked += 1
            if got.get(v) != value:
                res.failures.append(f"{fname} {cname}: {v} is {got.get(v)}, expected {value}")
            else:
                res.notes.append(f"{fname} {cname}: {v} {value}")
    return res


SUITES = {
    "semantics": semantics,
    "equivalence": equivalence,
    "ssi": ssi,
    "ssa": ssa,
    "seg": seg,
    "growth": growth,
    "dominance": dominance,
    "roundtrip": roundtrip,
    "examples": examples,
}


def run_suite(name: str, trials: Optional[int] = None, seed: int = 0) -> SuiteResult:
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None
    return fn(seed=seed) if trials is None else fn(trials=trials, seed=seed)
