"""Sparse evaluation graphs for forward partitioned-variable problems.

A SEG for variable ``v`` has an entry node, one node per control flow node
with a non-identity transfer function for ``v``, and one meet node per
block in the iterated dominance frontier of those.  Edges link every node
to its nearest dominator among the SEG nodes (for meet nodes, the nearest
dominator of each CFG predecessor), and the map ``M`` sends every program
point to the SEG node whose value holds there.

:func:`check_isomorphism` compares a SEG with the program obtained by
augmenting ``v`` with pseudo definitions and uses (see :func:`augment`)
and splitting it downward at the SEG's entry and transfer nodes.  Three
correspondences are checked: definitions to SEG nodes, live ranges to
``M`` and def-use chains to SEG edges.

Only forward SEGs are built.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .dataflow import ClientAnalysis
from .graphs import DomTree, dominator_tree, iterated_frontier, liveness_sets
from .ir import (At, CfgIndex, ConstDef, Function, In, Node, Program,
                 Ret, Use, Var, points, point_str)
from .generate import generate_program
from .lattices import LatticeSpec, method_sets
from .ssify import SplitReport, ssify_function
from .strategy import SplittingStrategy


class SegError(ValueError):
    pass


# ---------------------------------------------------------------------------
# partitioned-variable clients


class PartitionedClient(ClientAnalysis):
    """A forward client whose facts about ``v`` depend on ``v`` alone."""

    partitioned = True
    direction = "forward"

    def lattice_for(self, fn: Function) -> LatticeSpec:
        sites = [str(Node("inst", b.label, k)) for b in fn.blocks
                 for k in range(len(b.body) + 1)]
        return method_sets(sites)

    def transfer_nodes(self, fn: Function, v: str) -> set:
        raise NotImplementedError


def _site(t) -> str:
    return str(t.node)


class ReachingDefinitions(PartitionedClient):
    """Which definitions of ``v`` may reach a point."""

    name = "reaching-defs"
    strategy = "defs_down"

    def transfer(self, t, x: Var, val):
        if x in t.defs and t.inst is not None:
            return frozenset([_site(t)])
        return val(x)

    def transfer_nodes(self, fn: Function, v: str) -> set:
        return {At(b.label, k) for b in fn.blocks
                for k, inst in enumerate(b.interior())
                if any(d.base == v for d in inst.all_defs())}


class ReachingUses(PartitionedClient):
    """Which uses of ``v`` may have been executed since its last definition."""

    name = "reaching-uses"
    strategy = "defs_down+uses_down"

    def transfer(self, t, x: Var, val):
        if t.inst is None:
            return val(x)
        if x in t.defs:
            return frozenset()
        if x in t.uses:
            return val(x) | {_site(t)}
        return val(x)

    def transfer_nodes(self, fn: Function, v: str) -> set:
        return {At(b.label, k) for b in fn.blocks
                for k, inst in enumerate(b.interior())
                if any(x.base == v for x in inst.all_defs() + inst.all_uses())}


PVP_CLIENTS = {"reaching-defs": ReachingDefinitions, "reaching-uses": ReachingUses}


# ---------------------------------------------------------------------------
# node-level dominance


def _key(fn_blocks: dict, n: Node) -> int:
    if n.kind == "in":
        return -1
    if n.kind == "out":
        return len(fn_blocks[n.block].body) + 1
    return n.index


class _NodeDom:
    """Dominance between control flow nodes, derived from the block tree."""

    def __init__(self, fn: Function, tree: DomTree):
        self.blocks = {b.label: b for b in fn.blocks}
        self.tree = tree

    def dominates(self, a: Node, c: Node) -> bool:
        if a.block == c.block:
            return _key(self.blocks, a) <= _key(self.blocks, c)
        return self.tree.strictly_dominates(a.block, c.block)

    def nearest(self, c: Node, among: set, strict: bool) -> Optional[Node]:
        """Closest node of ``among`` that dominates ``c``."""
        by_block: dict = {}
        for n in among:
            by_block.setdefault(n.block, []).append(n)
        label = c.block
        limit = _key(self.blocks, c)
        while label is not None:
            cands = [n for n in by_block.get(label, ())
                     if _key(self.blocks, n) < limit
                     or (_key(self.blocks, n) == limit and not strict)]
            if cands:
                return max(cands, key=lambda n: _key(self.blocks, n))
            label = self.tree.idom.get(label)
            limit = float("inf")
            strict = False
        return None


# ---------------------------------------------------------------------------
# the graph


@dataclass
class SparseEvaluationGraph:
    variable: str
    entry: Node
    transfer: frozenset
    meet: frozenset
    edges: frozenset  # (source node, target node)
    mapping: dict  # program point -> node
    function: Function = field(repr=False, default=None)

    @property
    def nodes(self) -> frozenset:
        return frozenset({self.entry}) | self.transfer | self.meet

    def to_dot(self) -> str:
        names = {n: f"n{i}" for i, n in enumerate(sorted(self.nodes))}
        lines = [f'digraph "seg_{self.variable}" {{']
        for n, name in names.items():
            shape = "diamond" if n in self.meet else (
                "doublecircle" if n == self.entry else "box")
            lines.append(f'  {name} [label="{n}", shape={shape}];')
        for a, b in sorted(self.edges):
            lines.append(f"  {names[a]} -> {names[b]};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        lines = [f"seg {self.variable}",
                 f"  entry {self.entry}",
                 "  transfer " + " ".join(map(str, sorted(self.transfer))),
                 "  meet " + " ".join(map(str, sorted(self.meet)))]
        lines += [f"  edge {a} -> {b}" for a, b in sorted(self.edges)]
        return "\n".join(lines) + "\n"


def _transfer_set(fn: Function, v: str, transfer) -> set:
    if isinstance(transfer, ClientAnalysis):
        if not getattr(transfer, "partitioned", False):
            raise SegError(
                f"{transfer.name} is not a partitioned-variable problem: its "
                "transfer functions read other variables, and a sparse "
                "evaluation graph only models one variable at a time")
        if transfer.direction != "forward":
            raise SegError("only forward sparse evaluation graphs are supported")
        return set(transfer.transfer_nodes(fn, v))
    return set(transfer)


def build_seg(program: Union[Program, Function], v: str,
              transfer: Union[ClientAnalysis, Iterable[Node]]) -> SparseEvaluationGraph:
    """SEG of ``v``; ``transfer`` is a partitioned client or an explicit node set.

    The entry node is the first node of the entry block.
    """
    fn = program.function() if isinstance(program, Program) else program
    cfg = CfgIndex(fn)
    tree = dominator_tree(cfg)
    dom = _NodeDom(fn, tree)
    entry = At(fn.entry, 0)
    tnodes = _transfer_set(fn, v, transfer)
    for n in tnodes:
        if not cfg.has_node(n):
            raise SegError(f"transfer node {n} is not in the CFG")
    P = tnodes | {entry}
    meet = {In(b) for b in iterated_frontier(tree, sorted({n.block for n in P}))}
    S = P | meet
    edges = set()
    for m in meet:
        for p in cfg.preds[m.block]:
            q = dom.nearest(Node("out", p), S, strict=False)
            edges.add((q, m))
    for p in P - {entry}:
        q = dom.nearest(p, S, strict=True)
        if q is not None:
            edges.add((q, p))
    mapping = {}
    for pt in points(fn, cfg):
        mapping[pt] = dom.nearest(_source(fn, pt), S, strict=False)
    return SparseEvaluationGraph(v, entry, frozenset(tnodes - {entry}),
                                 frozenset(meet), frozenset(edges), mapping, fn)


def _source(fn: Function, pt: tuple) -> Node:
    """The control flow node immediately before program point ``pt``."""
    if pt[0] == "edge":
        return Node("out", pt[1])
    _, b, k = pt
    return In(b) if k == 0 else At(b, k - 1)


# ---------------------------------------------------------------------------
# the SSI side


@dataclass
class Augmented:
    """``fn`` with pseudo operations on ``v``; ``node_map`` sends original
    instruction nodes to their new positions."""

    function: Function
    node_map: dict
    gaps: set  # points between a pseudo use and the operation it stands in for


def augment(program: Union[Program, Function], v: str) -> Augmented:
    """Pseudo definition of ``v`` at the start of the entry block, and a pseudo
    use in front of every definition of ``v`` and every return."""
    fn = program.function() if isinstance(program, Program) else program
    var = Var(v)
    out = copy.deepcopy(fn)
    node_map = {}
    gaps = set()
    for b in out.blocks:
        body = []
        if b.label == out.entry:
            body.append(ConstDef(var, 0, pseudo=True))
        for k, inst in enumerate(b.interior()):
            if any(d.base == v for d in inst.all_defs()) or isinstance(inst, Ret):
                body.append(Use(var, pseudo=True))
                gaps.add(("pt", b.label, len(body)))
            node_map[At(b.label, k)] = At(b.label, len(body))
            body.append(inst)
        b.term = body.pop()
        b.body = body
    return Augmented(out, node_map, gaps)


def theorem_program(program: Union[Program, Function], v: str,
                    transfer: Union[ClientAnalysis, Iterable[Node]]) -> tuple:
    """Augment ``v`` and split it downward at the entry and transfer nodes.

    Returns ``(augmented, ssified function, seg)`` where the SEG is built on
    the augmented function, whose transfer nodes are the images of the
    original ones.
    """
    fn = program.function() if isinstance(program, Program) else program
    original = _transfer_set(fn, v, transfer)
    for n in original:
        if n.kind == "inst" and isinstance(fn.block(n.block).instr_at(n.index), Ret):
            raise SegError(f"transfer node {n} is a return: the value it "
                           "produces is never observed")
    aug = augment(fn, v)
    tnodes = {aug.node_map[n] for n in original}
    seg = build_seg(aug.function, v, tnodes)
    down = frozenset(seg.transfer | {seg.entry})
    ssified = ssify_function(aug.function, {v: SplittingStrategy(down=down)}, SplitReport())
    return aug, ssified, seg


@dataclass
class IsomorphismReport:
    variable: str
    mismatches: list
    nodes: int = 0
    points: int = 0
    edges: int = 0

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def __str__(self) -> str:
        if self.ok:
            return (f"{self.variable}: isomorphic ({self.nodes} nodes, "
                    f"{self.edges} edges, {self.points} points)")
        return f"{self.variable}: {len(self.mismatches)} mismatches; first: {self.mismatches[0]}"


def _def_nodes(fn: Function, v: str) -> dict:
    out = {}
    for b in fn.blocks:
        for phi in b.phis:
            if phi.dst.base == v:
                out.setdefault(phi.dst, []).append(In(b.label))
        for k, inst in enumerate(b.interior()):
            for d in inst.all_defs():
                if d.base == v:
                    out.setdefault(d, []).append(At(b.label, k))
        for sig in b.sigmas:
            for d in sig.dsts.values():
                if d.base == v:
                    out.setdefault(d, []).append(Node("out", b.label))
    return out


def check_isomorphism(seg: SparseEvaluationGraph, ssified: Union[Program, Function],
                      v: Optional[str] = None,
                      gaps: Iterable = ()) -> IsomorphismReport:
    """Check the three correspondences between ``seg`` and ``ssified``.

    ``ssified`` must come from :func:`theorem_program` (or the same recipe).
    ``gaps`` are points where ``v`` may be dead: the pseudo uses sit just
    before the definition or return they stand in for, so the single point
    between them is live only if that operation also reads ``v``.  Points
    after a return and before the start node may be dead too.
    """
    fn = ssified.function() if isinstance(ssified, Program) else ssified
    v = v or seg.variable
    rep = IsomorphismReport(v, [])
    bad = rep.mismatches

    has_entry_def = any(isinstance(i, ConstDef) and i.pseudo and i.dst.base == v
                        for i in fn.block(fn.entry).body[:1])
    has_exit_use = all(
        b.body and isinstance(b.body[-1], Use) and b.body[-1].pseudo
        for b in fn.blocks if isinstance(b.term, Ret))
    if not (has_entry_def and has_exit_use):
        raise SegError(f"{fn.name} lacks the pseudo definition/uses of {v}; "
                       "build it with theorem_program")

    # definitions <-> SEG nodes
    defs = _def_nodes(fn, v)
    site_of = {}
    for x, sites in defs.items():
        if len(sites) != 1:
            bad.append(f"{x} has {len(sites)} definitions")
        site_of[x] = sites[0]
    by_site: dict = {}
    for x, s in site_of.items():
        by_site.setdefault(s, []).append(x)
    for s, xs in by_site.items():
        if len(xs) > 1:
            bad.append(f"{s} defines {len(xs)} versions of {v}")
    def_sites = set(by_site)
    for n in sorted(seg.nodes - def_sites):
        bad.append(f"SEG node {n} has no definition of {v}")
    for n in sorted(def_sites - seg.nodes):
        bad.append(f"definition at {n} has no SEG node")
    rep.nodes = len(seg.nodes)

    # live ranges <-> M
    live = liveness_sets(fn)
    gaps = set(gaps)
    for pt in points(fn):
        here = [x for x in live[pt] if x.base == v]
        # points before the start node are not dominated by any SEG node
        if not here and (pt in gaps or _after_return(fn, pt)
                         or seg.mapping.get(pt) is None):
            continue
        rep.points += 1
        if len(here) != 1:
            bad.append(f"{len(here)} versions of {v} live at {point_str(pt)}")
            continue
        got = site_of.get(here[0])
        if got != seg.mapping.get(pt):
            bad.append(f"{point_str(pt)}: live range of {here[0]} starts at {got}, "
                       f"M gives {seg.mapping.get(pt)}")

    # def-use chains <-> edges
    chains = set()
    for b in fn.blocks:
        for phi in b.phis:
            if phi.dst.base == v:
                for p, a in phi.args.items():
                    chains.add((site_of.get(a), In(b.label)))
        for k, inst in enumerate(b.interior()):
            n = At(b.label, k)
            if n in seg.transfer:
                used = [x for x in inst.all_uses() if x.base == v]
                if not used and k > 0:
                    # a definition: its pseudo use sits just before it
                    prev = b.interior()[k - 1]
                    if prev.pseudo and isinstance(prev, Use):
                        used = [prev.src]
                for x in used[:1]:
                    chains.add((site_of.get(x), n))
    rep.edges = len(seg.edges)
    for e in sorted(chains - seg.edges, key=str):
        bad.append(f"def-use chain {e[0]} -> {e[1]} has no SEG edge")
    for e in sorted(seg.edges - chains, key=str):
        bad.append(f"SEG edge {e[0]} -> {e[1]} has no def-use chain")
    return rep


def _after_return(fn: Function, pt: tuple) -> bool:
    if pt[0] != "pt":
        return False
    b = fn.block(pt[1])
    return isinstance(b.term, Ret) and pt[2] >= len(b.body)


def random_instance(seed: int, max_blocks: int = 8) -> tuple:
    """A generated program, one of its variables and a random transfer set.

    The transfer set always contains the definitions of the variable and
    never a return.  Returns ``(program, variable, nodes)``; ``variable`` is
    None when the program has no variables.
    """
    rng = random.Random(seed)
    program = generate_program(seed, max_blocks=max_blocks)
    fn = program.function()
    if not fn.bases():
        return program, None, set()
    v = rng.choice(sorted(fn.bases()))
    nodes = [At(b.label, k) for b in fn.blocks for k in range(len(b.body) + 1)
             if not (k == len(b.body) and isinstance(b.term, Ret))]
    chosen = set(rng.sample(nodes, rng.randint(0, len(nodes))))
    defs = {n for n in ReachingDefinitions().transfer_nodes(fn, v) if n in set(nodes)}
    return program, v, chosen | defs


def seg_equivalence(program: Union[Program, Function], v: str,
                    transfer: Union[ClientAnalysis, Iterable[Node]]) -> IsomorphismReport:
    """Build both sides for ``v`` and compare them."""
    aug, ssified, seg = theorem_program(program, v, transfer)
    return check_isomorphism(seg, ssified, v, aug.gaps)
