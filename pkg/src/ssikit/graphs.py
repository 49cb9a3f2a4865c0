"""Dominance, post-dominance, frontiers and liveness."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import networkx as nx

from .ir import (CfgIndex, Function, Node, Program, Var, points, transitions)

EXIT = "<exit>"


@dataclass
class DomTree:
    """Dominator tree of the CFG (``forward``) or of its reverse (``reverse``).

    The reverse tree is rooted at the virtual block :data:`EXIT`.  ``preds``
    and ``succs`` describe the graph the tree was computed on, so for the
    reverse tree ``preds[b]`` are the CFG successors of ``b`` (plus
    ``EXIT`` when ``b`` returns or was given a synthetic exit edge).
    """

    direction: str
    root: str
    idom: dict
    order: dict
    children: dict
    preds: dict
    succs: dict
    synthetic: list

    def __post_init__(self) -> None:
        self._df: dict = {}
        self._pre: dict = {}
        self._post: dict = {}
        clock = 0
        stack = [(self.root, False)]
        while stack:
            b, done = stack.pop()
            if done:
                self._post[b] = clock
                clock += 1
                continue
            self._pre[b] = clock
            clock += 1
            stack.append((b, True))
            for c in reversed(self.children[b]):
                stack.append((c, False))

    @property
    def blocks(self) -> list:
        return list(self.order)

    def dominates(self, a: str, b: str) -> bool:
        return self._pre[a] <= self._pre[b] and self._post[b] <= self._post[a]

    def strictly_dominates(self, a: str, b: str) -> bool:
        return a != b and self.dominates(a, b)

    def frontier(self, block: str) -> set:
        if not self._df:
            self._df = _block_frontiers(self)
        if block not in self._df:
            raise KeyError(f"unknown block {block!r}")
        return set(self._df[block])

    def edge_frontier(self, u: str, w: str) -> set:
        """Frontier of a fictitious node placed on the CFG edge ``u -> w``."""
        head = w if self.direction == "forward" else u
        tail = u if self.direction == "forward" else w
        if tail not in self.preds.get(head, ()):
            raise KeyError(f"unknown edge {u}->{w}")
        # the fictitious node dominates head iff every other way into head
        # is a back edge from a block head already dominates
        others = [p for p in self.preds[head] if p != tail]
        if not self.dominates(head, tail) and all(self.dominates(head, p) for p in others):
            return self.frontier(head) - {head}
        return {head}

    def edge_dominates_block(self, u: str, w: str, block: str) -> bool:
        """Whether every path reaching ``block`` crosses the CFG edge ``u -> w``."""
        head = w if self.direction == "forward" else u
        tail = u if self.direction == "forward" else w
        others = [p for p in self.preds[head] if p != tail]
        return (not self.dominates(head, tail)
                and all(self.dominates(head, p) for p in others)
                and self.dominates(head, block))


def _chk_idoms(root: str, succs: dict, preds: dict) -> tuple:
    order: list = []
    seen = {root}
    stack = [(root, iter(succs[root]))]
    while stack:
        b, it = stack[-1]
        for w in it:
            if w not in seen:
                seen.add(w)
                stack.append((w, iter(succs[w])))
                break
        else:
            stack.pop()
            order.append(b)
    rpo = order[::-1]
    num = {b: i for i, b in enumerate(rpo)}
    idom: dict = {root: root}

    def intersect(a: str, b: str) -> str:
        while a != b:
            while num[a] > num[b]:
                a = idom[a]
            while num[b] > num[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for b in rpo[1:]:
            new = None
            for p in preds[b]:
                if p in idom:
                    new = p if new is None else intersect(p, new)
            if idom.get(b) != new:
                idom[b] = new
                changed = True
    idom[root] = None
    return idom, rpo


def _reverse_graph(cfg: CfgIndex) -> tuple:
    """Edge-reversed CFG rooted at EXIT, with synthetic exit edges.

    Blocks that cannot reach a return are handled sink SCC by sink SCC: the
    lowest reverse-postorder block of each such component gets an edge to
    the virtual exit, and the check repeats until every block reaches it.
    """
    rpo_num = {b: i for i, b in enumerate(cfg.rpo())}
    fwd = {b: list(cfg.succs[b]) for b in cfg.labels}
    fwd[EXIT] = []
    for b in cfg.labels:
        if not cfg.succs[b]:
            fwd[b].append(EXIT)
    synthetic: list = []
    while True:
        g = nx.DiGraph()
        g.add_nodes_from(fwd)
        g.add_edges_from((u, w) for u in fwd for w in fwd[u])
        reaching = nx.ancestors(g, EXIT) | {EXIT}
        stuck = [b for b in cfg.labels if b not in reaching]
        if not stuck:
            break
        sub = g.subgraph(stuck)
        cond = nx.condensation(sub)
        for c in cond.nodes:
            if cond.out_degree(c) == 0:
                members = cond.nodes[c]["members"]
                pick = min(members, key=lambda b: rpo_num.get(b, len(rpo_num)))
                fwd[pick].append(EXIT)
                synthetic.append(pick)
    rsuccs = {b: [] for b in fwd}
    rpreds = {b: list(fwd[b]) for b in fwd}
    for u in fwd:
        for w in fwd[u]:
            rsuccs[w].append(u)
    return rsuccs, rpreds, sorted(synthetic, key=lambda b: rpo_num.get(b, 0))


def dominator_tree(cfg: Union[CfgIndex, Function],
                   direction: str = "forward") -> DomTree:
    if isinstance(cfg, Function):
        cfg = CfgIndex(cfg)
    if direction == "forward":
        succs = {b: list(cfg.succs[b]) for b in cfg.labels}
        preds = {b: list(cfg.preds[b]) for b in cfg.labels}
        root, synthetic = cfg.entry, []
    elif direction == "reverse":
        succs, preds, synthetic = _reverse_graph(cfg)
        root = EXIT
    else:
        raise ValueError(f"direction must be forward or reverse, not {direction!r}")
    idom, rpo = _chk_idoms(root, succs, preds)
    children: dict = {b: [] for b in idom}
    # children in declaration order keeps every traversal deterministic
    decl = {b: i for i, b in enumerate([root] + cfg.labels)}
    for b in sorted(idom, key=lambda b: decl.get(b, len(decl))):
        if idom[b] is not None:
            children[idom[b]].append(b)
    order: dict = {}
    stack = [root]
    while stack:
        b = stack.pop()
        order[b] = len(order)
        stack.extend(reversed(children[b]))
    return DomTree(direction, root, idom, order, children,
                   {b: preds[b] for b in idom}, {b: succs[b] for b in idom},
                   synthetic)


def _block_frontiers(tree: DomTree) -> dict:
    df: dict = {b: set() for b in tree.idom}
    for b in tree.idom:
        ps = [p for p in tree.preds[b] if p in tree.idom]
        if len(ps) < 2:
            continue
        for p in ps:
            runner = p
            while runner is not None and runner != tree.idom[b]:
                df[runner].add(b)
                runner = tree.idom[runner]
    return df


def _seed_frontier(tree: DomTree, seed) -> set:
    if isinstance(seed, Node):
        return tree.frontier(seed.block)
    if isinstance(seed, tuple):
        return tree.edge_frontier(*seed)
    return tree.frontier(seed)


def dominance_frontier(tree: DomTree, target) -> set:
    """DF of a block label, a :class:`Node` (its block) or a CFG edge ``(u, w)``."""
    return _seed_frontier(tree, target)


def iterated_frontier(tree: DomTree, seeds: Iterable) -> set:
    result: set = set()
    work: deque = deque()
    for s in seeds:
        for z in _seed_frontier(tree, s):
            if z not in result:
                result.add(z)
                work.append(z)
    while work:
        z = work.popleft()
        for y in tree.frontier(z):
            if y not in result:
                result.add(y)
                work.append(y)
    return result


# ---------------------------------------------------------------------------
# liveness


@dataclass(frozen=True)
class LiveRange:
    variable: Union[Var, str]
    points: frozenset

    def __contains__(self, point) -> bool:
        return point in self.points


def liveness_sets(function: Function) -> dict:
    """Map every program point to the set of variables live there.

    Phi operands are read on their incoming edge and sigma destinations
    are written on their outgoing edge, because both are modelled as the
    moves of the corresponding edge transition.
    """
    cfg = CfgIndex(function)
    trans = transitions(function, cfg)
    live = {p: set() for p in points(function, cfg)}
    into: dict = {}
    for t in trans:
        into.setdefault(t.dst, []).append(t)
    work = deque(trans)
    queued = set(range(len(trans)))
    index = {id(t): i for i, t in enumerate(trans)}
    while work:
        t = work.popleft()
        queued.discard(index[id(t)])
        new = (live[t.dst] - t.defs) | t.uses
        if not new <= live[t.src]:
            live[t.src] |= new
            for t2 in into.get(t.src, ()):
                if index[id(t2)] not in queued:
                    queued.add(index[id(t2)])
                    work.append(t2)
    return live


def liveness(program: Union[Program, Function], v: Union[Var, str],
             live: Optional[dict] = None) -> LiveRange:
    """Points where ``v`` is live; a bare string matches every version."""
    fn = program.function() if isinstance(program, Program) else program
    live = live if live is not None else liveness_sets(fn)
    if isinstance(v, str):
        pts = frozenset(p for p, s in live.items() if any(x.base == v for x in s))
    else:
        pts = frozenset(p for p, s in live.items() if v in s)
    return LiveRange(v, pts)


def point_graph(function: Function) -> dict:
    """Successor map of the program-point graph (one edge per transition)."""
    succ: dict = {p: set() for p in points(function)}
    for t in transitions(function):
        succ[t.src].add(t.dst)
    return succ
