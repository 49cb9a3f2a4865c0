"""Slow, definition-level reference implementations used by the tests.

Nothing here is clever on purpose: dominance is decided by deleting a node
and checking reachability, frontiers follow their textbook definition, and
edge frontiers physically insert the fictitious node.
"""

from __future__ import annotations

from .ir import CfgIndex


def _reach(root: str, succs: dict, removed=None) -> set:
    if root == removed:
        return set()
    seen = {root}
    stack = [root]
    while stack:
        u = stack.pop()
        for w in succs.get(u, ()):
            if w != removed and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def brute_dominators(root: str, succs: dict) -> dict:
    """``dom[b]`` = every node lying on all root-to-``b`` paths."""
    nodes = _reach(root, succs)
    dom = {b: {b} for b in nodes}
    for a in nodes:
        if a == root:
            for b in nodes:
                dom[b].add(root)
            continue
        without = _reach(root, succs, removed=a)
        for b in nodes - without:
            dom[b].add(a)
    return dom


def brute_idoms(root: str, succs: dict) -> dict:
    dom = brute_dominators(root, succs)
    idom = {root: None}
    for b, ds in dom.items():
        if b == root:
            continue
        strict = ds - {b}
        # the immediate dominator is the strict dominator dominated by all others
        idom[b] = next(d for d in strict if strict <= dom[d])
    return idom


def brute_frontier(root: str, succs: dict, n: str) -> set:
    dom = brute_dominators(root, succs)
    preds: dict = {b: [] for b in dom}
    for u in dom:
        for w in succs.get(u, ()):
            if w in preds:
                preds[w].append(u)
    return {z for z in dom
            if any(n in dom[p] for p in preds[z])
            and not (n in dom[z] and n != z)}


def brute_edge_frontier(root: str, succs: dict, u: str, w: str) -> set:
    """Insert a fictitious node on ``u -> w`` and take its frontier."""
    fict = ("fict", u, w)
    g = {b: [fict if (b == u and x == w) else x for x in xs]
         for b, xs in succs.items()}
    g[fict] = [w]
    return brute_frontier(root, g, fict) - {fict}


def brute_iterated_frontier(frontier, seeds) -> set:
    """Naive re-application of ``frontier`` until nothing changes."""
    current: set = set()
    for s in seeds:
        current |= frontier(s)
    while True:
        nxt = set(current)
        for z in current:
            nxt |= frontier(z)
        if nxt == current:
            return current
        current = nxt


def forward_graph(cfg: CfgIndex) -> tuple:
    return cfg.entry, {b: list(cfg.succs[b]) for b in cfg.labels}


def reverse_graph(tree) -> tuple:
    """Root and successor map of the graph a reverse DomTree was built on."""
    return tree.root, {b: list(tree.succs[b]) for b in tree.succs}
