"""Live-range splitting: ``split``, ``rename`` and ``clean``, and their composition.

Every phase works on one base variable at a time and returns a fresh
:class:`Function`; the input is never mutated.
"""

from __future__ import annotations

import copy
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Union

from .graphs import DomTree, dominator_tree, iterated_frontier
from .ir import (UNDEF, At, CfgIndex, Function, In, Move, Node, Out, Phi,
                 Program, Sigma, ValidationError, Var, node_defs)
from .strategy import SplittingStrategy, StrategyExpr, eval_strategy


@dataclass
class SplitReport:
    """What ``ssify`` inserted and what ``clean`` took back out.

    ``inserted`` and ``removed`` hold ``(base, node, kind)`` triples where
    kind is ``phi``, ``sigma`` or ``copy``.
    """

    inserted: list = field(default_factory=list)
    removed: list = field(default_factory=list)
    versions: dict = field(default_factory=dict)

    def counts(self) -> dict:
        ins = Counter(k for _, _, k in self.inserted)
        rem = Counter(k for _, _, k in self.removed)
        out = {}
        for kind in ("phi", "sigma", "copy"):
            out[kind] = ins[kind] - rem[kind]
        out["total"] = sum(out.values())
        return out

    @property
    def inserted_total(self) -> int:
        return len(self.inserted)

    @property
    def surviving(self) -> list:
        gone = Counter(self.removed)
        out = []
        for item in self.inserted:
            if gone[item]:
                gone[item] -= 1
            else:
                out.append(item)
        return out

    def to_text(self) -> str:
        c = self.counts()
        lines = [f"inserted {len(self.inserted)}",
                 f"removed {len(self.removed)}",
                 " ".join(f"{k}={c[k]}" for k in ("phi", "sigma", "copy", "total"))]
        for base, n in self.versions.items():
            lines.append(f"versions {base} {n}")
        for base, node, kind in self.surviving:
            lines.append(f"kept {kind} {base} {node}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# split


def _frontier_up(cfg: CfgIndex, rev: DomTree, i: Node) -> set:
    if i.kind == "in" and cfg.is_join(i.block):
        seeds = [(p, i.block) for p in cfg.preds[i.block]]
    else:
        seeds = [i.block]
    return iterated_frontier(rev, seeds)


def _frontier_down(cfg: CfgIndex, fwd: DomTree, i: Node) -> set:
    if i.kind == "out" and cfg.is_fork(i.block):
        seeds = [(i.block, s) for s in cfg.succs[i.block]]
    else:
        seeds = [i.block]
    return iterated_frontier(fwd, seeds)


def split_points(fn: Function, base: str, strategy: SplittingStrategy,
                 cfg: Optional[CfgIndex] = None,
                 trees: Optional[tuple] = None) -> set:
    """The node set ``S = P ∪ S↑ ∪ S↓`` of the split phase."""
    cfg = cfg or CfgIndex(fn)
    strategy.check(cfg)
    fwd, rev = trees or (dominator_tree(cfg), dominator_tree(cfg, "reverse"))
    s_up: set = set()
    for i in strategy.up:
        s_up |= {Out(b) for b in _frontier_up(cfg, rev, i)}
    defs = {n for n in cfg.nodes() if any(v.base == base for v in node_defs(fn, n))}
    s_down: set = set()
    for i in s_up | defs | set(strategy.down):
        s_down |= {In(b) for b in _frontier_down(cfg, fwd, i)}
    return set(strategy.nodes) | s_up | s_down


def _placement(cfg: CfgIndex, node: Node) -> Node:
    """Trivial In/Out nodes have no phi/sigma slot: copy at the nearest instruction."""
    if node.kind == "in" and not cfg.is_join(node.block):
        return At(node.block, 0)
    if node.kind == "out" and not cfg.is_fork(node.block):
        return At(node.block, cfg.sizes[node.block])
    return node


def split(fn: Function, base: str, strategy: SplittingStrategy,
          report: Optional[SplitReport] = None, trees: Optional[tuple] = None) -> Function:
    fn = copy.deepcopy(fn)
    cfg = CfgIndex(fn)
    targets = {_placement(cfg, n) for n in split_points(fn, base, strategy, cfg, trees)}
    v = Var(base)
    for node in sorted(targets, key=lambda n: (cfg.labels.index(n.block), n)):
        if any(x.base == base for x in node_defs(fn, node)):
            continue
        b = fn.block(node.block)
        if node.kind == "in":
            b.phis.append(Phi(v, {p: v for p in cfg.preds[b.label]}, inserted=True))
            kind = "phi"
        elif node.kind == "out":
            b.sigmas.append(Sigma(v, {s: v for s in cfg.succs[b.label]}, inserted=True))
            kind = "sigma"
        else:
            b.instr_at(node.index).copies.append(Move(v, v, inserted=True))
            kind = "copy"
        if report is not None:
            report.inserted.append((base, node, kind))
    return fn


# ---------------------------------------------------------------------------
# rename


class _Stack:
    """Version stack with the pop-until-dominates discipline.

    Sites are ``("pos", block, i)`` with ``i`` = 0 for the phis, ``k + 1``
    for instruction ``k`` and ``n + 2`` for the sigmas, or ``("edge", m, s)``
    for a sigma destination / phi operand on the CFG edge ``m -> s``.
    """

    def __init__(self, base: str, fwd: DomTree, cfg: CfgIndex):
        self.base = base
        self.fwd = fwd
        self.cfg = cfg
        self.items: list = []  # (Var, site)
        self.counter = 0
        self.def_site: dict = {}
        self.use_sites: dict = {}

    def _edge_dominates(self, m: str, s: str, block: str) -> bool:
        return self.fwd.edge_dominates_block(m, s, block)

    def dominates(self, d: tuple, t: tuple) -> bool:
        fwd = self.fwd
        if d[0] == "pos":
            _, b, i = d
            if t[0] == "pos":
                return i <= t[2] if b == t[1] else fwd.strictly_dominates(b, t[1])
            return fwd.dominates(b, t[1])
        _, m, s = d
        if t[0] == "edge":
            return t == d or self._edge_dominates(m, s, t[1])
        return self._edge_dominates(m, s, t[1])

    def fresh(self, site: tuple) -> Var:
        self.counter += 1
        v = Var(self.base, self.counter)
        self.def_site[v] = site
        return v

    def push(self, v: Var, site: tuple) -> None:
        self.items.append((v, site))

    def use(self, site: tuple) -> Var:
        while self.items and not self.dominates(self.items[-1][1], site):
            self.items.pop()
        if not self.items:
            return UNDEF
        v = self.items[-1][0]
        self.use_sites.setdefault(v, []).append(site)
        return v


def rename(fn: Function, base: str, fwd: Optional[DomTree] = None) -> Function:
    fn = copy.deepcopy(fn)
    cfg = CfgIndex(fn)
    fwd = fwd or dominator_tree(cfg)
    st = _Stack(base, fwd, cfg)
    plain = Var(base)
    on_use = lambda site: (lambda x: st.use(site) if x == plain else x)
    sigma_dst: dict = {}  # (m, s) -> fresh version

    def visit(label: str) -> None:
        b = fn.block(label)
        n = len(b.body)
        for p in cfg.preds[label]:
            if (p, label) in sigma_dst and fwd.edge_dominates_block(p, label, label):
                st.push(sigma_dst[(p, label)], ("edge", p, label))
        for phi in b.phis:
            if phi.dst == plain:
                phi.dst = st.fresh(("pos", label, 0))
                st.push(phi.dst, ("pos", label, 0))
        for k, inst in enumerate(b.interior()):
            site = ("pos", label, k + 1)
            inst.rewrite(on_use(site), lambda x: x)
            for m in inst.copies:
                m.src = on_use(site)(m.src)
            fresh: list = []

            def on_def(x):
                if x != plain:
                    return x
                nv = st.fresh(site)
                fresh.append(nv)
                return nv

            inst.rewrite(lambda x: x, on_def)
            for m in inst.copies:
                m.dst = on_def(m.dst)
            for nv in fresh:
                st.push(nv, site)
        out_site = ("pos", label, n + 2)
        for sig in b.sigmas:
            if sig.src == plain:
                sig.src = st.use(out_site)
            for s, d in list(sig.dsts.items()):
                if d == plain:
                    nv = st.fresh(("edge", label, s))
                    sig.dsts[s] = nv
                    sigma_dst[(label, s)] = nv
        for s in cfg.succs[label]:
            succ = fn.block(s)
            keyed = [phi for phi in succ.phis if phi.args.get(label) == plain]
            if not keyed:
                continue
            edge = ("edge", label, s)
            tmp = (label, s) in sigma_dst
            if tmp:
                st.push(sigma_dst[(label, s)], edge)
            for phi in keyed:
                phi.args[label] = st.use(edge)
            if tmp:
                st.items.pop()

    order = [fwd.root]
    i = 0
    while i < len(order):
        # preorder: children are inserted right after their parent
        node = order[i]
        order[i + 1:i + 1] = fwd.children[node]
        i += 1
    for label in order:
        visit(label)
    return fn


# ---------------------------------------------------------------------------
# clean


class _Entity:
    __slots__ = ("kind", "obj", "owner", "block", "index", "actual")

    def __init__(self, kind, obj, block, index=None, owner=None, actual=False):
        self.kind = kind
        self.obj = obj
        self.block = block
        self.index = index
        self.owner = owner
        self.actual = actual

    def uses(self) -> list:
        if self.kind == "phi":
            return list(self.obj.args.values())
        if self.kind == "sigma":
            return [self.obj.src]
        if self.kind == "copy":
            return [self.obj.src]
        return self.obj.uses() + [m.src for m in self.obj.copies if not m.inserted]

    def defs(self) -> list:
        if self.kind == "phi":
            return [self.obj.dst]
        if self.kind == "sigma":
            return list(self.obj.dsts.values())
        if self.kind == "copy":
            return [self.obj.dst]
        return self.obj.defs() + [m.dst for m in self.obj.copies if not m.inserted]

    def node(self) -> Node:
        if self.kind == "phi":
            return In(self.block)
        if self.kind == "sigma":
            return Out(self.block)
        return At(self.block, self.index)


def _entities(fn: Function) -> list:
    out = []
    for b in fn.blocks:
        for phi in b.phis:
            out.append(_Entity("phi", phi, b.label, actual=not phi.inserted))
        for k, inst in enumerate(b.interior()):
            out.append(_Entity("instr", inst, b.label, k, actual=True))
            for m in inst.copies:
                if m.inserted:
                    out.append(_Entity("copy", m, b.label, k, owner=inst))
        for sig in b.sigmas:
            out.append(_Entity("sigma", sig, b.label, actual=not sig.inserted))
    return out


def clean(fn: Function, base: str, report: Optional[SplitReport] = None) -> Function:
    fn = copy.deepcopy(fn)
    ents = _entities(fn)
    web = lambda xs: [x for x in xs if x.base == base and not x.is_undef]
    users: dict = {}
    definer: dict = {}
    for e in ents:
        for x in web(e.uses()):
            users.setdefault(x, []).append(e)
        for x in web(e.defs()):
            definer[x] = e

    defined: set = set()
    work = [e for e in ents if e.actual and web(e.defs())]
    while work:
        e = work.pop()
        for x in web(e.defs()):
            if x not in defined:
                defined.add(x)
                work.extend(users.get(x, ()))
    used: set = set()
    work = [e for e in ents if e.actual and web(e.uses())]
    while work:
        e = work.pop()
        for x in web(e.uses()):
            if x not in used:
                used.add(x)
                if x in definer:
                    work.append(definer[x])
    live = defined & used

    kill = lambda x: UNDEF if (x.base == base and not x.is_undef and x not in live) else x
    for e in ents:
        if e.actual or not (web(e.defs()) or web(e.uses())):
            continue
        if e.kind == "phi":
            e.obj.dst = kill(e.obj.dst)
            e.obj.args = {k: kill(x) for k, x in e.obj.args.items()}
        elif e.kind == "sigma":
            e.obj.src = kill(e.obj.src)
            e.obj.dsts = {k: kill(x) for k, x in e.obj.dsts.items()}
        else:
            e.obj.dst, e.obj.src = kill(e.obj.dst), kill(e.obj.src)
        if all(x.is_undef for x in e.defs()) or all(x.is_undef for x in e.uses()):
            b = fn.block(e.block)
            if e.kind == "phi":
                b.phis = [p for p in b.phis if p is not e.obj]
            elif e.kind == "sigma":
                b.sigmas = [s for s in b.sigmas if s is not e.obj]
            else:
                e.owner.copies = [m for m in e.owner.copies if m is not e.obj]
            if report is not None:
                report.removed.append((base, e.node(), "copy" if e.kind == "copy" else e.kind))
    return fn


# ---------------------------------------------------------------------------
# driver


def _check_unversioned(fn: Function) -> None:
    for v in fn.variables():
        if v.version is not None:
            raise ValidationError(
                f"ssify expects an unversioned program, found {v} in {fn.name!r}")


def ssify_function(fn: Function, strategies: Union[str, StrategyExpr, dict],
                   report: Optional[SplitReport] = None) -> Function:
    _check_unversioned(fn)
    report = report if report is not None else SplitReport()
    if not isinstance(strategies, dict):
        strategies = eval_strategy(strategies, fn)
    cfg = CfgIndex(fn)
    trees = (dominator_tree(cfg), dominator_tree(cfg, "reverse"))
    for n in [n for s in strategies.values() for n in s.nodes]:
        if not cfg.has_node(n):
            raise ValidationError(f"strategy node {n} is not in the CFG")
    out = fn
    for base in fn.bases():
        strat = strategies.get(base, SplittingStrategy())
        out = split(out, base, strat, report, trees)
        out = rename(out, base, trees[0])
        out = clean(out, base, report)
        report.versions[base] = len({v for v in out.variables() if v.base == base})
    return out


def ssify(program: Union[Program, Function],
          strategies: Union[str, StrategyExpr, dict]) -> tuple:
    """Split, rename and clean every variable; returns ``(program, report)``.

    ``strategies`` is a strategy expression or row name evaluated on the
    original program, or an explicit map from base name to
    :class:`SplittingStrategy` (missing bases get the empty strategy).
    """
    report = SplitReport()
    if isinstance(program, Function):
        return ssify_function(program, strategies, report), report
    fns = [ssify_function(f, strategies, report) for f in program.functions]
    return Program(fns), report
