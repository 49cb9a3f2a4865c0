"""Structural and semantic checkers for renamed programs.

* :func:`ssa_violations` - one definition per version, and that definition
  dominates every use.
* :func:`overlap_violations` - no two versions of a base are live at the
  same point.
* :func:`ssi_violations` - the five static-single-information properties
  for a given client.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx

from .dataflow import ClientAnalysis, DenseResult, solve_dense
from .graphs import dominator_tree, liveness_sets, point_graph
from .ir import CfgIndex, Function, Var, point_str, transitions


class SSIViolation(Exception):
    def __init__(self, prop: str, detail: str):
        super().__init__(f"{prop}: {detail}")
        self.prop = prop
        self.detail = detail


# ---------------------------------------------------------------------------
# SSA discipline


def _sites(fn: Function) -> tuple:
    """Definition and use sites of every version.

    Sites are ``("pos", block, i)`` as in rename, or ``("edge", m, s)``.
    """
    defs: dict = {}
    uses: dict = {}
    add = lambda d, v, site: None if v.is_undef else d.setdefault(v, []).append(site)
    for b in fn.blocks:
        n = len(b.body)
        for phi in b.phis:
            add(defs, phi.dst, ("pos", b.label, 0))
            for p, a in phi.args.items():
                add(uses, a, ("edge", p, b.label))
        for k, inst in enumerate(b.interior()):
            for v in inst.all_defs():
                add(defs, v, ("pos", b.label, k + 1))
            for v in inst.all_uses():
                add(uses, v, ("pos", b.label, k + 1))
        for sig in b.sigmas:
            add(uses, sig.src, ("pos", b.label, n + 2))
            for s, d in sig.dsts.items():
                add(defs, d, ("edge", b.label, s))
    return defs, uses


def ssa_violations(fn: Function) -> list:
    cfg = CfgIndex(fn)
    dom = dominator_tree(cfg)
    defs, uses = _sites(fn)
    out = []

    def dominates(d: tuple, u: tuple, same_node_ok: bool) -> bool:
        if d[0] == "pos":
            if u[0] == "pos":
                if d[1] == u[1]:
                    return d[2] < u[2] or (same_node_ok and d[2] == u[2])
                return dom.strictly_dominates(d[1], u[1])
            return dom.dominates(d[1], u[1])
        _, m, s = d
        if u[0] == "edge" and u == d:
            return True
        return dom.edge_dominates_block(m, s, u[1])

    for v, ds in defs.items():
        if len(ds) > 1:
            out.append(f"{v} defined {len(ds)} times")
    for v, us in uses.items():
        if v not in defs:
            if v.version is not None:
                out.append(f"{v} used but never defined")
            continue
        d = defs[v][0]
        for u in us:
            if not dominates(d, u, False):
                out.append(f"definition of {v} does not dominate its use at {u}")
    return out


def overlap_violations(fn: Function, live: Optional[dict] = None) -> list:
    live = live if live is not None else liveness_sets(fn)
    out = []
    for p, vs in live.items():
        seen: dict = {}
        for v in sorted(vs):
            if v.base in seen:
                out.append(f"{seen[v.base]} and {v} both live at {point_str(p)}")
            else:
                seen[v.base] = v
    return out


# ---------------------------------------------------------------------------
# static single information


@dataclass
class SSIReport:
    violations: dict = field(default_factory=lambda: {
        "SPLIT-DEF": [], "SPLIT-MEET": [], "INFO": [], "LINK": [], "VERSION": []})

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def first(self) -> Optional[tuple]:
        for prop, vs in self.violations.items():
            if vs:
                return prop, vs[0]
        return None

    def summary(self) -> str:
        return " ".join(f"{k}={len(v)}" for k, v in self.violations.items())


class _Recorder:
    def __init__(self, env: dict, top):
        self.env = env
        self.top = top
        self.read: set = set()

    def __call__(self, x: Var):
        if x.is_undef:
            return self.top
        self.read.add(x)
        return self.env.get(x, self.top)


def _probe(client, t, x, lat, rng, n_samples: int = 6) -> tuple:
    """Sample ``F_t,x``: returns (is identity, is constant top, variables read)."""
    samples = list(lat.samples)
    names = sorted(set(t.uses) | set(t.defs) | {x}
                   | ({t.branch.var} if t.branch is not None else set()))
    names = [n for n in names if not n.is_undef]
    identity = True
    const_top = True
    read: set = set()
    states = []
    for s in samples:
        env = {n: rng.choice(samples) for n in names}
        env[x] = s
        states.append(env)
    for _ in range(n_samples):
        states.append({n: rng.choice(samples) for n in names})
    for env in states:
        rec = _Recorder(env, lat.top)
        y = client.transfer(t, x, rec)
        read |= rec.read
        if y != env.get(x, lat.top):
            identity = False
        if y != lat.top:
            const_top = False
    return identity, const_top, read


def _depends_on(client, t, x, u, lat, rng) -> bool:
    samples = list(lat.samples)
    names = sorted(set(t.uses) | set(t.defs) | {x, u})
    for _ in range(8):
        env = {n: rng.choice(samples) for n in names}
        base = client.transfer(t, x, _Recorder(env, lat.top))
        for s in samples:
            env2 = dict(env)
            env2[u] = s
            if client.transfer(t, x, _Recorder(env2, lat.top)) != base:
                return True
    return False


def ssi_violations(fn: Function, client: ClientAnalysis,
                   dense: Optional[DenseResult] = None, seed: int = 0,
                   strict_meet: bool = False) -> SSIReport:
    """Check the five SSI properties of ``fn`` for ``client``.

    A meet node compares the values of ``v`` on the neighbouring edges where
    ``v`` is live.  Edges outside the live range carry top, the meet
    identity, so they cannot lose information; ``strict_meet`` compares all
    neighbours anyway, which is the literal reading of the meet-node
    definition and flags backward forks whose dead side is a killing loop.
    """
    rep = SSIReport()
    v_ = rep.violations
    rng = random.Random(seed)
    cfg = CfgIndex(fn)
    trans = transitions(fn, cfg)
    live = liveness_sets(fn)
    lat = client.lattice_for(fn)
    fwd = client.direction == "forward"
    dense = dense or solve_dense(fn, client)

    for t in trans:
        # p is the point the transfer function writes; s the one it reads
        p, s = (t.dst, t.src) if fwd else (t.src, t.dst)
        node_uses = set(t.uses) | ({t.branch.var} if t.branch is not None else set())
        for x in sorted(live[p]):
            identity, const_top, read = _probe(client, t, x, lat, rng)
            if not identity and not const_top:
                if fwd and x not in t.defs:
                    v_["SPLIT-DEF"].append(
                        f"{t.node} changes {x} on {point_str(s)}->{point_str(p)} "
                        "without defining it")
                if not fwd and (x not in t.uses or x in live[s]):
                    v_["SPLIT-DEF"].append(
                        f"{t.node} changes {x} on {point_str(p)}<-{point_str(s)} "
                        "without a last use of it")
            allowed = node_uses if fwd else set(t.defs)
            for u in sorted(read - {x} - allowed):
                if _depends_on(client, t, x, u, lat, rng):
                    v_["LINK"].append(
                        f"transfer of {x} at {t.node} depends on {u}, "
                        f"which the node does not {'use' if fwd else 'define'}")

    # meet nodes: joins for forward problems, forks for backward ones
    for b in fn.blocks:
        label = b.label
        n = len(b.body)
        if fwd and cfg.is_join(label):
            p = ("pt", label, 0)
            neighbours = [("edge", q, label) for q in cfg.preds[label]]
            carried = {phi.dst for phi in b.phis}
            kind = "phi"
        elif not fwd and cfg.is_fork(label):
            p = ("pt", label, n + 1)
            neighbours = [("edge", label, q) for q in cfg.succs[label]]
            carried = {sig.src for sig in b.sigmas}
            kind = "sigma"
        else:
            continue
        for x in sorted(live[p]):
            if x in carried:
                continue
            vals = {dense.value(q, x) for q in neighbours
                    if strict_meet or x in live[q]}
            if len(vals) > 1:
                v_["SPLIT-MEET"].append(
                    f"{point_str(p)} is a meet node for {x} "
                    f"({', '.join(sorted(map(lat.show, vals)))}) without a {kind}")

    mask = {}
    for q, vs in live.items():
        for x in vs:
            mask.setdefault(x, set()).add(q)
    for x in fn.variables():
        mask.setdefault(x, set())
    masked = solve_dense(fn, client, mask=mask)
    for q, vs in live.items():
        for x in sorted(vs):
            a, c = dense.value(q, x), masked.value(q, x)
            if a != c:
                v_["INFO"].append(
                    f"{x} at {point_str(q)}: {lat.show(a)} naturally, "
                    f"{lat.show(c)} with out-of-range points pinned to top")

    graph = nx.Graph()
    for src, dsts in point_graph(fn).items():
        for d in dsts:
            graph.add_edge(src, d)
    for x, pts in mask.items():
        if len(pts) > 1 and not nx.is_connected(graph.subgraph(pts)):
            v_["VERSION"].append(f"live range of {x} is not connected")
    return rep


def require_ssi(fn: Function, client: ClientAnalysis) -> None:
    rep = ssi_violations(fn, client)
    first = rep.first()
    if first is not None:
        raise SSIViolation(*first)
