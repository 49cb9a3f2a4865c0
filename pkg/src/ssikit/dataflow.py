"""Dense and sparse solvers for partitioned-lattice-per-variable problems.

The dense solver computes the maximum fixed point over every program point
and every variable.  The sparse solver works on one constraint per
(version, defining node) for forward problems, or per (version, using node)
for backward ones, and keeps a single value per version.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .graphs import liveness_sets
from .ir import (CfgIndex, Function, Node, Program, Transition, Var, point_str,
                 points, transitions)
from .lattices import LatticeSpec


class SolverDiverged(RuntimeError):
    """Raised when a solver exceeds its iteration bound (a non-monotone client)."""


class ClientAnalysis:
    """A PLV client: a lattice plus a transfer function per transition.

    ``transfer(t, x, val)`` is the dense transfer function: for a forward
    client it maps the state before ``t`` (``val(var) -> element``) to the
    value of ``x`` after ``t``; for a backward client it maps the state
    after ``t`` to the value of ``x`` before it.
    """

    name = "client"
    direction = "forward"
    strategy = "empty"

    def lattice_for(self, fn: Function) -> LatticeSpec:
        raise NotImplementedError

    def transfer(self, t: Transition, x: Var, val: Callable) -> object:
        raise NotImplementedError

    def dependencies(self, t: Transition, x: Var) -> set:
        """Variables ``transfer(t, x, .)`` may read."""
        if self.direction == "forward":
            base = set(t.uses) | {x}
            if t.branch is not None:
                base.add(t.branch.var)
            return base
        return set(t.defs) | {x}

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


def _fn(program: Union[Program, Function]) -> Function:
    return program.function() if isinstance(program, Program) else program


# ---------------------------------------------------------------------------
# dense


@dataclass
class DenseResult:
    function: Function
    lattice: LatticeSpec
    values: dict  # point -> {Var: element}
    iterations: int = 0

    def value(self, point: tuple, v: Var):
        return self.values[point].get(v, self.lattice.top)

    def edge_labels(self, live: Optional[dict] = None) -> dict:
        """``{(u, w): {var: text}}`` for DOT export, limited to live variables."""
        live = live if live is not None else liveness_sets(self.function)
        out: dict = {}
        for p, state in self.values.items():
            if p[0] != "edge":
                continue
            out[(p[1], p[2])] = {str(v): self.lattice.show(state[v])
                                 for v in live[p] if v in state}
        return out

    def to_text(self, live_only: bool = True) -> str:
        live = liveness_sets(self.function) if live_only else None
        lines = []
        for p in points(self.function):
            for v in sorted(self.values[p]):
                if live is None or v in live[p]:
                    lines.append(f"{point_str(p)} {v} {self.lattice.show(self.values[p][v])}")
        return "\n".join(lines) + ("\n" if lines else "")


def solve_dense(program: Union[Program, Function], client: ClientAnalysis,
                mask: Optional[dict] = None, outside=None) -> DenseResult:
    """Maximum fixed point: all states start at top and only descend.

    ``mask`` maps a variable to the points where its natural transfer
    functions apply; elsewhere the variable is pinned to ``outside``
    (top by default).
    """
    fn = _fn(program)
    lat = client.lattice_for(fn)
    cfg = CfgIndex(fn)
    trans = transitions(fn, cfg)
    variables = fn.variables()
    top = lat.top
    pinned = top if outside is None else outside
    values = {p: {v: top for v in variables} for p in points(fn, cfg)}
    if mask is not None:
        for v, allowed in mask.items():
            for p, state in values.items():
                if p not in allowed:
                    state[v] = pinned
    fwd = client.direction == "forward"
    out_of: dict = {}
    for i, t in enumerate(trans):
        out_of.setdefault(t.src if fwd else t.dst, []).append(i)
    work = deque(range(len(trans)))
    queued = set(work)
    bound = 2 * len(trans) * (1 + lat.height * max(1, len(variables))) + 16
    steps = 0
    while work:
        i = work.popleft()
        queued.discard(i)
        steps += 1
        if steps > bound:
            raise SolverDiverged(
                f"dense solver for {client.name} exceeded {bound} steps: "
                "a transfer function is probably not monotone")
        t = trans[i]
        src, dst = (t.src, t.dst) if fwd else (t.dst, t.src)
        before = values[src]
        val = lambda x, s=before: top if x.is_undef else s.get(x, top)
        target = values[dst]
        changed = False
        for x in variables:
            if mask is not None and x in mask and dst not in mask[x]:
                continue
            new = lat.meet2(target[x], client.transfer(t, x, val))
            if new != target[x]:
                target[x] = new
                changed = True
        if changed:
            for j in out_of.get(dst, ()):
                if j not in queued:
                    queued.add(j)
                    work.append(j)
    return DenseResult(fn, lat, values, steps)


# ---------------------------------------------------------------------------
# sparse


@dataclass
class Constraint:
    """``[target] ⊑ G(operands)`` generated at control flow node ``site``."""

    site: Node
    target: Var
    operands: tuple
    G: Callable = field(compare=False)

    def __str__(self) -> str:
        ops = ", ".join(map(str, self.operands))
        return f"[{self.target}] <= G@{self.site}({ops})"


@dataclass
class SparseResult:
    lattice: LatticeSpec
    values: dict  # Var -> element
    iterations: int = 0

    def __getitem__(self, v: Var):
        return self.values.get(v, self.lattice.top)

    def to_text(self) -> str:
        return "".join(f"{v} {self.lattice.show(x)}\n"
                       for v, x in sorted(self.values.items()))


def _node_transitions(trans: list) -> dict:
    by: dict = {}
    for t in trans:
        by.setdefault(t.node, []).append(t)
    return by


def extract_sparse_system(program: Union[Program, Function],
                          client: ClientAnalysis, verify: bool = False) -> list:
    """One constraint per (version, defining node), or per (version, using node)
    for a backward client.

    With ``verify`` the SSI property is checked first and a violation raises
    :class:`ssikit.checks.SSIViolation` naming the failed sub-property.
    """
    fn = _fn(program)
    if verify:
        from .checks import require_ssi
        require_ssi(fn, client)
    lat = client.lattice_for(fn)
    cfg = CfgIndex(fn)
    trans = transitions(fn, cfg)
    fwd = client.direction == "forward"
    out = []
    for node, ts in _node_transitions(trans).items():
        if fwd:
            operands = set()
            for t in ts:
                operands |= t.uses
                if t.branch is not None and not t.branch.var.is_undef:
                    operands.add(t.branch.var)
            targets = {x for t in ts for x in t.defs}
        else:
            operands = {x for t in ts for x in t.defs}
            targets = {x for t in ts for x in t.uses}
        ops = tuple(sorted(operands))
        for x in sorted(targets):
            mine = [t for t in ts if x in (t.defs if fwd else t.uses)]
            out.append(Constraint(node, x, ops, _make_G(client, lat, mine, x)))
    order = {n: i for i, n in enumerate(cfg.nodes())}
    out.sort(key=lambda c: (order[c.site], c.target))
    return out


def _make_G(client: ClientAnalysis, lat: LatticeSpec, ts: list, x: Var) -> Callable:
    def G(env: dict):
        val = lambda y: lat.top if y.is_undef else env.get(y, lat.top)
        return lat.meet(*(client.transfer(t, x, val) for t in ts))
    return G


def solve_sparse(constraints: list, lattice: Union[LatticeSpec, ClientAnalysis],
                 program: Optional[Union[Program, Function]] = None) -> SparseResult:
    """FIFO worklist over constraint sites, re-queueing the sites that read a
    version whenever its value drops."""
    if isinstance(lattice, ClientAnalysis):
        lattice = lattice.lattice_for(_fn(program))
    lat = lattice
    values: dict = {}
    sites: dict = {}
    readers: dict = {}
    for c in constraints:
        values.setdefault(c.target, lat.top)
        for o in c.operands:
            values.setdefault(o, lat.top)
            readers.setdefault(o, [])
            if c.site not in readers[o]:
                readers[o].append(c.site)
        sites.setdefault(c.site, []).append(c)
    work = deque(sites)
    queued = set(sites)
    max_arity = max((len(c.operands) for c in constraints), default=0)
    bound = (lat.height + 1) * max(1, len(constraints)) * (max_arity + 1) + len(sites)
    steps = 0
    while work:
        site = work.popleft()
        queued.discard(site)
        steps += 1
        if steps > bound:
            raise SolverDiverged(f"sparse solver exceeded {bound} steps")
        for c in sites[site]:
            env = {o: values[o] for o in c.operands}
            new = lat.meet2(values[c.target], c.G(env))
            if new != values[c.target]:
                values[c.target] = new
                for s in readers.get(c.target, ()):
                    if s not in queued:
                        queued.add(s)
                        work.append(s)
    return SparseResult(lat, values, steps)


def solve(program: Union[Program, Function], client: ClientAnalysis) -> SparseResult:
    fn = _fn(program)
    res = solve_sparse(extract_sparse_system(fn, client), client, fn)
    for v in fn.variables():
        res.values.setdefault(v, res.lattice.top)
    return res


# ---------------------------------------------------------------------------
# comparison


@dataclass
class EquivalenceReport:
    checked: int
    divergences: list  # (point, var, dense value, sparse value)

    @property
    def ok(self) -> bool:
        return not self.divergences

    def first(self) -> Optional[tuple]:
        return self.divergences[0] if self.divergences else None

    def __str__(self) -> str:
        if self.ok:
            return f"equivalent ({self.checked} live (point, version) pairs)"
        p, v, d, s = self.divergences[0]
        return (f"{len(self.divergences)} divergences; first at {point_str(p)} "
                f"for {v}: dense {d} vs sparse {s}")


def check_equivalence(dense: DenseResult, sparse: SparseResult,
                      live: Optional[dict] = None) -> EquivalenceReport:
    """Compare the dense value of every version at every point of its live range
    with its single sparse value."""
    live = live if live is not None else liveness_sets(dense.function)
    checked = 0
    bad = []
    for p in points(dense.function):
        for v in sorted(live[p]):
            checked += 1
            d = dense.value(p, v)
            s = sparse[v]
            if d != s:
                bad.append((p, v, dense.lattice.show(d), sparse.lattice.show(s)))
    return EquivalenceReport(checked, bad)
