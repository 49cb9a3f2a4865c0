"""Live-range splitting strategies and the small expression language for them.

A strategy expression is a ``+``-separated list of atoms such as
``defs_down+out_conds_down``; named rows (``abcd``, ``ssi``, ...) expand to
such expressions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .ir import (Branch, CfgIndex, Function, Node, Out, Program, ValidationError,
                 defs_uses)


@dataclass(frozen=True)
class SplittingStrategy:
    """Origins of forward (``down``) and backward (``up``) information for one variable."""

    down: frozenset = field(default_factory=frozenset)
    up: frozenset = field(default_factory=frozenset)

    @property
    def nodes(self) -> frozenset:
        return self.down | self.up

    def __or__(self, other: "SplittingStrategy") -> "SplittingStrategy":
        return SplittingStrategy(self.down | other.down, self.up | other.up)

    def __le__(self, other: "SplittingStrategy") -> bool:
        return self.down <= other.down and self.up <= other.up

    def check(self, cfg: CfgIndex) -> None:
        for n in sorted(self.nodes):
            if not cfg.has_node(n):
                raise ValidationError(f"strategy node {n} is not in the CFG")


ATOMS = ("defs_down", "uses_down", "uses_up", "last_uses_up", "conds_down",
         "conds_up", "out_conds_down", "out_conds_up", "out_conds_eq_down",
         "out_conds_eq_up")

ROWS = {
    "constprop": "defs_down",
    "defs-down": "defs_down",
    "ssi": "defs_down+last_uses_up",
    "pre": "defs_down+last_uses_up",
    "abcd": "defs_down+out_conds_down",
    "taint": "defs_down+out_conds_down",
    "range": "defs_down+out_conds_down",
    "ccp": "defs_down+out_conds_eq_down",
    "stephenson": "defs_down+out_conds_down+uses_up",
    "mahlke": "defs_down+uses_up",
    "uses-up": "uses_up",
    "classinf": "uses_up",
    "hochstadt": "uses_up+out_conds_up",
    "nullptr": "defs_down+uses_down",
    "defs-uses-down": "defs_down+uses_down",
    "empty": "",
}


@dataclass(frozen=True)
class StrategyExpr:
    atoms: frozenset

    def __str__(self) -> str:
        return "+".join(a for a in ATOMS if a in self.atoms)

    def __le__(self, other: "StrategyExpr") -> bool:
        return self.atoms <= other.atoms


def parse_strategy(text: Union[str, StrategyExpr]) -> StrategyExpr:
    """Row name or atom expression; ``-`` and ``_`` are interchangeable in atoms."""
    if isinstance(text, StrategyExpr):
        return text
    key = text.strip().lower()
    if key in ROWS:
        key = ROWS[key]
    atoms = set()
    for tok in key.replace(" ", "").split("+"):
        if not tok:
            continue
        tok = tok.replace("-", "_")
        if tok not in ATOMS:
            raise ValueError(
                f"unknown strategy atom {tok!r}; expected a row "
                f"({', '.join(ROWS)}) or atoms ({', '.join(ATOMS)})")
        atoms.add(tok)
    return StrategyExpr(frozenset(atoms))


def _equality_test(fn: Function, node: Node) -> bool:
    term = fn.block(node.block).term
    return isinstance(term, Branch) and term.relop in ("==", "!=")


def ssa_last_uses(fn: Function) -> dict:
    """Per base, the nodes holding a last use of some SSA version of it.

    The program is first put in pruned SSA form (``Defs`` strategy); a phi
    operand then counts as a use at its join node, and a use is last when
    the version it reads is dead right after the node.
    """
    from .graphs import liveness_sets
    from .ir import _live_after_node, node_uses
    from .ssify import ssify_function

    ssa = ssify_function(fn, "defs_down")
    cfg = CfgIndex(ssa)
    live = liveness_sets(ssa)
    out: dict = {b: set() for b in fn.bases()}
    for node in cfg.nodes():
        after = _live_after_node(cfg, live, node)
        for x in node_uses(ssa, node):
            if not x.is_undef and x not in after:
                out.setdefault(x.base, set()).add(node)
    return out


def strategy_for(fn: Function, base: str, expr: StrategyExpr,
                 last_uses=None) -> SplittingStrategy:
    du = defs_uses(fn, base) if expr.atoms else None
    down: set = set()
    up: set = set()
    a = expr.atoms
    if not a:
        return SplittingStrategy()
    conds_out = {Out(n.block) for n in du.conds}
    conds_eq_out = {Out(n.block) for n in du.conds if _equality_test(fn, n)}
    if "defs_down" in a:
        down |= du.defs
    if "uses_down" in a:
        down |= du.uses
    if "uses_up" in a:
        up |= du.uses
    if "last_uses_up" in a:
        up |= last_uses if last_uses is not None else du.last_uses
    if "conds_down" in a:
        down |= du.conds
    if "conds_up" in a:
        up |= du.conds
    if "out_conds_down" in a:
        down |= conds_out
    if "out_conds_up" in a:
        up |= conds_out
    if "out_conds_eq_down" in a:
        down |= conds_eq_out
    if "out_conds_eq_up" in a:
        up |= conds_eq_out
    return SplittingStrategy(frozenset(down), frozenset(up))


def eval_strategy(expr: Union[str, StrategyExpr],
                  program: Union[Program, Function]) -> dict:
    """Per base variable :class:`SplittingStrategy`, in declaration order."""
    fn = program.function() if isinstance(program, Program) else program
    expr = parse_strategy(expr)
    last = ssa_last_uses(fn) if "last_uses_up" in expr.atoms else {}
    return {b: strategy_for(fn, b, expr, last.get(b)) for b in fn.bases()}
