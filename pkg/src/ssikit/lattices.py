"""Finite-height lattices for the bundled clients.

Elements are plain hashable values so results compare with ``==``:
constants are ints, the named points of the small lattices are strings,
and required-method sets are frozensets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

TOP = "TOP"
NAC = "NAC"
CLEAN = "Clean"
TAINTED = "Tainted"
NOT_NULL = "NotNull"
MAYBE_NULL = "PossiblyNull"


@dataclass(frozen=True)
class LatticeSpec:
    """A meet semilattice with a top element and a declared height."""

    name: str
    top: Hashable
    bottom: Hashable
    meet2: Callable
    height: int
    samples: Sequence
    fmt: Callable = str

    def meet(self, *xs):
        out = self.top
        for x in xs:
            out = self.meet2(out, x)
        return out

    def leq(self, a, b) -> bool:
        return self.meet2(a, b) == a

    def show(self, x) -> str:
        return self.fmt(x)


def _const_meet(a, b):
    if a == TOP:
        return b
    if b == TOP:
        return a
    if a == b:
        return a
    return NAC


def _fmt_const(x) -> str:
    return x if isinstance(x, str) else str(x)


CONST = LatticeSpec("const", TOP, NAC, _const_meet, 2,
                    (TOP, NAC, 0, 1, 7, -3), _fmt_const)


def _chain_meet(order: tuple):
    rank = {x: i for i, x in enumerate(order)}

    def meet(a, b):
        return a if rank[a] >= rank[b] else b

    return meet


TAINT = LatticeSpec("taint", TOP, TAINTED, _chain_meet((TOP, CLEAN, TAINTED)), 2,
                    (TOP, CLEAN, TAINTED))

NULL = LatticeSpec("null", TOP, MAYBE_NULL, _chain_meet((TOP, NOT_NULL, MAYBE_NULL)), 2,
                   (TOP, NOT_NULL, MAYBE_NULL))


def _fmt_methods(x) -> str:
    return "{" + ",".join(sorted(x)) + "}"


def method_sets(universe: Sequence[str]) -> LatticeSpec:
    """Required-method sets ordered by reverse inclusion: top is the empty set."""
    universe = tuple(sorted(set(universe)))
    samples = [frozenset(), frozenset(universe)]
    samples += [frozenset([m]) for m in universe]
    samples += [frozenset(universe[:i]) for i in range(2, len(universe))]
    return LatticeSpec("methods", frozenset(), frozenset(universe),
                       lambda a, b: a | b, max(1, len(universe)),
                       tuple(dict.fromkeys(samples)), _fmt_methods)
