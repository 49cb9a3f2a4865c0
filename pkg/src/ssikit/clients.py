"""The bundled analyses: constant propagation (plain and conditional), taint,
null-pointer and class inference."""

from __future__ import annotations

from .dataflow import ClientAnalysis
from .ir import (BinOp, ConstDef, Copy, Function, Input, Invoke, ParallelCopy,
                 Sanitize, Transition, Var, eval_binop)
from .lattices import (CLEAN, CONST, MAYBE_NULL, NAC, NOT_NULL, NULL, TAINT,
                       TAINTED, TOP, method_sets)


def _moved_from(t: Transition, x: Var):
    for d, s in t.moves:
        if d == x:
            return s
    return None


def _pcopy_src(inst: ParallelCopy, x: Var):
    for m in inst.moves:
        if m.dst == x:
            return m.src
    return None


class ForwardClient(ClientAnalysis):
    """Shared forward transfer: instruction defs, moves, then refinement.

    A variable defined by the instruction takes ``define``'s value; the
    destination of a move takes its source's value; any other variable
    passes through.  ``refine`` may then sharpen the result using what the
    transition itself proves (a taken equality edge, a dereference).
    """

    direction = "forward"

    def define(self, inst, x: Var, val):
        raise NotImplementedError

    def refine(self, t: Transition, source: Var, value, val):
        return value

    def transfer(self, t: Transition, x: Var, val):
        inst = t.inst
        if inst is not None and x in inst.defs():
            if isinstance(inst, ParallelCopy):
                src = _pcopy_src(inst, x)
                return self.refine(t, src, val(src), val)
            return self.define(inst, x, val)
        src = _moved_from(t, x)
        source = x if src is None else src
        return self.refine(t, source, val(source), val)


def _equality_refinement(t: Transition, source: Var):
    """The constant ``k`` when ``t`` is the edge on which ``source == k`` holds."""
    br = t.branch
    if br is None or source.is_undef or br.var != source:
        return None
    if br.equality_edge() == t.edge:
        return br.value
    return None


class ConstantPropagation(ForwardClient):
    name = "constprop"
    strategy = "constprop"
    conditional = False

    def lattice_for(self, fn: Function):
        return CONST

    def define(self, inst, x, val):
        if isinstance(inst, ConstDef):
            return inst.value
        if isinstance(inst, Input):
            return NAC
        if isinstance(inst, BinOp):
            a, b = val(inst.a), val(inst.b)
            if a == NAC or b == NAC:
                return NAC
            if a == TOP or b == TOP:
                return TOP
            return eval_binop(inst.op, a, b)
        if isinstance(inst, (Copy, Sanitize)):
            return val(inst.src)
        raise TypeError(f"no constant transfer for {type(inst).__name__}")

    def refine(self, t, source, value, val):
        if self.conditional:
            k = _equality_refinement(t, source)
            if k is not None:
                return k
        return value


class ConditionalConstantPropagation(ConstantPropagation):
    """Constant propagation that also learns ``v == k`` on equality edges."""

    name = "ccp"
    strategy = "ccp"
    conditional = True


class TaintAnalysis(ForwardClient):
    """Input is tainted; constants and sanitizers are clean.

    A variable is also clean on the edge where an equality test has pinned
    it to a program constant: that test acts as the sanitizer.
    """

    name = "taint"
    strategy = "taint"

    def lattice_for(self, fn: Function):
        return TAINT

    def define(self, inst, x, val):
        if isinstance(inst, Input):
            return TAINTED
        if isinstance(inst, (ConstDef, Sanitize)):
            return CLEAN
        if isinstance(inst, Copy):
            return val(inst.src)
        if isinstance(inst, BinOp):
            return TAINT.meet(val(inst.a), val(inst.b))
        raise TypeError(f"no taint transfer for {type(inst).__name__}")

    def refine(self, t, source, value, val):
        if _equality_refinement(t, source) is not None:
            return CLEAN
        return value


class NullAnalysis(ForwardClient):
    """A receiver that survived ``invoke`` is not null afterwards."""

    name = "nullptr"
    strategy = "nullptr"

    def lattice_for(self, fn: Function):
        return NULL

    def define(self, inst, x, val):
        if isinstance(inst, ConstDef):
            return NOT_NULL if inst.value != 0 else MAYBE_NULL
        if isinstance(inst, (Input, BinOp)):
            return MAYBE_NULL
        if isinstance(inst, (Copy, Sanitize)):
            return val(inst.src)
        raise TypeError(f"no null transfer for {type(inst).__name__}")

    def refine(self, t, source, value, val):
        inst = t.inst
        if isinstance(inst, Invoke) and not source.is_undef and inst.src == source:
            return NOT_NULL
        return value


class ClassInference(ClientAnalysis):
    """Backward: the set of methods each value must provide.

    ``invoke v.m`` requires ``m`` of ``v``; copies pass requirements from
    the destination back to the source, and a definition that does not read
    the variable resets it to the empty requirement.
    """

    name = "classinf"
    direction = "backward"
    strategy = "classinf"

    def lattice_for(self, fn: Function):
        methods = [i.method for b in fn.blocks for i in b.body if isinstance(i, Invoke)]
        return method_sets(methods)

    def transfer(self, t: Transition, x: Var, val):
        parts = []
        if x not in t.defs:
            parts.append(val(x))
        for d, s in t.moves:
            if s == x:
                parts.append(val(d))
        inst = t.inst
        if isinstance(inst, (Copy, Sanitize)) and inst.src == x:
            parts.append(val(inst.dst))
        elif isinstance(inst, ParallelCopy):
            parts.extend(val(m.dst) for m in inst.moves if m.src == x)
        elif isinstance(inst, Invoke) and inst.src == x:
            parts.append(frozenset([inst.method]))
        out = frozenset()
        for p in parts:
            out = out | p
        return out


CLIENTS = {
    "constprop": ConstantPropagation,
    "ccp": ConditionalConstantPropagation,
    "taint": TaintAnalysis,
    "nullptr": NullAnalysis,
    "classinf": ClassInference,
}


def get_client(name: str) -> ClientAnalysis:
    try:
        return CLIENTS[name]()
    except KeyError:
        raise ValueError(f"unknown client {name!r}; choose from {', '.join(CLIENTS)}") from None


def constant_propagation(conditional: bool = False) -> ClientAnalysis:
    return ConditionalConstantPropagation() if conditional else ConstantPropagation()


def taint_analysis() -> ClientAnalysis:
    return TaintAnalysis()


def null_analysis() -> ClientAnalysis:
    return NullAnalysis()


def class_inference() -> ClientAnalysis:
    return ClassInference()
