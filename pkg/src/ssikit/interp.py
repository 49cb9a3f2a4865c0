"""A small-step interpreter used as the semantic oracle, plus a trace fuzzer."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .ir import (BinOp, Branch, ConstDef, Copy, Function, Input, Invoke,
                 Jump, ParallelCopy, Program, Ret, Sanitize, Use, Var, eval_binop)


class _Undefined:
    def __repr__(self) -> str:
        return "undefined"


UNDEFINED = _Undefined()


class Trap(Exception):
    pass


@dataclass
class RunResult:
    status: str  # "ok" | "trap" | "fuel"
    trace: list = field(default_factory=list)  # [(site, value)]
    message: str = ""
    steps: int = 0

    def trace_text(self) -> str:
        return "".join(f"site={s} value={v}\n" for s, v in self.trace)

    def key(self) -> tuple:
        return (self.status, tuple(self.trace))


# opcodes of the compiled form
_CONST, _INPUT, _BINOP, _MOVE, _PCOPY, _OBSERVE, _SILENT, _BRANCH, _JUMP, _RET = range(10)


@dataclass
class Compiled:
    """A function lowered to index-addressed tuples for fast execution.

    Variables become slots of a flat environment list; ``-1`` stands for
    ``undef``.  Each block holds ``(phis, code, sigmas)``.
    """

    entry: str
    names: list
    blocks: dict


def compile_function(program: Union[Program, Function]) -> Compiled:
    fn = program.function() if isinstance(program, Program) else program
    slots: dict = {}
    names: list = []

    def slot(v: Var) -> int:
        if v.is_undef:
            return -1
        if v not in slots:
            slots[v] = len(names)
            names.append(str(v))
        return slots[v]

    blocks = {}
    for b in fn.blocks:
        phis = [(slot(phi.dst), {p: slot(a) for p, a in phi.args.items()})
                for phi in b.phis]
        code = []
        for k, inst in enumerate(b.interior()):
            uses = tuple(slot(v) for v in inst.uses())
            copies = tuple((slot(m.dst), slot(m.src)) for m in inst.copies)
            if isinstance(inst, ConstDef):
                op, dst, extra = _CONST, slot(inst.dst), inst.value
            elif isinstance(inst, Input):
                op, dst, extra = _INPUT, slot(inst.dst), None
            elif isinstance(inst, BinOp):
                op, dst, extra = _BINOP, slot(inst.dst), inst.op
            elif isinstance(inst, (Copy, Sanitize)):
                op, dst, extra = _MOVE, slot(inst.dst), None
            elif isinstance(inst, ParallelCopy):
                op, dst, extra = _PCOPY, -1, tuple(slot(m.dst) for m in inst.moves)
            elif isinstance(inst, (Use, Invoke)):
                op, dst, extra = (_SILENT if inst.pseudo else _OBSERVE), -1, None
            elif isinstance(inst, Branch):
                op, dst, extra = _BRANCH, -1, inst
            elif isinstance(inst, Jump):
                op, dst, extra = _JUMP, -1, inst.target
            elif isinstance(inst, Ret):
                op, dst, extra = _RET, -1, None
            else:
                raise TypeError(f"cannot execute {type(inst).__name__}")
            code.append((op, f"{b.label}:{k}", not inst.pseudo, uses, dst, extra, copies))
        sigmas = [(slot(sig.src), {t: slot(d) for t, d in sig.dsts.items()})
                  for sig in b.sigmas]
        blocks[b.label] = (phis, code, sigmas)
    return Compiled(fn.entry, names, blocks)


def run(program: Union[Program, Function, Compiled], inputs: Sequence[int] = (),
        fuel: int = 10_000) -> RunResult:
    """Execute ``main`` (or the given function) on an input stream.

    The trace records ``(block:index, value)`` for every ``use`` and
    ``invoke``.  Only body instructions and terminators consume fuel, so a
    program and its split form exhaust fuel at the same place.
    """
    c = program if isinstance(program, Compiled) else compile_function(program)
    env = [UNDEFINED] * (len(c.names) + 1)  # slot -1 is undef, always UNDEFINED
    stream = list(inputs)
    pos = 0
    res = RunResult("ok")
    trace = res.trace
    steps = 0
    label = c.entry
    last: Optional[str] = None
    while True:
        phis, code, sigmas = c.blocks[label]
        if phis:
            vals = [env[args[last]] for _, args in phis]
            for (dst, _), x in zip(phis, vals):
                if dst >= 0:
                    env[dst] = x
        target = None
        for op, where, strict, uses, dst, extra, copies in code:
            steps += 1
            if steps > fuel:
                res.status = "fuel"
                res.message = f"fuel exhausted after {fuel} steps"
                res.steps = steps
                return res
            srcs = [env[u] for u in uses]
            if strict:
                for u, x in zip(uses, srcs):
                    if x is UNDEFINED:
                        res.status = "trap"
                        name = c.names[u] if u >= 0 else "undef"
                        res.message = f"read of undefined {name} at {where}"
                        res.steps = steps
                        return res
            moved = [env[src] for _, src in copies] if copies else ()
            if op == _CONST:
                env[dst] = extra
            elif op == _INPUT:
                env[dst] = stream[pos] if pos < len(stream) else 0
                pos += 1
            elif op == _BINOP:
                env[dst] = eval_binop(extra, srcs[0], srcs[1])
            elif op == _MOVE:
                env[dst] = srcs[0]
            elif op == _PCOPY:
                for d, x in zip(extra, srcs):
                    env[d] = x
            elif op == _OBSERVE:
                trace.append((where, srcs[0]))
            elif op == _BRANCH:
                target = extra.iftrue if extra.taken(srcs[0]) else extra.iffalse
            elif op == _JUMP:
                target = extra
            for (d, _), x in zip(copies, moved):
                env[d] = x
            env[-1] = UNDEFINED
        if target is None:
            res.steps = steps
            return res
        if sigmas:
            vals = [env[src] for src, _ in sigmas]
            for (_, dsts), x in zip(sigmas, vals):
                for t, d in dsts.items():
                    env[d] = x if t == target else UNDEFINED
            env[-1] = UNDEFINED
        last, label = label, target


# ---------------------------------------------------------------------------
# differential fuzzing

INPUT_POOL = (0, 1, 2, 3, 7, -1, 1 << 40)


def random_inputs(rng: random.Random, length: int = 8) -> list:
    return [rng.choice(INPUT_POOL) for _ in range(length)]


@dataclass
class FuzzReport:
    trials: int
    divergences: list  # (trial, inputs, original RunResult, transformed RunResult)
    outcomes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.divergences

    def __str__(self) -> str:
        if self.ok:
            summary = ", ".join(f"{k}={v}" for k, v in sorted(self.outcomes.items()))
            return f"{self.trials} trials equivalent ({summary})"
        t, inputs, a, b = self.divergences[0]
        return (f"{len(self.divergences)} divergent trials; first: trial {t} "
                f"inputs {inputs}: {first_divergence(a, b)}")


def first_divergence(a: RunResult, b: RunResult) -> str:
    for i, (x, y) in enumerate(zip(a.trace, b.trace)):
        if x != y:
            return f"observation {i}: {x} vs {y}"
    if len(a.trace) != len(b.trace):
        return f"trace lengths {len(a.trace)} vs {len(b.trace)}"
    return f"outcome {a.status} ({a.message}) vs {b.status} ({b.message})"


def fuzz_equivalence(original: Union[Program, Function, Compiled],
                     transformed: Union[Program, Function, Compiled], trials: int = 10,
                     seed: int = 0, fuel: int = 10_000,
                     cache: Optional[dict] = None) -> FuzzReport:
    """Run both programs on ``trials`` random input vectors and compare traces.

    ``cache`` maps input tuples to runs of ``original``; passing the same
    dict while checking several transforms of one program avoids re-running
    the original.
    """
    rng = random.Random(seed)
    rep = FuzzReport(trials, [])
    if not isinstance(original, Compiled):
        original = compile_function(original)
    if not isinstance(transformed, Compiled):
        transformed = compile_function(transformed)
    for t in range(trials):
        inputs = random_inputs(rng)
        if cache is None:
            a = run(original, inputs, fuel)
        else:
            key = (tuple(inputs), fuel)
            if key not in cache:
                cache[key] = run(original, inputs, fuel)
            a = cache[key]
        b = run(transformed, inputs, fuel)
        rep.outcomes[a.status] = rep.outcomes.get(a.status, 0) + 1
        if a.key() != b.key():
            rep.divergences.append((t, inputs, a, b))
    return rep
