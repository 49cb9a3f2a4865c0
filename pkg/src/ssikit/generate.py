"""Random program generator for fuzzing and property tests.

Blocks form a chain ``B0 -> B1 -> ... -> Bn-1`` whose last block returns,
so every block is reachable and reaches the exit.  Branches add a second
target anywhere except the entry (backward, forward or the block itself),
which yields loops, critical edges and irreducible regions.  A repair pass
then inserts a constant definition in front of every read that is not
defined on all paths, so generated programs never read undefined values.
"""

from __future__ import annotations

import random
from typing import Optional

from .ir import (BINOPS, BinOp, Block, Branch, ConstDef, Copy, Function, Input,
                 Invoke, Jump, Move, ParallelCopy, Program, Ret, Sanitize, Use,
                 Var, build_cfg, validate_program)

VAR_NAMES = "abcdef"
METHODS = ("a", "b", "c")
RELOPS = ("==", "!=", "<", "<=")


def _instruction(rng: random.Random, vs: list):
    pick = lambda: Var(rng.choice(vs))
    r = rng.random()
    if r < 0.17:
        return ConstDef(pick(), rng.choice((0, 1, 2, 3, 7)))
    if r < 0.32:
        return Input(pick())
    if r < 0.47:
        return BinOp(pick(), rng.choice(BINOPS), pick(), pick())
    if r < 0.57:
        return Copy(pick(), pick())
    if r < 0.62:
        return Sanitize(pick(), pick())
    if r < 0.79:
        return Use(pick())
    if r < 0.93:
        return Invoke(pick(), rng.choice(METHODS))
    if len(vs) >= 2:
        a, b = rng.sample(vs, 2)
        if rng.random() < 0.5:
            return ParallelCopy([Move(Var(a), Var(b)), Move(Var(b), Var(a))])
        return Use(Var(a), copies=[Move(Var(b), Var(a))])
    return Use(pick())


def generate_program(seed: int, max_blocks: int = 8, max_vars: int = 4,
                     max_instrs: int = 4, branch_prob: float = 0.6) -> Program:
    """Deterministic random program for ``seed`` within the given bounds."""
    rng = random.Random(seed)
    n = rng.randint(1, max(1, max_blocks))
    vs = list(VAR_NAMES[:rng.randint(1, max(1, min(max_vars, len(VAR_NAMES))))])
    labels = ["entry"] + [f"B{i}" for i in range(1, n)]
    blocks = []
    for i, label in enumerate(labels):
        body = [_instruction(rng, vs) for _ in range(rng.randint(0, max_instrs))]
        if i == n - 1:
            term = Ret()
        else:
            others = [l for l in labels[1:] if l != labels[i + 1]]
            if others and rng.random() < branch_prob:
                other = rng.choice(others)
                targets = [labels[i + 1], other]
                rng.shuffle(targets)
                term = Branch(Var(rng.choice(vs)), rng.choice(RELOPS),
                              rng.choice((0, 1, 2, 3, 7)), targets[0], targets[1])
            else:
                term = Jump(labels[i + 1])
        blocks.append(Block(label, [], body, [], term))
    fn = Function("main", blocks)
    _repair(fn, rng)
    program = Program([fn])
    validate_program(program)
    return program


def _must_defined(fn: Function) -> dict:
    cfg = build_cfg(fn)
    every = {v for v in fn.variables()}
    gen = {}
    for b in fn.blocks:
        s: set = set()
        for inst in b.interior():
            s |= set(inst.all_defs())
        gen[b.label] = s
    din = {l: set(every) for l in cfg.labels}
    din[cfg.entry] = set()
    changed = True
    while changed:
        changed = False
        for l in cfg.rpo():
            if l != cfg.entry:
                new = set(every)
                for p in cfg.preds[l]:
                    new &= din[p] | gen[p]
                if new != din[l]:
                    din[l] = new
                    changed = True
    return din


def _repair(fn: Function, rng: random.Random) -> None:
    din = _must_defined(fn)
    for b in fn.blocks:
        have = set(din[b.label])
        body = []
        for inst in b.interior():
            for v in inst.all_uses():
                if v not in have:
                    body.append(ConstDef(v, rng.choice((0, 1, 2, 3, 7))))
                    have.add(v)
            have |= set(inst.all_defs())
            body.append(inst)
        b.body = body[:-1]
    # inserted definitions only grow the must-defined sets, so one pass suffices


def generate_corpus(count: int, seed: int = 0, **bounds) -> list:
    return [generate_program(seed + i, **bounds) for i in range(count)]


def random_cfg(rng: random.Random, max_blocks: int = 12,
               exitless_prob: float = 0.2) -> dict:
    """A random rooted successor map (not a program) for dominance tests.

    Out-degree is at most two and the root has no predecessors.  Every
    node is reachable from ``n0``; some nodes may have no path to a node
    without successors, exercising the synthetic-exit handling.
    """
    n = rng.randint(1, max_blocks)
    names = [f"n{i}" for i in range(n)]
    succs: dict = {x: [] for x in names}
    for i in range(1, n):
        parent = rng.choice([x for x in names[:i] if len(succs[x]) < 2])
        succs[parent].append(names[i])
    for x in names:
        if n > 1 and len(succs[x]) < 2 and rng.random() < 0.5:
            w = rng.choice(names[1:])
            if w not in succs[x]:
                succs[x].append(w)
    if rng.random() >= exitless_prob:
        # make sure at least one node is a sink
        sinkless = all(succs[x] for x in names)
        if sinkless:
            succs[names[-1]] = []
    return succs


def cfg_function(succs: dict, root: Optional[str] = None) -> Function:
    """Wrap a successor map (out-degree at most 2) as an instruction-free function."""
    order = list(succs)
    if root is not None:
        order.remove(root)
        order.insert(0, root)
    blocks = []
    for x in order:
        ts = succs[x]
        if not ts:
            term = Ret()
        elif len(ts) == 1:
            term = Jump(ts[0])
        else:
            term = Branch(Var("c"), "==", 0, ts[0], ts[1])
        blocks.append(Block(x, [], [], [], term))
    return Function("main", blocks)
