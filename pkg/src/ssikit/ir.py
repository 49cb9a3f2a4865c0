"""Core intermediate representation.

A :class:`Function` is an ordered list of :class:`Block` objects; the first
block is the entry.  Every block is laid out as::

    In(l)    phis              (join node when the block has >= 2 preds)
    l:0..n-1 body instructions (interior nodes)
    l:n      terminator        (interior node)
    Out(l)   sigmas            (fork node when the block has >= 2 succs)

Program points sit between consecutive control flow nodes.  Inside a block
they are ``("pt", label, k)`` for ``k`` in ``0..n+1``; between blocks they
are the CFG-edge points ``("edge", pred, succ)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Callable, Iterator, Optional, Union


class IRError(Exception):
    """Structural or syntactic problem with a program."""

    def __init__(self, message: str, span: Optional["SourceSpan"] = None):
        self.message = message
        self.span = span
        if span is not None:
            message = f"{span.line}:{span.column}: {message}"
        super().__init__(message)


class ParseError(IRError):
    pass


class ValidationError(IRError):
    pass


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    start: int
    end: int


@dataclass(frozen=True, order=True)
class Var:
    base: str
    version: Optional[int] = None

    @property
    def is_undef(self) -> bool:
        return self.base == "undef"

    def __str__(self) -> str:
        if self.version is None:
            return self.base
        return f"{self.base}.{self.version}"


UNDEF = Var("undef")


def _use(**kw):
    return field(metadata={"role": "use"}, **kw)


def _def(**kw):
    return field(metadata={"role": "def"}, **kw)


@dataclass
class Move:
    """One ``dst = src`` element of a parallel copy."""

    dst: Var
    src: Var
    inserted: bool = field(default=False, compare=False)


@dataclass
class Instr:
    """Base class for body instructions and terminators.

    ``copies`` are executed in parallel with the instruction: every source
    is read before any destination is written.
    """

    copies: list = field(default_factory=list, kw_only=True)
    pseudo: bool = field(default=False, compare=False, kw_only=True)
    span: Optional[SourceSpan] = field(
        default=None, compare=False, repr=False, kw_only=True
    )

    @classmethod
    def _roles(cls) -> tuple:
        # fields() is slow enough to dominate the interpreter, so cache it
        cached = cls.__dict__.get("_role_cache")
        if cached is None:
            fs = fields(cls)
            cached = (tuple(f.name for f in fs if f.metadata.get("role") == "use"),
                      tuple(f.name for f in fs if f.metadata.get("role") == "def"))
            cls._role_cache = cached
        return cached

    def uses(self) -> list:
        """Variables read by the instruction itself (not its copies)."""
        return [getattr(self, n) for n in self._roles()[0]]

    def defs(self) -> list:
        return [getattr(self, n) for n in self._roles()[1]]

    def all_uses(self) -> list:
        return self.uses() + [m.src for m in self.copies]

    def all_defs(self) -> list:
        return self.defs() + [m.dst for m in self.copies]

    def rewrite(self, on_use: Callable[[Var], Var],
                on_def: Callable[[Var], Var]) -> None:
        use_names, def_names = self._roles()
        for n in use_names:
            setattr(self, n, on_use(getattr(self, n)))
        for n in def_names:
            setattr(self, n, on_def(getattr(self, n)))


@dataclass
class ConstDef(Instr):
    dst: Var = _def()
    value: int = 0


@dataclass
class Input(Instr):
    dst: Var = _def()


BINOPS = ("add", "sub", "mul", "and", "or", "xor")


@dataclass
class BinOp(Instr):
    dst: Var = _def()
    op: str
    a: Var = _use()
    b: Var = _use()


@dataclass
class Copy(Instr):
    dst: Var = _def()
    src: Var = _use()


@dataclass
class Sanitize(Instr):
    dst: Var = _def()
    src: Var = _use()


@dataclass
class Use(Instr):
    src: Var = _use()


@dataclass
class Invoke(Instr):
    src: Var = _use()
    method: str = "m"


@dataclass
class ParallelCopy(Instr):
    moves: list = field(default_factory=list)

    def uses(self) -> list:
        return [m.src for m in self.moves]

    def defs(self) -> list:
        return [m.dst for m in self.moves]

    def rewrite(self, on_use, on_def) -> None:
        for m in self.moves:
            m.src = on_use(m.src)
        for m in self.moves:
            m.dst = on_def(m.dst)


@dataclass
class Jump(Instr):
    target: str = ""

    @property
    def targets(self) -> list:
        return [self.target]


RELOPS = ("==", "!=", "<", "<=")


@dataclass
class Branch(Instr):
    var: Var = _use()
    relop: str = "=="
    value: int = 0
    iftrue: str = ""
    iffalse: str = ""

    @property
    def targets(self) -> list:
        return [self.iftrue, self.iffalse]

    def taken(self, x: int) -> bool:
        return compare(self.relop, x, self.value)

    def equality_edge(self) -> Optional[str]:
        """Successor on which ``var == value`` is known to hold, if any."""
        if self.relop == "==":
            return self.iftrue
        if self.relop == "!=":
            return self.iffalse
        return None


@dataclass
class Ret(Instr):
    @property
    def targets(self) -> list:
        return []


Terminator = Union[Jump, Branch, Ret]


def compare(relop: str, x: int, k: int) -> bool:
    if relop == "==":
        return x == k
    if relop == "!=":
        return x != k
    if relop == "<":
        return x < k
    if relop == "<=":
        return x <= k
    raise ValueError(relop)


def wrap64(x: int) -> int:
    x &= (1 << 64) - 1
    return x - (1 << 64) if x >> 63 else x


def eval_binop(op: str, a: int, b: int) -> int:
    if op == "add":
        r = a + b
    elif op == "sub":
        r = a - b
    elif op == "mul":
        r = a * b
    elif op == "and":
        r = a & b
    elif op == "or":
        r = a | b
    elif op == "xor":
        r = a ^ b
    else:
        raise ValueError(f"unknown operator {op!r}")
    return wrap64(r)


@dataclass
class Phi:
    dst: Var
    args: dict  # predecessor label -> Var
    inserted: bool = field(default=False, compare=False)
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass
class Sigma:
    src: Var
    dsts: dict  # successor label -> Var
    inserted: bool = field(default=False, compare=False)
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass
class Block:
    label: str
    phis: list = field(default_factory=list)
    body: list = field(default_factory=list)
    sigmas: list = field(default_factory=list)
    term: Instr = field(default_factory=Ret)
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def interior(self) -> list:
        """Body instructions followed by the terminator."""
        return self.body + [self.term]

    def instr_at(self, index: int) -> Instr:
        return self.term if index == len(self.body) else self.body[index]


@dataclass
class Function:
    name: str
    blocks: list = field(default_factory=list)

    @property
    def entry(self) -> str:
        return self.blocks[0].label

    def block(self, label: str) -> Block:
        for b in self.blocks:
            if b.label == label:
                return b
        raise KeyError(f"unknown block {label!r}")

    def variables(self) -> list:
        """All non-undef variables, in order of first textual appearance."""
        seen: dict = {}
        for b in self.blocks:
            for phi in b.phis:
                for v in [phi.dst, *phi.args.values()]:
                    seen.setdefault(v, None)
            for inst in b.interior():
                for v in inst.all_uses() + inst.all_defs():
                    seen.setdefault(v, None)
            for sig in b.sigmas:
                for v in [sig.src, *sig.dsts.values()]:
                    seen.setdefault(v, None)
        return [v for v in seen if not v.is_undef]

    def bases(self) -> list:
        out: dict = {}
        for v in self.variables():
            out.setdefault(v.base, None)
        return list(out)


@dataclass
class Program:
    functions: list = field(default_factory=list)

    def function(self, name: Optional[str] = None) -> Function:
        if name is None:
            for f in self.functions:
                if f.name == "main":
                    return f
            return self.functions[0]
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(f"unknown function {name!r}")


# ---------------------------------------------------------------------------
# control flow nodes and the CFG index


@dataclass(frozen=True, order=True)
class Node:
    """A control flow node: ``In(l)``, ``Out(l)`` or instruction ``l:k``."""

    kind: str  # "in" | "inst" | "out"
    block: str
    index: int = -1

    def __str__(self) -> str:
        if self.kind == "in":
            return f"In({self.block})"
        if self.kind == "out":
            return f"Out({self.block})"
        return f"{self.block}:{self.index}"


def In(label: str) -> Node:
    return Node("in", label)


def Out(label: str) -> Node:
    return Node("out", label)


def At(label: str, index: int) -> Node:
    return Node("inst", label, index)


class CfgIndex:
    """Predecessor/successor maps and node classification for a function."""

    def __init__(self, function: Function):
        self.function = function
        self.labels = [b.label for b in function.blocks]
        self.entry = function.entry
        self.succs = {b.label: list(b.term.targets) for b in function.blocks}
        self.preds: dict = {l: [] for l in self.labels}
        for b in function.blocks:
            for t in b.term.targets:
                if t in self.preds and b.label not in self.preds[t]:
                    self.preds[t].append(b.label)
        self.sizes = {b.label: len(b.body) for b in function.blocks}

    def edges(self) -> list:
        return [(u, w) for u in self.labels for w in self.succs[u]]

    def is_join(self, label: str) -> bool:
        return len(self.preds[label]) >= 2

    def is_fork(self, label: str) -> bool:
        return len(self.succs[label]) >= 2

    def node_kind(self, node: Node) -> str:
        """``join``, ``fork``, ``interior`` or ``plain`` (a trivial In/Out)."""
        if node.kind == "in":
            return "join" if self.is_join(node.block) else "plain"
        if node.kind == "out":
            return "fork" if self.is_fork(node.block) else "plain"
        return "interior"

    def nodes(self) -> list:
        out = []
        for l in self.labels:
            out.append(In(l))
            out.extend(At(l, k) for k in range(self.sizes[l] + 1))
            out.append(Out(l))
        return out

    def has_node(self, node: Node) -> bool:
        if node.block not in self.sizes:
            return False
        if node.kind == "inst":
            return 0 <= node.index <= self.sizes[node.block]
        return node.kind in ("in", "out")

    def reachable(self) -> set:
        seen = {self.entry}
        stack = [self.entry]
        while stack:
            u = stack.pop()
            for w in self.succs[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    def rpo(self) -> list:
        order: list = []
        seen: set = set()

        def visit(u):
            seen.add(u)
            for w in self.succs[u]:
                if w not in seen:
                    visit(w)
            order.append(u)

        visit(self.entry)
        return order[::-1]


def build_cfg(function: Function) -> CfgIndex:
    """Check label resolution and build the CFG index."""
    seen: set = set()
    for b in function.blocks:
        if b.label in seen:
            raise ValidationError(f"duplicate block label {b.label!r}", b.span)
        seen.add(b.label)
    for b in function.blocks:
        if not isinstance(b.term, (Jump, Branch, Ret)):
            raise ValidationError(f"block {b.label!r} lacks a terminator", b.span)
        for inst in b.body:
            if isinstance(inst, (Jump, Branch, Ret)):
                raise ValidationError(
                    f"terminator in the middle of block {b.label!r}", inst.span)
        for t in b.term.targets:
            if t not in seen:
                raise ValidationError(f"undefined label {t!r}", b.term.span or b.span)
    return CfgIndex(function)


def validate(function: Function) -> CfgIndex:
    """Check every structural invariant; return the CFG index."""
    if not function.blocks:
        raise ValidationError(f"function {function.name!r}: entry block required")
    cfg = build_cfg(function)
    if cfg.preds[cfg.entry]:
        raise ValidationError("entry block must not have predecessors",
                              function.blocks[0].span)
    unreachable = [l for l in cfg.labels if l not in cfg.reachable()]
    if unreachable:
        b = function.block(unreachable[0])
        raise ValidationError(f"unreachable block {unreachable[0]!r}", b.span)
    for b in function.blocks:
        if isinstance(b.term, Branch) and b.term.iftrue == b.term.iffalse:
            raise ValidationError(
                f"branch in {b.label!r} has identical targets", b.term.span)
        preds = cfg.preds[b.label]
        if b.phis and len(preds) < 2:
            raise ValidationError(
                f"phi in block {b.label!r} with fewer than 2 predecessors",
                b.phis[0].span)
        for phi in b.phis:
            if set(phi.args) != set(preds) or len(phi.args) != len(preds):
                raise ValidationError(
                    f"phi operands of {phi.dst} must be keyed by {preds}", phi.span)
        succs = cfg.succs[b.label]
        if b.sigmas and len(succs) < 2:
            raise ValidationError(
                f"sigma in block {b.label!r} with fewer than 2 successors",
                b.sigmas[0].span)
        for sig in b.sigmas:
            if set(sig.dsts) != set(succs):
                raise ValidationError(
                    f"sigma destinations of {sig.src} must be keyed by {succs}",
                    sig.span)
        _check_disjoint([p.dst for p in b.phis], b.phis[0].span if b.phis else b.span)
        for inst in b.interior():
            _check_disjoint(inst.all_defs(), inst.span)
        for s in succs:
            _check_disjoint([sig.dsts[s] for sig in b.sigmas],
                            b.sigmas[0].span if b.sigmas else b.span)
    return cfg


def _check_disjoint(dsts: list, span) -> None:
    real = [d for d in dsts if not d.is_undef]
    if len(set(real)) != len(real):
        raise ValidationError("a variable is written twice in one parallel group", span)


def validate_program(program: Program) -> None:
    if not program.functions:
        raise ValidationError("program has no functions")
    names = [f.name for f in program.functions]
    if len(set(names)) != len(names):
        raise ValidationError("duplicate function name")
    for f in program.functions:
        validate(f)


# ---------------------------------------------------------------------------
# Defs / Uses / Conds / LastUses


def node_defs(function: Function, node: Node) -> list:
    b = function.block(node.block)
    if node.kind == "in":
        return [p.dst for p in b.phis]
    if node.kind == "out":
        return [d for s in b.sigmas for d in s.dsts.values()]
    return b.instr_at(node.index).all_defs()


def node_uses(function: Function, node: Node) -> list:
    b = function.block(node.block)
    if node.kind == "in":
        return [a for p in b.phis for a in p.args.values()]
    if node.kind == "out":
        return [s.src for s in b.sigmas]
    return b.instr_at(node.index).all_uses()


def defines(function: Function, node: Node, base: str) -> bool:
    return any(v.base == base for v in node_defs(function, node))


@dataclass
class DefUse:
    defs: set
    uses: set
    conds: set
    last_uses: set


def defs_uses(function: Function, v: Union[str, Var],
              live_after: Optional[Callable] = None) -> DefUse:
    """Defs, Uses, Conds and LastUses of ``v`` as sets of control flow nodes.

    Uses holds non-terminator reads; the branch test lands in Conds.  A use
    (or test) is a last use when ``v`` is dead right after the node.
    """
    match = (lambda x: x.base == v) if isinstance(v, str) else (lambda x: x == v)
    cfg = CfgIndex(function)
    out = DefUse(set(), set(), set(), set())
    for node in cfg.nodes():
        if any(match(x) for x in node_defs(function, node)):
            out.defs.add(node)
        if any(match(x) for x in node_uses(function, node)):
            term = node.kind == "inst" and node.index == cfg.sizes[node.block]
            if term and isinstance(function.block(node.block).term, Branch):
                out.conds.add(node)
            else:
                out.uses.add(node)
    if out.uses or out.conds:
        if live_after is None:
            from .graphs import liveness_sets
            live = liveness_sets(function)
            live_after = lambda node: _live_after_node(cfg, live, node)
        for node in out.uses | out.conds:
            if not any(match(x) for x in live_after(node)):
                out.last_uses.add(node)
    return out


def _live_after_node(cfg: CfgIndex, live: dict, node: Node) -> set:
    if node.kind == "inst":
        return live[("pt", node.block, node.index + 1)]
    if node.kind == "in":
        return live[("pt", node.block, 0)]
    res: set = set()
    for s in cfg.succs[node.block]:
        res |= live[("edge", node.block, s)]
    return res


# ---------------------------------------------------------------------------
# program points and transitions


def points(function: Function, cfg: Optional[CfgIndex] = None) -> list:
    cfg = cfg or CfgIndex(function)
    out = []
    for l in cfg.labels:
        out.extend(("pt", l, k) for k in range(cfg.sizes[l] + 2))
    out.extend(("edge", u, w) for u, w in cfg.edges())
    return out


def point_str(p: tuple) -> str:
    if p[0] == "pt":
        return f"{p[1]}@{p[2]}"
    return f"{p[1]}->{p[2]}"


@dataclass(frozen=True)
class Transition:
    """Flow from point ``src`` to point ``dst`` across control flow node ``node``.

    Joins and forks have one transition per CFG edge (``edge`` names the
    predecessor or successor label); ``moves`` are the copies the node
    performs on that edge.
    """

    src: tuple
    dst: tuple
    node: Node
    edge: Optional[str]
    uses: frozenset
    defs: frozenset
    moves: tuple
    inst: Optional[Instr] = None
    branch: Optional[Branch] = None


def transitions(function: Function, cfg: Optional[CfgIndex] = None) -> list:
    cfg = cfg or CfgIndex(function)
    out = []
    for b in function.blocks:
        l = b.label
        n = len(b.body)
        for p in cfg.preds[l]:
            moves = tuple((phi.dst, phi.args[p]) for phi in b.phis)
            out.append(Transition(
                ("edge", p, l), ("pt", l, 0), In(l), p,
                frozenset(s for _, s in moves if not s.is_undef),
                frozenset(d for d, _ in moves if not d.is_undef), moves))
        for k, inst in enumerate(b.interior()):
            out.append(Transition(
                ("pt", l, k), ("pt", l, k + 1), At(l, k), None,
                frozenset(v for v in inst.all_uses() if not v.is_undef),
                frozenset(v for v in inst.all_defs() if not v.is_undef),
                tuple((m.dst, m.src) for m in inst.copies), inst))
        br = b.term if isinstance(b.term, Branch) else None
        for s in cfg.succs[l]:
            moves = tuple((sig.dsts[s], sig.src) for sig in b.sigmas)
            out.append(Transition(
                ("pt", l, n + 1), ("edge", l, s), Out(l), s,
                frozenset(src for _, src in moves if not src.is_undef),
                frozenset(d for d, _ in moves if not d.is_undef), moves,
                None, br))
    return out


# ---------------------------------------------------------------------------
# structural comparison up to variable renaming


def iter_vars(function: Function) -> Iterator:
    """Every variable occurrence in a fixed canonical order."""
    for b in function.blocks:
        for phi in b.phis:
            yield phi.dst
            for k in sorted(phi.args):
                yield phi.args[k]
        for inst in b.interior():
            yield from inst.all_uses()
            yield from inst.all_defs()
        for sig in b.sigmas:
            yield sig.src
            for k in sorted(sig.dsts):
                yield sig.dsts[k]


def _skeleton(function: Function) -> Function:
    import copy
    f = copy.deepcopy(function)
    anon = Var("_")

    def blank(v: Var) -> Var:
        return v if v.is_undef else anon

    for b in f.blocks:
        for phi in b.phis:
            phi.dst = blank(phi.dst)
            phi.args = {k: blank(x) for k, x in phi.args.items()}
        for inst in b.interior():
            inst.rewrite(blank, blank)
            for m in inst.copies:
                m.dst, m.src = blank(m.dst), blank(m.src)
        for sig in b.sigmas:
            sig.src = blank(sig.src)
            sig.dsts = {k: blank(x) for k, x in sig.dsts.items()}
    return f


def alpha_equivalent(f1: Function, f2: Function) -> bool:
    """Equal up to a bijective renaming of variables."""
    if _skeleton(f1) != _skeleton(f2):
        return False
    fwd: dict = {}
    bwd: dict = {}
    for a, b in zip(iter_vars(f1), iter_vars(f2)):
        if a.is_undef or b.is_undef:
            if a != b:
                return False
            continue
        if fwd.setdefault(a, b) != b or bwd.setdefault(b, a) != a:
            return False
    return True
