"""Textual IR (``.ssir``): parser, canonical printer and DOT export.

Example::

    func main {
    entry:
      v = input
      branch v == 0, L1, L2
    L1:
      v = const 1
      jump L3
    L2:
      use v
      jump L3
    L3:
      use v
      ret
    }

Versioned variables print as ``v.3``.  Phis head their block, sigmas sit
just above the terminator, and ``||`` joins parallel copies to an
instruction.
"""

from __future__ import annotations

import re
from typing import Optional, Union

from .ir import (BINOPS, RELOPS, UNDEF, BinOp, Block, Branch, ConstDef, Copy,
                 Function, Input, Instr, Invoke, Jump, Move, ParallelCopy,
                 ParseError, Phi, Program, Ret, Sanitize, Sigma, SourceSpan,
                 Use, Var, validate_program)

KEYWORDS = {"func", "phi", "sigma", "const", "input", "sanitize", "use",
            "invoke", "pcopy", "branch", "jump", "ret", *BINOPS}

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_VAR = rf"{_IDENT}(?:\.\d+)?"
_INT = r"-?\d+"

_RE_FUNC = re.compile(rf"func\s+({_IDENT})\s*\{{$")
_RE_LABEL = re.compile(rf"({_IDENT})\s*:$")
_RE_PHI = re.compile(rf"({_VAR})\s*=\s*phi\s*\((.*)\)$")
_RE_SIGMA = re.compile(rf"\((.*)\)\s*=\s*sigma\s*\(\s*({_VAR})\s*\)$")
_RE_CONST = re.compile(rf"({_VAR})\s*=\s*const\s+({_INT})$")
_RE_INPUT = re.compile(rf"({_VAR})\s*=\s*input$")
_RE_BINOP = re.compile(rf"({_VAR})\s*=\s*({'|'.join(BINOPS)})\s+({_VAR})\s*,?\s*({_VAR})$")
_RE_SANITIZE = re.compile(rf"({_VAR})\s*=\s*sanitize\s+({_VAR})$")
_RE_COPY = re.compile(rf"({_VAR})\s*=\s*({_VAR})$")
_RE_USE = re.compile(rf"use\s+({_VAR})$")
_RE_INVOKE = re.compile(rf"invoke\s+({_VAR})\.({_IDENT})$")
_RE_PCOPY = re.compile(r"pcopy\s+(.*)$")
_RE_BRANCH = re.compile(
    rf"branch\s+({_VAR})\s*(==|!=|<=|<)\s*({_INT})\s*,\s*({_IDENT})\s*,\s*({_IDENT})$")
_RE_JUMP = re.compile(rf"jump\s+({_IDENT})$")
_RE_KEYED = re.compile(rf"\s*({_IDENT})\s*:\s*({_VAR})\s*$")
_RE_MOVE = re.compile(rf"\s*({_VAR})\s*=\s*({_VAR})\s*$")


class _Line:
    def __init__(self, text: str, lineno: int, offset: int, column: int):
        self.text = text
        self.lineno = lineno
        self.offset = offset
        self.column = column

    def span(self) -> SourceSpan:
        return SourceSpan(self.lineno, self.column, self.offset,
                          self.offset + len(self.text))

    def error(self, msg: str) -> ParseError:
        return ParseError(msg, self.span())


def _var(tok: str, line: _Line) -> Var:
    if tok == "undef":
        return UNDEF
    base, _, ver = tok.partition(".")
    if base in KEYWORDS:
        raise line.error(f"reserved word {base!r} used as a variable")
    return Var(base, int(ver) if ver else None)


def _keyed(body: str, line: _Line) -> dict:
    out: dict = {}
    if not body.strip():
        return out
    for item in body.split(","):
        m = _RE_KEYED.match(item)
        if not m:
            raise line.error(f"expected 'label: var', got {item.strip()!r}")
        if m.group(1) in out:
            raise line.error(f"label {m.group(1)!r} keyed twice")
        out[m.group(1)] = _var(m.group(2), line)
    return out


def _moves(parts: list, line: _Line, inserted: bool = False) -> list:
    out = []
    for part in parts:
        m = _RE_MOVE.match(part)
        if not m:
            raise line.error(f"expected parallel copy 'dst = src', got {part.strip()!r}")
        out.append(Move(_var(m.group(1), line), _var(m.group(2), line), inserted))
    return out


def _instruction(text: str, line: _Line) -> Instr:
    V = lambda s: _var(s, line)
    if m := _RE_CONST.match(text):
        return ConstDef(V(m[1]), int(m[2]))
    if m := _RE_INPUT.match(text):
        return Input(V(m[1]))
    if m := _RE_BINOP.match(text):
        return BinOp(V(m[1]), m[2], V(m[3]), V(m[4]))
    if m := _RE_SANITIZE.match(text):
        return Sanitize(V(m[1]), V(m[2]))
    if m := _RE_USE.match(text):
        return Use(V(m[1]))
    if m := _RE_INVOKE.match(text):
        return Invoke(V(m[1]), m[2])
    if m := _RE_PCOPY.match(text):
        return ParallelCopy(_moves(m[1].split(","), line))
    if m := _RE_BRANCH.match(text):
        return Branch(V(m[1]), m[2], int(m[3]), m[4], m[5])
    if m := _RE_JUMP.match(text):
        return Jump(m[1])
    if text == "ret":
        return Ret()
    if m := _RE_COPY.match(text):
        return Copy(V(m[1]), V(m[2]))
    raise line.error(f"cannot parse instruction {text!r}")


def _split_lines(text: str) -> list:
    lines = []
    offset = 0
    for lineno, raw in enumerate(text.split("\n"), start=1):
        code = raw.split("#", 1)[0]
        stripped = code.strip()
        if stripped:
            col = len(code) - len(code.lstrip()) + 1
            lines.append(_Line(stripped, lineno, offset + col - 1, col))
        offset += len(raw.encode("utf-8")) + 1
    return lines


def parse(text: str, validate: bool = True) -> Program:
    """Parse ``.ssir`` text into a :class:`Program`."""
    lines = _split_lines(text)
    functions = []
    i = 0
    while i < len(lines):
        line = lines[i]
        m = _RE_FUNC.match(line.text)
        if not m:
            raise line.error(f"expected 'func NAME {{', got {line.text!r}")
        fn = Function(m[1])
        i += 1
        block: Optional[Block] = None
        stage = 0  # 0: phis allowed, 1: body, 2: sigmas seen, 3: terminated
        while True:
            if i >= len(lines):
                raise ParseError(f"unterminated function {fn.name!r}",
                                 lines[-1].span())
            line = lines[i]
            i += 1
            if line.text == "}":
                if block is not None and stage < 3:
                    raise line.error(f"block {block.label!r} lacks a terminator")
                break
            if lm := _RE_LABEL.match(line.text):
                if block is not None and stage < 3:
                    raise line.error(f"block {block.label!r} lacks a terminator")
                block = Block(lm[1], span=line.span())
                fn.blocks.append(block)
                stage = 0
                continue
            if block is None:
                raise line.error("instruction outside of a block")
            if stage == 3:
                raise line.error(f"instruction after the terminator of {block.label!r}")
            parts = line.text.split("||")
            head = parts[0].strip()
            if pm := _RE_PHI.match(head):
                if stage != 0:
                    raise line.error("phi must precede all other instructions")
                if len(parts) > 1:
                    raise line.error("phi cannot carry parallel copies")
                block.phis.append(Phi(_var(pm[1], line), _keyed(pm[2], line),
                                      span=line.span()))
                continue
            if sm := _RE_SIGMA.match(head):
                if len(parts) > 1:
                    raise line.error("sigma cannot carry parallel copies")
                block.sigmas.append(Sigma(_var(sm[2], line), _keyed(sm[1], line),
                                          span=line.span()))
                stage = 2
                continue
            inst = _instruction(head, line)
            inst.copies = _moves(parts[1:], line)
            inst.span = line.span()
            if isinstance(inst, (Jump, Branch, Ret)):
                block.term = inst
                stage = 3
            else:
                if stage == 2:
                    raise line.error("sigma must directly precede the terminator")
                block.body.append(inst)
                stage = 1
        functions.append(fn)
    program = Program(functions)
    if not functions:
        raise ParseError("entry block required: no function found",
                         SourceSpan(1, 1, 0, 0))
    for fn in functions:
        if not fn.blocks:
            raise ParseError(f"entry block required in function {fn.name!r}",
                             SourceSpan(1, 1, 0, 0))
    if validate:
        validate_program(program)
    return program


def parse_function(text: str) -> Function:
    return parse(text).functions[0]


# ---------------------------------------------------------------------------
# printing


def _copies(inst: Instr) -> str:
    return "".join(f" || {m.dst} = {m.src}" for m in inst.copies)


def format_instruction(inst: Instr) -> str:
    if isinstance(inst, ConstDef):
        s = f"{inst.dst} = const {inst.value}"
    elif isinstance(inst, Input):
        s = f"{inst.dst} = input"
    elif isinstance(inst, BinOp):
        s = f"{inst.dst} = {inst.op} {inst.a} {inst.b}"
    elif isinstance(inst, Sanitize):
        s = f"{inst.dst} = sanitize {inst.src}"
    elif isinstance(inst, Copy):
        s = f"{inst.dst} = {inst.src}"
    elif isinstance(inst, Use):
        s = f"use {inst.src}"
    elif isinstance(inst, Invoke):
        s = f"invoke {inst.src}.{inst.method}"
    elif isinstance(inst, ParallelCopy):
        s = "pcopy " + ", ".join(f"{m.dst} = {m.src}" for m in inst.moves)
    elif isinstance(inst, Branch):
        s = (f"branch {inst.var} {inst.relop} {inst.value}, "
             f"{inst.iftrue}, {inst.iffalse}")
    elif isinstance(inst, Jump):
        s = f"jump {inst.target}"
    elif isinstance(inst, Ret):
        s = "ret"
    else:
        raise TypeError(type(inst))
    return s + _copies(inst)


def format_phi(phi: Phi) -> str:
    args = ", ".join(f"{k}: {v}" for k, v in phi.args.items())
    return f"{phi.dst} = phi({args})"


def format_sigma(sig: Sigma) -> str:
    dsts = ", ".join(f"{k}: {v}" for k, v in sig.dsts.items())
    return f"({dsts}) = sigma({sig.src})"


def block_lines(block: Block) -> list:
    return ([format_phi(p) for p in block.phis]
            + [format_instruction(i) for i in block.body]
            + [format_sigma(s) for s in block.sigmas]
            + [format_instruction(block.term)])


def format_function(fn: Function) -> str:
    out = [f"func {fn.name} {{"]
    for b in fn.blocks:
        out.append(f"{b.label}:")
        out.extend("  " + line for line in block_lines(b))
    out.append("}")
    return "\n".join(out) + "\n"


def print_program(program: Union[Program, Function]) -> str:
    """Deterministic canonical text; ``parse(print_program(p)) == p``."""
    if isinstance(program, Function):
        return format_function(program)
    return "\n".join(format_function(f) for f in program.functions)


# ---------------------------------------------------------------------------
# DOT


def _dot_escape(s: str) -> str:
    for ch in "\\{}<>|\"":
        s = s.replace(ch, "\\" + ch)
    return s


def _function_dot(fn: Function, annotations: Optional[dict], prefix: str,
                  indent: str) -> list:
    out = []
    for b in fn.blocks:
        body = "\\l".join(_dot_escape(x) for x in block_lines(b)) + "\\l"
        out.append(f'{indent}"{prefix}{b.label}" '
                   f'[label="{{{_dot_escape(b.label)}:|{body}}}"];')
    for b in fn.blocks:
        for t in b.term.targets:
            attrs = ""
            if annotations:
                labels = annotations.get((b.label, t), {})
                if labels:
                    text = "\\n".join(f"{v}:{labels[v]}" for v in sorted(labels))
                    attrs = f' [label="{_dot_escape(text)}"]'
            out.append(f'{indent}"{prefix}{b.label}" -> "{prefix}{t}"{attrs};')
    return out


def to_dot(program: Union[Program, Function],
           annotations: Optional[dict] = None) -> str:
    """GraphViz text with one record node per block.

    ``annotations`` maps a CFG edge ``(pred, succ)`` to ``{var: value}``
    labels, e.g. from :meth:`ssikit.dataflow.DenseResult.edge_labels`.
    """
    if isinstance(program, Function):
        lines = [f'digraph "{program.name}" {{', "  node [shape=record];"]
        lines += _function_dot(program, annotations, "", "  ")
    else:
        lines = ["digraph program {", "  node [shape=record];"]
        for fn in program.functions:
            lines.append(f'  subgraph "cluster_{fn.name}" {{')
            lines.append(f'    label="{fn.name}";')
            lines += _function_dot(fn, annotations, f"{fn.name}.", "    ")
            lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"
