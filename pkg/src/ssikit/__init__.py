"""Live-range splitting and sparse dataflow analysis.

A program is parsed from text, split into one of the SSI flavours by a
strategy (``ssify``), then analysed sparsely over its versions.  Dense
solving, the interpreter and sparse evaluation graphs serve as oracles.

>>> from ssikit import parse, ssify, get_client, solve
>>> program = parse(open("diamond.ssir").read())      # doctest: +SKIP
>>> split, report = ssify(program, "abcd")             # doctest: +SKIP
>>> solve(split, get_client("taint")).to_text()        # doctest: +SKIP
"""

from .checks import SSIReport, SSIViolation, require_ssi, ssa_violations, ssi_violations
from .clients import CLIENTS, get_client
from .dataflow import (ClientAnalysis, SolverDiverged, check_equivalence,
                       extract_sparse_system, solve, solve_dense, solve_sparse)
from .generate import generate_program
from .graphs import (dominance_frontier, dominator_tree, iterated_frontier,
                     liveness, liveness_sets)
from .interp import fuzz_equivalence, run
from .ir import (At, Block, Function, In, IRError, Node, Out, ParseError,
                 Program, ValidationError, Var, validate_program)
from .seg import build_seg, check_isomorphism, seg_equivalence
from .ssify import SplitReport, ssify
from .strategy import SplittingStrategy, eval_strategy, parse_strategy
from .text import parse, print_program, to_dot

__all__ = [
    "At", "Block", "CLIENTS", "ClientAnalysis", "Function", "IRError", "In",
    "Node", "Out", "ParseError", "Program", "SSIReport", "SSIViolation",
    "SolverDiverged", "SplitReport", "SplittingStrategy", "ValidationError",
    "Var", "build_seg", "check_equivalence", "check_isomorphism",
    "dominance_frontier", "dominator_tree", "eval_strategy",
    "extract_sparse_system", "fuzz_equivalence", "generate_program",
    "get_client", "iterated_frontier", "liveness", "liveness_sets", "parse",
    "parse_strategy", "print_program", "require_ssi", "run", "seg_equivalence",
    "solve", "solve_dense", "solve_sparse", "ssa_violations", "ssi_violations",
    "ssify", "to_dot", "validate_program",
]
