from __future__ import annotations

import pytest

from ssikit.generate import generate_program
from ssikit.ir import (At, CfgIndex, In, Out, ParseError, ValidationError, Var,
                       defs_uses)
from ssikit.text import parse, print_program, to_dot
from ssikit.dataflow import solve_dense
from ssikit.clients import get_client

from conftest import DIAMOND, program


def test_diamond_cfg_shape(diamond):
    cfg = CfgIndex(diamond.function())
    assert set(cfg.preds["L3"]) == {"L1", "L2"}
    assert set(cfg.succs["entry"]) == {"L1", "L2"}
    assert cfg.is_join("L3") and cfg.is_fork("entry")
    assert not cfg.is_join("L1") and not cfg.is_fork("L1")


def test_straight_line_block_has_no_joins_or_forks():
    cfg = CfgIndex(program("func main {\nentry:\n  v = input\n  use v\n  ret\n}\n").function())
    assert not any(cfg.is_join(b) or cfg.is_fork(b) for b in cfg.labels)


def test_self_loop_is_join_and_fork():
    p = program("""func main {
entry:
  c = input
  jump L
L:
  branch c == 0, L, X
X:
  ret
}""")
    cfg = CfgIndex(p.function())
    assert set(cfg.preds["L"]) == {"entry", "L"}
    assert cfg.is_join("L") and cfg.is_fork("L")


def test_defs_uses_on_diamond(diamond):
    du = defs_uses(diamond.function(), "v")
    assert du.defs == {At("entry", 0), At("L1", 0)}
    assert du.uses == {At("L2", 0), At("L3", 0)}
    assert du.conds == {At("entry", 1)}


def test_defs_uses_of_unmentioned_variable_is_empty(diamond):
    du = defs_uses(diamond.function(), "w")
    assert not (du.defs or du.uses or du.conds or du.last_uses)


def test_last_use_of_straight_line_is_the_second_use():
    p = program("func main {\nentry:\n  v = input\n  use v\n  use v\n  ret\n}\n")
    assert defs_uses(p.function(), "v").last_uses == {At("entry", 2)}


def test_parse_diamond_gives_four_blocks(diamond):
    assert [b.label for b in diamond.function().blocks] == ["entry", "L1", "L2", "L3"]


def test_empty_input_needs_an_entry_block():
    with pytest.raises(ParseError, match="entry block required"):
        parse("")


def test_phi_operands_are_keyed_by_predecessor():
    p = program("""func main {
entry:
  c.1 = input
  branch c.1 == 0, L1, L2
L1:
  v.2 = const 1
  jump L3
L2:
  v.3 = const 2
  jump L3
L3:
  v.1 = phi(L1: v.2, L2: v.3)
  use v.1
  ret
}""")
    phi = p.function().block("L3").phis[0]
    assert phi.dst == Var("v", 1)
    assert phi.args == {"L1": Var("v", 2), "L2": Var("v", 3)}


def test_sigma_and_attached_copy_print_in_grammar_shape():
    text = """func main {
entry:
  v.1 = input
  (L1: v.2, L2: v.3) = sigma(v.1)
  branch v.1 == 0, L1, L2
L1:
  use v.2 || v.4 = v.2
  ret
L2:
  use v.3
  ret
}
"""
    out = print_program(parse(text))
    assert "  (L1: v.2, L2: v.3) = sigma(v.1)\n  branch" in out
    assert "use v.2 || v.4 = v.2" in out
    assert out == text


def test_block_without_sigmas_prints_nothing_before_terminator(diamond):
    assert "sigma" not in print_program(diamond)


def test_duplicate_label_is_rejected():
    with pytest.raises(ValidationError, match="duplicate block label"):
        parse("func main {\nentry:\n  jump A\nA:\n  ret\nA:\n  ret\n}\n")


def test_phi_in_single_predecessor_block_is_rejected():
    with pytest.raises(ValidationError):
        parse("func main {\nentry:\n  v = input\n  jump A\nA:\n  w = phi(entry: v)\n  ret\n}\n")


def test_parse_error_reports_line_and_column():
    with pytest.raises(ParseError) as err:
        parse("func main {\nentry:\n  v = add v\n  ret\n}\n")
    assert str(err.value).startswith("3:")


def test_comments_are_ignored():
    p = parse("# header\nfunc main {  # trailing\nentry:\n  ret  # done\n}\n")
    assert len(p.function().blocks) == 1


def test_dot_of_diamond_has_four_nodes_and_four_edges(diamond):
    dot = to_dot(diamond)
    assert dot.count("->") == 4
    assert sum(1 for line in dot.splitlines() if "[label=" in line and "->" not in line) == 4


def test_dot_labels_edges_with_constants(diamond):
    dense = solve_dense(diamond.function(), get_client("constprop"))
    dot = to_dot(diamond, dense.edge_labels())
    edge = next(line for line in dot.splitlines() if "entry" in line and "L2" in line and "->" in line)
    assert "v:NAC" in edge


@pytest.mark.parametrize("seed", range(0, 200, 7))
def test_generated_programs_round_trip(seed):
    p = generate_program(seed)
    assert parse(print_program(p)) == p


def test_printing_is_stable_on_diamond():
    assert print_program(parse(DIAMOND)) == print_program(parse(print_program(parse(DIAMOND))))
