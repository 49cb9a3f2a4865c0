from __future__ import annotations

import copy
from pathlib import Path

import pytest

from ssikit.generate import generate_program
from ssikit.interp import fuzz_equivalence, run
from ssikit.ir import validate_program
from ssikit.ssify import ssify
from ssikit.text import parse, print_program

from conftest import program

GOLDEN = Path(__file__).parent / "golden"


def test_diamond_taking_the_redefining_arm(diamond):
    assert run(diamond, [0]).trace == [("L3:0", 1)]


def test_diamond_taking_the_reading_arm(diamond):
    assert run(diamond, [5]).trace == [("L2:0", 5), ("L3:0", 5)]


def test_parallel_copy_swaps():
    p = program("""func main {
entry:
  a = const 1
  b = const 2
  a = b || b = a
  use a
  use b
  ret
}""")
    assert [v for _, v in run(p).trace] == [2, 1]


def test_reading_an_undefined_variable_traps():
    res = run(program("func main {\nentry:\n  use w\n  ret\n}\n"))
    assert res.status == "trap" and "w" in res.message


def test_empty_input_stream_reads_zero():
    p = program("func main {\nentry:\n  v = input\n  use v\n  ret\n}\n")
    assert run(p, []).trace == [("entry:1", 0)]


def test_infinite_loop_runs_out_of_fuel():
    p = program("func main {\nentry:\n  jump L\nL:\n  jump L\n}\n")
    res = run(p, fuel=50)
    assert res.status == "fuel" and res.steps == 51


def test_split_diamond_is_equivalent(diamond):
    q, _ = ssify(diamond, "abcd")
    assert fuzz_equivalence(diamond, q, trials=50, seed=1).ok


def test_swapped_phi_operands_are_caught(diamond):
    q, _ = ssify(diamond, "abcd")
    bad = copy.deepcopy(q)
    phi = bad.function().block("L3").phis[0]
    a, b = phi.args["L1"], phi.args["L2"]
    phi.args = {"L1": b, "L2": a}
    rep = fuzz_equivalence(diamond, bad, trials=50, seed=1)
    assert not rep.ok
    assert "divergent" in str(rep)


def test_loop_traces_agree_up_to_fuel():
    p = program("""func main {
entry:
  i = const 0
  one = const 1
  jump head
head:
  use i
  i = add i one
  branch i == 0, done, head
done:
  ret
}""")
    for row in ("ssi", "abcd", "uses-up"):
        q, _ = ssify(p, row)
        a, b = run(p, fuel=10_000), run(q, fuel=10_000)
        assert a.status == b.status == "fuel"
        assert a.trace == b.trace


def test_same_inputs_give_same_outcome():
    p = generate_program(5)
    assert run(p, [1, 2, 3]).key() == run(p, [1, 2, 3]).key()


def test_generator_is_deterministic_against_golden():
    assert print_program(generate_program(1)) == (GOLDEN / "seed1.ssir").read_text()


def test_one_block_bound_gives_straight_line():
    p = generate_program(4, max_blocks=1)
    fn = p.function()
    assert len(fn.blocks) == 1 and not fn.blocks[0].phis


def test_generated_programs_always_validate():
    for seed in range(1000):
        validate_program(generate_program(seed))


def test_generated_programs_never_read_undefined_values():
    for seed in range(100):
        assert run(generate_program(seed), [1, 2, 3], fuel=2000).status != "trap"
