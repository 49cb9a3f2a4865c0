from __future__ import annotations

import pytest

from ssikit.clients import CLIENTS, get_client
from ssikit.dataflow import (SparseResult, check_equivalence, extract_sparse_system,
                             solve, solve_dense, solve_sparse)
from ssikit.graphs import dominator_tree
from ssikit.ir import Var
from ssikit.lattices import CONST, NAC
from ssikit.ssify import rename, split, ssify
from ssikit.strategy import eval_strategy, parse_strategy

from conftest import corpus_text, program

V = lambda n: Var("v", n)


def _values(p, client_name, **kw):
    client = get_client(client_name)
    q, _ = ssify(p, client.strategy)
    sol = solve(q, client)
    return {str(v): sol.lattice.show(x) for v, x in sol.values.items()}


def test_dense_constprop_meets_to_nac_at_the_join(diamond):
    dense = solve_dense(diamond.function(), get_client("constprop"))
    assert dense.value(("pt", "L3", 0), Var("v")) == NAC


def test_dense_constant_reaches_its_use():
    p = program("func main {\nentry:\n  v = const 7\n  use v\n  ret\n}\n")
    dense = solve_dense(p.function(), get_client("constprop"))
    assert dense.value(("pt", "entry", 1), Var("v")) == 7


def test_dense_taint_at_diamond_join(diamond):
    dense = solve_dense(diamond.function(), get_client("taint"))
    assert dense.lattice.show(dense.value(("pt", "L3", 0), Var("v"))) == "Tainted"


def test_constprop_constraints_on_diamond(diamond):
    q, _ = ssify(diamond, "constprop")
    cons = extract_sparse_system(q, get_client("constprop"), verify=True)
    assert [c.target for c in cons] == [V(1), V(2), V(3)]
    phi = cons[2]
    assert set(phi.operands) == {V(1), V(2)}


def test_sparse_constprop_values_on_diamond(diamond):
    q, _ = ssify(diamond, "constprop")
    client = get_client("constprop")
    sol = solve_sparse(extract_sparse_system(q, client), client, q)
    assert (sol[V(1)], sol[V(2)], sol[V(3)]) == (NAC, 1, NAC)


def test_single_invoke_gives_one_backward_constraint():
    p = program("func main {\nentry:\n  v = input\n  invoke v.m\n  ret\n}\n")
    client = get_client("classinf")
    q, _ = ssify(p, client.strategy)
    cons = [c for c in extract_sparse_system(q, client) if c.target.base == "v"]
    assert len(cons) == 1
    assert cons[0].G({}) == frozenset({"m"})


def test_empty_constraint_system_solves_in_zero_steps():
    sol = solve_sparse([], CONST)
    assert sol.values == {} and sol.iterations == 0


def test_unconstrained_version_stays_top():
    p = program("func main {\nentry:\n  use w\n  ret\n}\n")
    client = get_client("constprop")
    sol = solve(ssify(p, client.strategy)[0], client)
    assert all(x == client.lattice_for(p.function()).top for x in sol.values.values())


def test_dense_and_sparse_agree_on_diamond(diamond):
    for name in ("constprop", "taint"):
        client = get_client(name)
        q, _ = ssify(diamond, "abcd" if name == "taint" else client.strategy)
        fn = q.function()
        assert check_equivalence(solve_dense(fn, client), solve(fn, client)).ok


def test_corrupted_sparse_result_is_caught(diamond):
    client = get_client("constprop")
    q, _ = ssify(diamond, client.strategy)
    fn = q.function()
    sparse = solve(fn, client)
    bad = SparseResult(sparse.lattice, dict(sparse.values))
    bad.values[V(2)] = sparse.lattice.top
    rep = check_equivalence(solve_dense(fn, client), bad)
    assert not rep.ok
    point, var, _, _ = rep.first()
    assert var == V(2) and point == ("pt", "L1", 1)


def test_constant_folding():
    p = program("func main {\nentry:\n  a = const 2\n  b = const 3\n  c = add a b\n  use c\n  ret\n}\n")
    assert _values(p, "constprop")["c.1"] == "5"


def test_ccp_refines_the_equality_edge_before_clean(diamond):
    # after clean the L1 destination is dropped, because L1 overwrites v at once
    fn = diamond.function()
    trees = (dominator_tree(fn), dominator_tree(fn, "reverse"))
    s = eval_strategy(parse_strategy("abcd"), fn)["v"]
    renamed = rename(split(fn, "v", s, None, trees), "v")
    client = get_client("ccp")
    sol = solve(renamed, client)
    assert sol[V(2)] == 0 and sol[V(3)] == NAC


def test_taint_on_the_sanitize_example():
    got = _values(program(corpus_text("taint_sanitize")), "taint")
    assert (got["v.1"], got["v.2"], got["v.4"], got["v.5"]) == ("Tainted", "Clean", "Tainted", "Clean")


def test_taint_without_inputs_is_clean():
    p = program("func main {\nentry:\n  a = const 1\n  b = add a a\n  use b\n  ret\n}\n")
    assert set(_values(p, "taint").values()) == {"Clean"}


def test_null_receiver_example():
    got = _values(program(corpus_text("null_receiver")), "nullptr")
    assert got["v.2"] == "NotNull" and got["v.4"] == "PossiblyNull"


def test_second_receiver_is_not_null():
    p = program("func main {\nentry:\n  v = input\n  invoke v.m\n  invoke v.m\n  ret\n}\n")
    got = _values(p, "nullptr")
    assert got["v.1"] == "PossiblyNull" and got["v.2"] == "NotNull"


def test_no_invokes_leaves_inputs_possibly_null():
    p = program("func main {\nentry:\n  v = input\n  use v\n  ret\n}\n")
    assert set(_values(p, "nullptr").values()) == {"PossiblyNull"}


def test_class_inference_straight_line():
    p = program("func main {\nentry:\n  v = input\n  invoke v.a\n  invoke v.b\n  ret\n}\n")
    assert _values(p, "classinf")["v.1"] == "{a,b}"


def test_class_inference_unions_at_the_fork():
    p = program("""func main {
entry:
  v = input
  c = input
  branch c == 0, L1, L2
L1:
  invoke v.a
  jump L3
L2:
  invoke v.b
  jump L3
L3:
  ret
}""")
    got = _values(p, "classinf")
    assert got["v.1"] == "{a,b}"
    assert sorted(x for k, x in got.items() if k != "v.1" and k.startswith("v.")) == ["{a}", "{b}"]


def test_never_invoked_variable_has_no_requirements():
    p = program("func main {\nentry:\n  v = input\n  use v\n  ret\n}\n")
    assert _values(p, "classinf")["v.1"] == "{}"


def test_unknown_client_is_an_error():
    with pytest.raises(ValueError, match="unknown client"):
        get_client("liveness")


@pytest.mark.parametrize("name", sorted(CLIENTS))
def test_every_client_agrees_with_dense_on_the_corpus(name, corpus):
    client = get_client(name)
    for p in corpus.values():
        fn = ssify(p, client.strategy)[0].function()
        assert check_equivalence(solve_dense(fn, client), solve(fn, client)).ok
