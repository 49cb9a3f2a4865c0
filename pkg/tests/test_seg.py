from __future__ import annotations

import pytest

from ssikit.clients import get_client
from ssikit.ir import At, In
from ssikit.seg import (ReachingDefinitions, ReachingUses, SegError, augment,
                        build_seg, check_isomorphism, random_instance,
                        seg_equivalence, theorem_program)

from conftest import corpus_text, program


def test_diamond_graph(diamond):
    g = build_seg(diamond, "v", ReachingDefinitions())
    assert g.entry == At("entry", 0)
    assert g.transfer == {At("L1", 0)}
    assert g.meet == {In("L3")}
    assert g.edges == {(At("entry", 0), At("L1", 0)),
                       (At("entry", 0), In("L3")),
                       (At("L1", 0), In("L3"))}


def test_diamond_points_map_to_their_reaching_node(diamond):
    g = build_seg(diamond, "v", ReachingDefinitions())
    assert g.mapping[("pt", "L2", 1)] == At("entry", 0)
    assert g.mapping[("pt", "L3", 1)] == In("L3")
    assert g.mapping[("edge", "L1", "L3")] == At("L1", 0)


def test_diamond_is_isomorphic_to_its_split_form(diamond):
    rep = seg_equivalence(diamond, "v", ReachingDefinitions())
    assert rep.ok, str(rep)
    assert str(rep).startswith("v: isomorphic")


def test_without_transfer_nodes_only_the_entry_remains(diamond):
    g = build_seg(diamond, "v", set())
    assert g.nodes == {At("entry", 0)} and not g.edges
    assert set(g.mapping.values()) <= {At("entry", 0), None}


def test_single_block_with_one_transfer_node():
    p = program("func main {\nentry:\n  v = input\n  use v\n  v = const 2\n  use v\n  ret\n}\n")
    g = build_seg(p, "v", {At("entry", 2)})
    assert not g.meet
    assert g.edges == {(At("entry", 0), At("entry", 2))}
    assert seg_equivalence(p, "v", ReachingDefinitions()).ok


def test_augmentation_adds_pseudo_operations(diamond):
    aug = augment(diamond, "v")
    entry = aug.function.block("entry")
    assert entry.body[0].pseudo and entry.body[1].pseudo
    assert aug.node_map[At("entry", 0)] == At("entry", 2)
    assert aug.gaps


def test_non_partitioned_client_is_refused(diamond):
    with pytest.raises(SegError, match="partitioned"):
        build_seg(diamond, "v", get_client("constprop"))


def test_return_as_transfer_node_is_refused(diamond):
    with pytest.raises(SegError, match="return"):
        theorem_program(diamond, "v", {At("L3", 1)})


def test_unknown_node_is_refused(diamond):
    with pytest.raises(SegError):
        build_seg(diamond, "v", {At("nowhere", 0)})


def test_missing_pseudo_operations_are_refused(diamond):
    g = build_seg(diamond, "v", ReachingDefinitions())
    with pytest.raises(SegError, match="theorem_program"):
        check_isomorphism(g, diamond, "v")


def test_reaching_uses_corpus_file():
    p = program(corpus_text("reaching_uses"))
    g = build_seg(p, "v", ReachingUses())
    assert g.meet
    rep = seg_equivalence(p, "v", ReachingUses())
    assert rep.ok, str(rep)


@pytest.mark.parametrize("seed", range(60))
def test_random_instances(seed):
    p, v, nodes = random_instance(seed)
    if v is None:
        pytest.skip("program has no variables")
    rep = seg_equivalence(p, v, nodes)
    assert rep.ok, str(rep)


def test_dot_output(diamond):
    dot = build_seg(diamond, "v", ReachingDefinitions()).to_dot()
    assert dot.startswith('digraph "seg_v"') and "diamond" in dot
