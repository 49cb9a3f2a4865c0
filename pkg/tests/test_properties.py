from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from ssikit.generate import generate_program
from ssikit.lattices import CONST, NAC, NULL, TAINT, TOP, method_sets
from ssikit.ssify import ssify
from ssikit.text import parse, print_program

LATTICES = [CONST, TAINT, NULL, method_sets(["a", "b", "c"])]


def elements(lat):
    if lat is CONST:
        return st.one_of(st.just(TOP), st.just(NAC), st.integers(-3, 3))
    return st.sampled_from(lat.samples)


@st.composite
def triples(draw):
    lat = draw(st.sampled_from(LATTICES))
    e = elements(lat)
    return lat, draw(e), draw(e), draw(e)


@given(triples())
def test_meet_is_a_semilattice(t):
    lat, a, b, c = t
    assert lat.meet(a, a) == a
    assert lat.meet(a, b) == lat.meet(b, a)
    assert lat.meet(lat.meet(a, b), c) == lat.meet(a, lat.meet(b, c))
    assert lat.meet(a, lat.top) == a
    assert lat.meet(a, lat.bottom) == lat.bottom


@given(triples())
def test_meet_is_monotone(t):
    lat, a, b, c = t
    if lat.leq(a, b):
        assert lat.leq(lat.meet(a, c), lat.meet(b, c))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 10))
def test_print_parse_round_trip(seed, blocks):
    p = generate_program(seed, max_blocks=blocks)
    text = print_program(p)
    assert parse(text) == p
    assert print_program(parse(text)) == text


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["ssi", "abcd", "uses-up", "defs-uses-down"]))
def test_split_forms_round_trip(seed, row):
    q, _ = ssify(generate_program(seed), row)
    text = print_program(q)
    assert print_program(parse(text)) == text


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_ssify_is_deterministic(seed):
    p = generate_program(seed)
    assert print_program(ssify(p, "ssi")[0]) == print_program(ssify(p, "ssi")[0])
