from __future__ import annotations

import pytest

from ssikit.checks import (SSIViolation, overlap_violations, require_ssi,
                           ssa_violations, ssi_violations)
from ssikit.clients import get_client
from ssikit.generate import generate_program
from ssikit.ssify import ssify

from conftest import corpus_text, program


@pytest.mark.parametrize("name", ["constprop", "ccp", "taint", "nullptr", "classinf"])
def test_matching_strategy_satisfies_ssi(name, diamond):
    client = get_client(name)
    q, _ = ssify(diamond, client.strategy)
    rep = ssi_violations(q.function(), client)
    assert rep.ok, rep.first()


def test_unsplit_diamond_fails_split_meet_for_taint(diamond):
    rep = ssi_violations(diamond.function(), get_client("taint"))
    assert not rep.ok
    assert rep.violations["SPLIT-MEET"]


def test_wrong_strategy_for_null_analysis_fails_split_def():
    p = program("func main {\nentry:\n  v = input\n  invoke v.m\n  invoke v.m\n  ret\n}\n")
    q, _ = ssify(p, "constprop")
    rep = ssi_violations(q.function(), get_client("nullptr"))
    assert rep.violations["SPLIT-DEF"]
    with pytest.raises(SSIViolation) as err:
        require_ssi(q.function(), get_client("nullptr"))
    assert err.value.prop == "SPLIT-DEF"


def test_report_summary_names_all_five_properties(diamond):
    summary = ssi_violations(diamond.function(), get_client("taint")).summary()
    for prop in ("SPLIT-DEF", "SPLIT-MEET", "INFO", "LINK", "VERSION"):
        assert prop in summary


def test_double_definition_is_reported():
    p = program("func main {\nentry:\n  v.1 = input\n  v.1 = const 2\n  use v.1\n  ret\n}\n")
    assert any("defined 2 times" in m for m in ssa_violations(p.function()))


def test_definition_that_does_not_dominate_its_use_is_reported():
    p = program("""func main {
entry:
  c.1 = input
  branch c.1 == 0, L1, L2
L1:
  v.1 = const 1
  jump L2
L2:
  use v.1
  ret
}""")
    assert any("does not dominate" in m for m in ssa_violations(p.function()))


def test_overlapping_versions_are_reported():
    p = program("func main {\nentry:\n  v.1 = input\n  v.2 = const 1\n  use v.1\n  use v.2\n  ret\n}\n")
    assert overlap_violations(p.function())


def test_literal_meet_reading_flags_a_killing_loop():
    # the dead side of the fork at B4 redefines c before any use
    client = get_client("classinf")
    q, _ = ssify(generate_program(27), client.strategy)
    fn = q.function()
    assert ssi_violations(fn, client).ok
    strict = ssi_violations(fn, client, strict_meet=True)
    assert strict.violations["SPLIT-MEET"] and not strict.violations["INFO"]


def test_class_inference_file_is_ssi_after_splitting():
    client = get_client("classinf")
    q, _ = ssify(program(corpus_text("class_inference")), client.strategy)
    assert ssi_violations(q.function(), client).ok
