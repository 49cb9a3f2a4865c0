from __future__ import annotations

from importlib import resources

import pytest

from ssikit.cli import main

from conftest import DIAMOND


def corpus_path(name: str) -> str:
    return str(resources.files("ssikit") / "corpus" / f"{name}.ssir")


@pytest.fixture
def diamond_file(tmp_path):
    path = tmp_path / "diamond.ssir"
    path.write_text(DIAMOND)
    return str(path)


def test_validate(diamond_file, capsys):
    assert main(["validate", diamond_file]) == 0
    assert "ok (1 functions, 4 blocks)" in capsys.readouterr().out


def test_empty_file_is_a_parse_error(tmp_path, capsys):
    path = tmp_path / "empty.ssir"
    path.write_text("")
    assert main(["validate", str(path)]) == 1
    assert capsys.readouterr().err.startswith("ssify-kit:")


def test_missing_file_is_a_parse_error(tmp_path):
    assert main(["print", str(tmp_path / "nope.ssir")]) == 1


def test_ssify_abcd_prints_program_and_report(diamond_file, capsys):
    assert main(["ssify", diamond_file, "-s", "abcd"]) == 0
    out, err = capsys.readouterr()
    assert "sigma" in out and "phi" in out
    assert err


def test_ccp_and_abcd_agree_on_the_diamond(diamond_file, capsys):
    main(["ssify", diamond_file, "-s", "abcd", "-q"])
    abcd = capsys.readouterr().out
    main(["ssify", diamond_file, "-s", "ccp", "-q"])
    assert capsys.readouterr().out == abcd


def test_unknown_strategy_is_a_transform_error(diamond_file):
    assert main(["ssify", diamond_file, "-s", "bogus"]) == 2


def test_analyze_both_passes(capsys):
    assert main(["analyze", corpus_path("taint_sanitize"), "-c", "taint", "--both"]) == 0
    assert "PASS dense and sparse" in capsys.readouterr().out


def test_raw_sparse_analysis_is_refused(capsys):
    assert main(["analyze", corpus_path("taint_sanitize"), "-c", "taint", "--raw"]) == 3
    assert "not in SSI form" in capsys.readouterr().err


def test_analyze_records(capsys):
    assert main(["analyze", corpus_path("null_receiver"), "-c", "nullptr",
                 "--format", "records"]) == 0
    assert "var=v.2 value=NotNull" in capsys.readouterr().out


def test_run_trace(diamond_file, capsys):
    assert main(["run", diamond_file, "-i", "5"]) == 0
    assert "status=ok" in capsys.readouterr().out


def test_dot_with_client(diamond_file, capsys):
    assert main(["dot", diamond_file, "-c", "constprop"]) == 0
    assert capsys.readouterr().out.startswith("digraph")


def test_seg_command(capsys):
    assert main(["seg", corpus_path("reaching_uses"), "v", "-c", "reaching-uses"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_verify_suite(capsys):
    assert main(["verify", "--suite", "examples"]) == 0
    assert "suite=examples status=PASS" in capsys.readouterr().out


def test_failing_suite_prints_a_reproduce_line(capsys):
    assert main(["verify", "--suite", "growth", "--trials", "0", "--seed", "3"]) == 4
    assert "reproduce: ssify-kit verify --suite growth --seed 3 --trials 0" in capsys.readouterr().out


def test_seed_defaults_to_environment(monkeypatch, capsys):
    monkeypatch.setenv("SSIFY_SEED", "11")
    main(["verify", "--suite", "examples"])
    assert "seed=11" in capsys.readouterr().out
