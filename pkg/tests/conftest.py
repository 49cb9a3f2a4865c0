from __future__ import annotations

from importlib import resources

import pytest

from ssikit.text import parse

DIAMOND = (resources.files("ssikit") / "corpus" / "diamond.ssir").read_text()


def corpus_text(name: str) -> str:
    return (resources.files("ssikit") / "corpus" / f"{name}.ssir").read_text()


def program(text: str):
    return parse(text)


@pytest.fixture
def diamond():
    return parse(DIAMOND)


@pytest.fixture
def corpus():
    from ssikit.verify import bundled_corpus
    return bundled_corpus()
