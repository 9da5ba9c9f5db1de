from __future__ import annotations

import sys

import pytest

from hybridrag.cli import fixture_path
from hybridrag.graphstore import GraphStore


@pytest.fixture
def sample_store() -> GraphStore:
    return GraphStore.load(fixture_path("sample_graph.jsonl"))


@pytest.fixture
def fixtures():
    return fixture_path


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
