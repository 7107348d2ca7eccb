import os
from pathlib import Path

import pytest

from harness import FIXTURES

GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def golden() -> Path:
    return GOLDEN


@pytest.fixture
def in_tmp(tmp_path):
    old = os.getcwd()
    os.chdir(tmp_path)
    try:
        yield tmp_path
    finally:
        os.chdir(old)


# one line per acceptance criterion, filled in by test_acceptance.py
CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        verdict, title = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  {title}")
