import pytest

from aara.cli import corpus_dir
from aara.parser import parse_program

ACCEPTANCE = {}  # criterion number -> (passed, title)


def load(name):
    return parse_program((corpus_dir() / name).read_text())


@pytest.fixture
def corpus():
    return load


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2}: {'PASS' if ok else 'FAIL'}  {title}")
