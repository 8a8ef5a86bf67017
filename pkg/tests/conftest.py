import sys
import shutil
from pathlib import Path

import pytest

from funcfree.sources import SourceContext

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir(tmp_path):
    """A private copy of the fixture directory (rewrites write next to sources)."""
    target = tmp_path / "fixtures"
    shutil.copytree(FIXTURES, target)
    return target


@pytest.fixture
def context(fixtures_dir):
    return SourceContext([fixtures_dir])


def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
