from __future__ import annotations

import pytest

from coda.context import Context
from coda.ehealth import load_scenario

# filled by test_acceptance.py, one entry per criterion
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def ehealth() -> Context:
    return load_scenario("ehealth").context()


@pytest.fixture
def ehealth_sources():
    return load_scenario("ehealth").sources


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0].split()[-1].rstrip("abc")), k)):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
