"""Collects outcomes of tests marked ``acceptance(number, title)`` and prints
one PASS/FAIL line per criterion at the end of the session."""
from __future__ import annotations

import pytest

_outcomes: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered exit criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = marker.args[0], marker.args[1]
        entry = _outcomes.setdefault(number, {"title": title, "passed": True, "tests": 0})
        entry["tests"] += 1
        entry["passed"] &= rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_outcomes):
        e = _outcomes[number]
        verdict = "PASS" if e["passed"] else "FAIL"
        tr.write_line(f"criterion {number:>2}  {verdict}  {e['title']} ({e['tests']} check{'s' if e['tests'] > 1 else ''})")
