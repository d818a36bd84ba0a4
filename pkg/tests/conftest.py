"""Shared fixtures and the acceptance-summary reporter.

Acceptance tests record one verdict per criterion; the verdicts are echoed
as PASS/FAIL lines in the terminal summary so the run log carries them even
when output capture is on.
"""

import pytest

ACCEPTANCE_RESULTS = {}


@pytest.fixture
def acceptance():
    def record(number: int, title: str, passed: bool, detail: str = ""):
        ACCEPTANCE_RESULTS[number] = (title, bool(passed), detail)
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, passed, detail = ACCEPTANCE_RESULTS[number]
        verdict = "PASS" if passed else "FAIL"
        line = f"CRITERION {number} ({title}): {verdict}"
        if detail:
            line += f" — {detail}"
        terminalreporter.write_line(line)
