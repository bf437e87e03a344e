"""Shared pytest plumbing: the acceptance-criteria summary table.

Criterion tests record one line each into ``ACCEPTANCE``; the terminal
summary prints them together at the end of the run so the pass/fail
status of every gate is visible in one place.
"""

ACCEPTANCE = {}


def note(criterion: int, passed: bool, detail: str) -> None:
    """Record a criterion outcome, then enforce it."""
    ACCEPTANCE[criterion] = (bool(passed), detail)
    assert passed, f"criterion {criterion}: {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[num]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {status} - {detail}")
