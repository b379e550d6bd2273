"""Shared pytest wiring: collect acceptance verdict lines for the summary.

The acceptance tests print one `[criterion N] PASS/FAIL` line each; with
output capture on, lines from passing tests would vanish, so they are
also registered here and echoed in a terminal summary section.
"""

_VERDICTS: list[str] = []


def record_verdict(line: str) -> None:
    _VERDICTS.append(line)


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
