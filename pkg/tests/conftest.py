"""Shared test plumbing: collect acceptance-criterion result lines and echo
them at the end of the run, outside pytest's output capture."""

CRITERION_LINES = []


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
