"""Shared pytest hooks: surface the acceptance-criterion PASS/FAIL lines in
the terminal summary (plain prints are swallowed by output capture)."""

CRITERION_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
