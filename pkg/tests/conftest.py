"""Shared pytest plumbing.

The acceptance tests record one verdict line per criterion; the terminal
summary hook reprints them after the run so the lines are visible even
for passing tests under captured output.
"""

acceptance_lines: list[str] = []


def record_acceptance(line: str) -> None:
    acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_lines:
        terminalreporter.write_line(line)
