"""Collects the one-line verdicts of the acceptance criteria and prints them
at the end of the session, so they show up whatever the capture mode."""

VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(VERDICTS, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
