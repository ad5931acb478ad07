"""Shared pytest plumbing.

The acceptance suite (test_acceptance.py) appends one line per checked
claim to ACCEPTANCE_REPORTS; the terminal-summary hook prints them in a
dedicated section so the verdicts are visible even on a fully green run.
"""

ACCEPTANCE_REPORTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_REPORTS:
        return
    terminalreporter.section("acceptance report")
    for line in ACCEPTANCE_REPORTS:
        terminalreporter.write_line(line)
