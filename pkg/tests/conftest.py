import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance-gate verdicts after the run, outside capture."""
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None) if mod else None
    if verdicts:
        terminalreporter.section("acceptance gate")
        for line in verdicts:
            terminalreporter.write_line(line)
