import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print the acceptance verdict lines collected during the run."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT_LINES", None) if mod else None
    if not lines:
        return
    terminalreporter.section("acceptance report")
    for line in lines:
        terminalreporter.write_line(line)
