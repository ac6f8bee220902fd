import sys


def pytest_terminal_summary(terminalreporter):
    # one line per acceptance criterion, collected by test_acceptance.py
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
