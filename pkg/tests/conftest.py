import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

ACCEPTANCE = {}


def record(number, title, passed, detail=""):
    """Store one acceptance outcome; printed in the terminal summary."""
    ACCEPTANCE[number] = (title, bool(passed), detail)
    print(f"[criterion {number}] {'PASS' if passed else 'FAIL'}: {title} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}  ({detail})")
