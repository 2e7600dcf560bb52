"""Shared fixtures and the acceptance report summary hook."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

ACCEPTANCE_LINES = []


def record_criterion(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
