"""Shared helpers for the test suite.

The acceptance tests record one human-readable pass/fail line per
criterion; the terminal-summary hook replays them at the end of the run
so the verdicts are visible even with output capture on.
"""
from __future__ import annotations

_CRITERION_LINES: list[str] = []


def record_criterion(number: int, name: str, passed: bool, detail: str) -> None:
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {name}: {detail}"
    _CRITERION_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERION_LINES:
            terminalreporter.write_line(line)
