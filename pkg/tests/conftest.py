import pytest

import oracles


@pytest.fixture
def paperlib():
    return oracles.paperlib()


@pytest.fixture
def fig6lib():
    return oracles.fig6lib()


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            name = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in name or rep.when != "call" and outcome == "passed":
                continue
            label = name.split("::test_criterion_")[1]
            number, _, title = label.partition("_")
            lines.append((int(number), f"criterion {number}: {'PASS' if outcome == 'passed' else 'FAIL'}  {title.replace('_', ' ')}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(set(lines)):
            terminalreporter.write_line(line)
