import os

import pytest

RESULTS = []


def pytest_collection_modifyitems(config, items):
    if os.environ.get("ASEPCONVOY_SLOW", "") not in ("", "0"):
        return
    skip = pytest.mark.skip(reason="slow; set ASEPCONVOY_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(number, label, ok, detail)."""

    def record(num, label, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {label}" + (f" ({detail})" if detail else "")
        RESULTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in RESULTS:
        terminalreporter.write_line(line)
