"""Shared pytest hooks: print one verdict line per acceptance criterion."""

import pytest

_VERDICTS = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(number, title): acceptance criterion; gets a PASS/FAIL line "
        "in the terminal summary",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None and report.when == "call":
        number, title = marker.args
        verdict = "PASS" if report.passed else "FAIL"
        _VERDICTS.append((number, f"criterion {number:2d} ({title}): {verdict}"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
