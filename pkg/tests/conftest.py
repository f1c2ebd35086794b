from pathlib import Path

import pytest

from aspecteval.similarity import OracleBackend

FIXTURES = Path(__file__).parent / "fixtures"

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        status = "SKIPPED" if report.skipped else ("PASS" if report.passed else "FAIL")
        _acceptance.setdefault(tuple(marker.args), []).append(status)


def _combine(statuses):
    if "FAIL" in statuses:
        return "FAIL"
    skipped = statuses.count("SKIPPED")
    if skipped == len(statuses):
        return "SKIPPED"
    return f"PASS ({skipped} conditional check(s) skipped)" if skipped else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), statuses in sorted(_acceptance.items()):
        terminalreporter.write_line(f"criterion {number:>2}: {_combine(statuses)} - {title}")


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def aircon_backend():
    return OracleBackend.from_csv(FIXTURES / "aircon_oracle.csv")


@pytest.fixture
def sweep_backend():
    return OracleBackend.from_csv(FIXTURES / "sweep_oracle.csv")
