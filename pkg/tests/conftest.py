"""Prints one PASS/FAIL line per acceptance criterion after the run."""
import pytest

CRITERIA = {
    "broyden_residuals": "Broyden-class residuals at n = 10^4 are <= 1e-13",
    "sr1_residuals": "SR1 residuals at n = 10^4 are <= 1e-12",
    "oracle_equivalence": "every solver matches the dense oracle to 1e-10 on 50 instances",
    "middle_matrix": "recursive middle matrix equals the direct block inverse",
    "duality": "BFGS/DFP duality and SR1 self-duality hold entrywise to 1e-11",
    "spectrum": "compact spectrum matches a dense eigensolve",
    "flop_models": "flop models, their ordering and inner-product counts",
    "timing_order": "median wall-time ordering at n = 10^5",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion the test belongs to")


def pytest_runtest_logreport(report):
    name = dict(report.user_properties).get("criterion")
    if name is None:
        return
    failed = report.failed or (report.when == "call" and report.skipped)
    if report.when == "call" or report.failed:
        _outcomes.setdefault(name, []).append(not failed)


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        item.user_properties.append(("criterion", mark.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for i, (name, text) in enumerate(CRITERIA.items(), 1):
        results = _outcomes.get(name)
        if results is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        tr.write_line(f"[{status:>7}] {i}. {text}")
