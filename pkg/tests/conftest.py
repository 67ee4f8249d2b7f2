import warnings

import pytest

from pipeforge.registry import default_registry
from pipeforge.transformers import ConvergenceWarning

_ACCEPTANCE = {}


@pytest.fixture(autouse=True)
def _quiet_ica():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        yield


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture(scope="session")
def light_registry():
    """Smaller ensembles for tests that run many cross-validations."""
    return default_registry({"rf": {"n_estimators": 25}, "gb": {"n_estimators": 30},
                             "ada": {"n_estimators": 30}})


def pytest_runtest_logreport(report):
    criterion = getattr(report, "criterion", None)
    if criterion is None and "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        if name.startswith("test_criterion_"):
            criterion = name
    if criterion and (report.when == "call" or report.outcome != "passed"):
        _ACCEPTANCE.setdefault(criterion, report.outcome)
        if report.outcome != "passed":
            _ACCEPTANCE[criterion] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s.split("_")[2])):
        verdict = "PASS" if _ACCEPTANCE[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")
