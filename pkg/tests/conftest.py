import csv
from importlib import resources

import numpy as np
import pytest

_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    detail = getattr(item, "criterion_detail", "")
    _CRITERIA[number] = (title, "PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[number]
        line = f"criterion {number:2d} {status}: {title}"
        terminalreporter.write_line(line + (f" [{detail}]" if detail else ""))


@pytest.fixture
def record(request):
    """Attach a one-line summary of the measured values to the criterion line."""

    def _record(text: str):
        request.node.criterion_detail = text

    return _record


def _iris():
    with resources.files("submardia").joinpath("data/iris.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    x = np.array([[float(r[k]) for k in list(r)[:4]] for r in rows])
    return x, np.array([r["species"] for r in rows])


@pytest.fixture(scope="session")
def iris():
    return _iris()[0]


@pytest.fixture(scope="session")
def setosa():
    x, species = _iris()
    return x[species == "setosa"]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
