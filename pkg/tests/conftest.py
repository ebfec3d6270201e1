from collections import defaultdict

import numpy as np
import pytest

from rebalance.core import Dataset

# criterion number -> outcomes of the tests that cover it
_CRITERIA: dict[int, list[bool]] = defaultdict(list)
_TITLES: dict[int, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            n, title = mark.args
            _TITLES[n] = title
            item.user_properties.append(("criterion", n))


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[crit].append(report.outcome == "passed")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_TITLES):
        results = _CRITERIA.get(n, [])
        if not results:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {n:>2}: {status:<7} {_TITLES[n]}")


def make_ds(X, y, ids=None) -> Dataset:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    return Dataset(X, np.asarray(y), ids)


@pytest.fixture
def toy_binary():
    rng = np.random.default_rng(3)
    X = np.vstack([rng.normal(0, 1, (80, 2)), rng.normal(2.5, 0.7, (20, 2))])
    y = np.r_[np.zeros(80, int), np.ones(20, int)]
    return make_ds(X, y)
