from collections import OrderedDict

import numpy as np
import pytest

from smpmoments import example_path, load_model

_CRITERIA = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion a test belongs to")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    n, title = marker.args
    ok = call.excinfo is None
    entry = _CRITERIA.setdefault(n, {"title": title, "ok": True, "failed": []})
    if not ok:
        entry["ok"] = False
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        entry = _CRITERIA[n]
        status = "PASS" if entry["ok"] else "FAIL"
        extra = "" if entry["ok"] else f" (failing: {', '.join(entry['failed'])})"
        terminalreporter.write_line(f"criterion {n}: {status}  {entry['title']}{extra}")


@pytest.fixture
def example_model():
    return load_model(example_path())


@pytest.fixture
def example_float():
    return load_model(example_path(), mode="float")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
