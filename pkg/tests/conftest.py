import numpy as np
import pytest

from ecf8 import kernels

BACKENDS = ["numpy"] + (["numba"] if kernels.numba_backend is not None else [])

_criteria: dict[str, tuple[bool, str]] = {}


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20250101)


@pytest.fixture
def criterion(request):
    """Record an acceptance criterion outcome; printed in the terminal summary."""
    key = request.node.name

    def record(detail=""):
        _criteria[key] = (True, detail)

    _criteria[key] = (False, "not reached")
    yield record
    rep = getattr(request.node, "rep_call", None)
    if rep is not None and rep.failed:
        msg = rep.longrepr.reprcrash.message if rep.longrepr else ""
        _criteria[key] = (False, msg.splitlines()[0] if msg else "")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_criteria):
        ok, detail = _criteria[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}  {detail}")
