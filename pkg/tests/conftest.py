import numpy as np
import pytest

from proemlc import _fallback, kernels

BACKENDS = [("python", _fallback)]
try:
    from proemlc import _kernels

    BACKENDS.append(("cython", _kernels))
except ImportError:
    pass


@pytest.fixture(params=[b[0] for b in BACKENDS])
def backend(request, monkeypatch):
    """Route the training module through each available kernel implementation."""
    impl = dict(BACKENDS)[request.param]
    monkeypatch.setattr(kernels, "rank1_update", impl.rank1_update)
    monkeypatch.setattr(kernels, "rank1_sweep", impl.rank1_sweep)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def bipolar(rng, shape, p=0.3):
    return np.where(rng.random(shape) < p, 1.0, -1.0)


def rel_err(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(np.asarray(b))


ACCEPTANCE_RESULTS: dict[str, str] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the test body sets ``line['detail']`` as it goes."""
    line = {"name": request.node.name, "detail": ""}
    yield line
    rep = getattr(request.node, "rep_call", None)
    if rep is None or rep.skipped:
        reason = rep.longrepr[2] if rep is not None and rep.skipped else "setup skipped"
        status = f"SKIP  {reason}"
    else:
        status = ("PASS  " if rep.passed else "FAIL  ") + line["detail"]
    ACCEPTANCE_RESULTS[line["name"]] = status


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" or (rep.when == "setup" and rep.skipped):
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for name, status in sorted(ACCEPTANCE_RESULTS.items()):
            terminalreporter.write_line(f"{name:<44} {status}")
