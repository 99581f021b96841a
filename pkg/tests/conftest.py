import sys
import time
import zlib

import numpy as np
import pytest

from histreg import _accel, load_blood


@pytest.fixture(scope="session")
def blood():
    return load_blood()


@pytest.fixture
def rng(request):
    # distinct but reproducible stream per test
    return np.random.default_rng(zlib.crc32(request.node.name.encode()))


@pytest.fixture(params=["numba", "numpy"])
def kernel_path(request, monkeypatch):
    """Run a test once per kernel implementation."""
    if request.param == "numba" and not _accel.HAVE_NUMBA:
        pytest.skip("numba not installed")
    monkeypatch.setattr(_accel, "ENABLE_NUMBA", request.param == "numba")
    return request.param


def pytest_sessionstart(session):
    session.config._histreg_t0 = time.perf_counter()


def pytest_terminal_summary(terminalreporter, config):
    import test_acceptance

    lines = list(test_acceptance.RESULTS.values()) if "test_acceptance" in sys.modules else []
    if not lines:
        return
    elapsed = time.perf_counter() - config._histreg_t0
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
    status = "PASS" if elapsed < 60 else "FAIL"
    terminalreporter.write_line(f"criterion 6 suite runtime: {status} | {elapsed:.1f}s < 60s")
