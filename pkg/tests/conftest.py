import numpy as np
import pytest

from coopchain.geometry import ChainGeometry
from coopchain.interaction import build_coupling_matrix
from coopchain.spectral_dynamics import diagonalize


@pytest.fixture(scope="session")
def chain16():
    geom = ChainGeometry(16, 0.1)
    return geom, diagonalize(build_coupling_matrix(geom))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def acceptance(request, capsys):
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(label, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        request.config.stash[_RESULTS].append(line)
        with capsys.disabled():
            print(f"\n    {line}")
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_RESULTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
