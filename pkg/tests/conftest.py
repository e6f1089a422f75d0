import pytest

from toda_lab import logs
from toda_lab.gutzwiller import SpectralData
from toda_lab.nlie import NlieParams, solve_nlie


@pytest.fixture(autouse=True)
def output_dir(tmp_path, monkeypatch):
    """Every test writes its log files and outputs into its own directory."""
    monkeypatch.setenv(logs.OUTPUT_DIR_ENV, str(tmp_path))
    logs.reset_handlers()
    yield tmp_path
    logs.reset_handlers()


@pytest.fixture
def spectral_n2():
    return SpectralData(N=2, tau=(0.7, -0.7), Lambda=0.3, hbar=1.0)


@pytest.fixture
def spectral_n3():
    return SpectralData(N=3, tau=(0.9, 0.1, -1.0), Lambda=0.2, hbar=1.0)


_solutions = {}


@pytest.fixture(scope="session")
def nlie_solution():
    """Solved NLIE instances shared across the session, keyed by (N, Lambda, delta)."""

    def solve(N, Lambda, delta, hbar=1.0):
        key = (N, Lambda, tuple(delta), hbar)
        if key not in _solutions:
            _solutions[key] = solve_nlie(NlieParams(N=N, hbar=hbar, Lambda=Lambda, delta=tuple(delta)))
        return _solutions[key]

    return solve
