import numpy as np
import pytest

from entsandwich.linalg import DimensionProfile
from entsandwich.states import make_schmidt_vector

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def random_schmidt(profile, rng):
    n1 = profile.dims[0]
    z = rng.standard_normal(n1) + 1j * rng.standard_normal(n1)
    return make_schmidt_vector(profile, z, normalize=True)


def random_hermitian(n, rng):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return g + g.conj().T


def random_unitary(n, rng):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


@pytest.fixture
def bell_profile():
    return DimensionProfile((2, 2))


@pytest.fixture
def record_acceptance():
    def record(name, passed, detail=""):
        ACCEPTANCE_RESULTS.append((name, passed, detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
