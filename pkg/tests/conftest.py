import numpy as np
import pytest

from liouspace.core import sandwich_superop, von_neumann_generator


def random_hermitian(rng, N, scale=1.0):
    A = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    return scale * 0.5 * (A + A.conj().T)


def random_density(rng, N):
    A = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    rho = A @ A.conj().T
    return rho / np.trace(rho)


def random_lindblad(rng, N, n_jump=2, scale=0.5):
    """Trace- and hermiticity-preserving generator with ``i d(rho)/dt = L rho``."""
    L = von_neumann_generator(random_hermitian(rng, N))
    eye = np.eye(N)
    for _ in range(n_jump):
        K = scale * (rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N)))
        KK = K.conj().T @ K
        D = sandwich_superop(K, K.conj().T) - 0.5 * sandwich_superop(KK, eye) - 0.5 * sandwich_superop(eye, KK)
        L = L + 1j * D
    return L


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


#: (number, title, passed, detail) rows filled in by the acceptance tests
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:2d} {title}: {detail}")
