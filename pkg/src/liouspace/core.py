"""Liouville-space algebra for finite-dimensional density matrices.

Operators are vectorized row-major: the N x N matrix ``A`` maps to the
length-N**2 vector with ``vec(A)[j*N + k] == A[j, k]``, so that ``|j><k|``
is the basis vector ``|jk>>``.  Superoperators are plain ``(N**2, N**2)``
complex arrays acting on that vector, and every module in the package shares
this single ordering.

The evolution equation is ``i hbar d(rho)/dt = L rho``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

#: reduced Planck constant used when callers do not pass one
HBAR = 1.0

#: default relative tolerances for construction checks
HERM_TOL = 1e-12
TRACE_TOL = 1e-12


class Check(NamedTuple):
    """Result of a structural predicate."""

    ok: bool
    residual: float


class PropagationError(RuntimeError):
    """Raised when a propagation produces non-finite values."""


def _square(A, name="matrix"):
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def dim_of(L) -> int:
    """Hilbert-space dimension N of an ``(N**2, N**2)`` superoperator."""
    n2 = np.shape(L)[0]
    N = int(round(np.sqrt(n2)))
    if N * N != n2 or np.shape(L) != (n2, n2):
        raise ValueError(f"superoperator shape {np.shape(L)} is not (N^2, N^2)")
    return N


def vec(A) -> np.ndarray:
    """Liouville-space vector of the operator ``A`` (row-major)."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A.reshape(-1).copy()


def unvec(v) -> np.ndarray:
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    N = int(round(np.sqrt(v.shape[-1])))
    if N * N != v.shape[-1]:
        raise ValueError(f"vector length {v.shape[-1]} is not a perfect square")
    return v.reshape(v.shape[:-1] + (N, N)).copy()


def basis_operator(j: int, k: int, N: int) -> np.ndarray:
    """The matrix unit ``|j><k|``."""
    E = np.zeros((N, N), dtype=complex)
    E[j, k] = 1.0
    return E


def liouville_inner(B, A) -> complex:
    """Scalar product ``<<B|A>> = Tr(B^dagger A)``."""
    B = np.asarray(B)
    A = np.asarray(A)
    if B.shape != A.shape:
        raise ValueError(f"dimension mismatch: {B.shape} vs {A.shape}")
    return complex(np.vdot(B.reshape(-1), A.reshape(-1)))


def check_density(rho, herm_tol: float = HERM_TOL, trace_tol: float = TRACE_TOL) -> np.ndarray:
    """Validate a density matrix and return it as a complex array.

    Hermiticity and unit trace are required; positivity is not, since
    general linear evolution produces states with negative eigenvalues.
    """
    rho = _square(rho, "density matrix")
    scale = max(1.0, np.abs(rho).max())
    herm = np.abs(rho - rho.conj().T).max()
    if herm > herm_tol * scale:
        raise ValueError(f"density matrix is not Hermitian (residual {herm:.3e})")
    tr = np.trace(rho)
    if abs(tr - 1) > trace_tol * scale:
        raise ValueError(f"density matrix trace is {tr}, expected 1")
    return rho


def von_neumann_generator(H, herm_tol: float = HERM_TOL) -> np.ndarray:
    """Superoperator of ``rho -> H rho - rho H``.

    Matrix elements ``L[jk, lm] = H[j, l] delta(m, k) - delta(j, l) H[m, k]``.
    """
    H = _square(H, "Hamiltonian")
    if np.abs(H - H.conj().T).max() > herm_tol * max(1.0, np.abs(H).max()):
        raise ValueError("Hamiltonian must be Hermitian")
    eye = np.eye(H.shape[0])
    return np.kron(H, eye) - np.kron(eye, H.T)


def sandwich_superop(A, B) -> np.ndarray:
    """Superoperator of ``rho -> A rho B``."""
    return np.kron(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex).T)


def apply(L, rho) -> np.ndarray:
    """Act with the superoperator ``L`` on the matrix ``rho``."""
    rho = np.asarray(rho, dtype=complex)
    if np.shape(L) != (rho.size, rho.size):
        raise ValueError(f"dimension mismatch: superoperator {np.shape(L)} on matrix {rho.shape}")
    return unvec(np.asarray(L) @ vec(rho))


def propagator(L, t: float, hbar: float = HBAR) -> np.ndarray:
    """The map ``exp(-i L t / hbar)`` as an ``(N**2, N**2)`` matrix.

    Uses scaling-and-squaring Pade approximation.  Non-finite output
    means ``L t`` is too large; split ``t`` and compose the maps instead.
    """
    L = np.asarray(L, dtype=complex)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    M = expm(-1j * L * (t / hbar))
    if not np.all(np.isfinite(M)):
        raise PropagationError(
            f"matrix exponential overflowed for |L t| = {np.abs(L).max() * abs(t):.3e}; "
            "reduce t and compose"
        )
    return M


def propagate_exp(L, rho0, t: float, hbar: float = HBAR) -> np.ndarray:
    """``rho(t) = unvec(exp(-i L t / hbar) vec(rho0))``."""
    rho0 = np.asarray(rho0, dtype=complex)
    if t == 0:
        return rho0.copy()
    return unvec(propagator(L, t, hbar) @ vec(rho0))


def rk4_trajectory(L, rho0, times, dt: float, hbar: float = HBAR) -> np.ndarray:
    """Fixed-step RK4 integration of ``i hbar d(rho)/dt = L rho``.

    ``L`` may be a stack of generators with shape ``(..., N**2, N**2)`` and
    ``rho0`` a matching stack ``(..., N, N)``; both broadcast.  The state is
    recorded at each entry of ``times`` (non-decreasing, starting at or after
    0), which must be integer multiples of ``dt`` up to rounding.

    Returns an array of shape ``(len(times), ..., N, N)``.
    """
    L = np.asarray(L, dtype=complex)
    rho0 = np.asarray(rho0, dtype=complex)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if dt <= 0:
        raise ValueError("dt must be positive")
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise ValueError("times must be non-decreasing and non-negative")
    N = rho0.shape[-1]
    A = -1j * L / hbar
    y = rho0.reshape(rho0.shape[:-2] + (N * N, 1))
    y = np.broadcast_to(y, np.broadcast_shapes(y.shape[:-2], A.shape[:-2]) + (N * N, 1)).copy()

    steps = np.rint(times / dt).astype(np.int64)
    if np.any(np.abs(steps * dt - times) > 1e-9 * np.maximum(1.0, times)):
        raise ValueError("every sample time must be a multiple of dt")
    out = np.empty((len(times),) + y.shape[:-2] + (N, N), dtype=complex)
    done = 0
    for i, target in enumerate(steps):
        while done < target:
            k1 = A @ y
            k2 = A @ (y + 0.5 * dt * k1)
            k3 = A @ (y + 0.5 * dt * k2)
            k4 = A @ (y + dt * k3)
            y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            done += 1
            if not np.all(np.isfinite(y)):
                raise PropagationError(f"RK4 produced non-finite values at step {done}")
        out[i] = y.reshape(y.shape[:-2] + (N, N))
    return out


def propagate_ode(L, rho0, t: float, dt: float, hbar: float = HBAR) -> np.ndarray:
    """Independent RK4 route to ``rho(t)``; global error is O(dt**4).

    ``t`` must be a multiple of ``dt``.
    """
    if not 0 < dt <= t:
        raise ValueError("need 0 < dt <= t")
    return rk4_trajectory(L, rho0, [t], dt, hbar)[0]


def is_hermiticity_preserving(L, tol: float = HERM_TOL) -> Check:
    """Test ``L[ij, kl] == -conj(L[ji, lk])``, i.e. Hermitian in, Hermitian out."""
    L = np.asarray(L, dtype=complex)
    N = dim_of(L)
    T = L.reshape(N, N, N, N)
    residual = float(np.abs(T + T.transpose(1, 0, 3, 2).conj()).max())
    return Check(residual <= tol * max(1.0, np.abs(L).max()), residual)


def is_trace_preserving(L, tol: float = TRACE_TOL) -> Check:
    """Test ``sum_i L[ii, kl] == 0`` for every ``(k, l)``."""
    L = np.asarray(L, dtype=complex)
    N = dim_of(L)
    sums = np.einsum("iikl->kl", L.reshape(N, N, N, N))
    residual = float(np.abs(sums).max())
    return Check(residual <= tol * max(1.0, np.abs(L).max()), residual)


def supercommutator(Q, L) -> np.ndarray:
    """``[Q, L] = Q L - L Q`` in the shared basis."""
    Q = np.asarray(Q)
    L = np.asarray(L)
    if Q.shape != L.shape:
        raise ValueError(f"dimension mismatch: {Q.shape} vs {L.shape}")
    return Q @ L - L @ Q
