"""Maps generated by superoperators: Choi matrices, Kraus operators and
conserved quantities.

The Choi matrix of a map ``M`` is ``C = sum_jk M(|j><k|) (x) |j><k|`` in
the row-major vec basis.  A unitary conjugation ``X -> U X U^dagger`` then has
``C = vec(U) vec(U)^dagger``, so Kraus operators are eigenvectors of ``C``
reshaped row-major.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .core import dim_of, is_trace_preserving, propagator, unvec, vec, HBAR

#: relative singular-value threshold for nullspace extraction
NULL_TOL = 1e-10


class NotCompletelyPositive(ValueError):
    """The map has a Choi matrix with a negative eigenvalue."""

    def __init__(self, min_eigenvalue: float):
        super().__init__(f"Choi matrix has negative eigenvalue {min_eigenvalue:.3e}; "
                         "the map is not completely positive")
        self.min_eigenvalue = min_eigenvalue


class CPCheck(NamedTuple):
    ok: bool
    min_eigenvalue: float


def map_at_time(L, t: float, hbar: float = HBAR) -> np.ndarray:
    """The map ``exp(-i L t)`` acting on vectorized operators."""
    return propagator(L, t, hbar)


def apply_map(M, rho) -> np.ndarray:
    return unvec(np.asarray(M) @ vec(rho))


def choi_of(M) -> np.ndarray:
    """Choi matrix ``sum_jk M(|j><k|) (x) |j><k|``."""
    M = np.asarray(M, dtype=complex)
    N = dim_of(M)
    # M(|j><k|) is column j*N + k of M
    images = M.T.reshape(N, N, N, N)  # [j, k, a, b] = M(|j><k|)[a, b]
    return np.einsum("jkab->ajbk", images).reshape(N * N, N * N)


def map_from_kraus(kraus) -> np.ndarray:
    """Superoperator of ``rho -> sum_k M_k rho M_k^dagger``."""
    kraus = [np.asarray(K, dtype=complex) for K in kraus]
    return sum(np.kron(K, K.conj()) for K in kraus)


def is_completely_positive(choi, tol: float = 1e-10) -> CPCheck:
    """Positivity of the (Hermitian) Choi matrix, relative to its largest eigenvalue."""
    choi = np.asarray(choi, dtype=complex)
    herm = 0.5 * (choi + choi.conj().T)
    w = np.linalg.eigvalsh(herm)
    scale = max(1.0, np.abs(w).max())
    return CPCheck(bool(w[0] >= -tol * scale), float(w[0]))


def kraus_decompose(choi, tol: float = 1e-10) -> list[np.ndarray]:
    """Kraus operators from the spectral decomposition of the Choi matrix.

    Raises :class:`NotCompletelyPositive` when an eigenvalue falls below
    ``-tol`` (relative to the largest); eigenvalues within the tolerance of
    zero are dropped.  Operators are ordered by decreasing weight.
    """
    choi = np.asarray(choi, dtype=complex)
    N = int(round(np.sqrt(choi.shape[0])))
    w, v = np.linalg.eigh(0.5 * (choi + choi.conj().T))
    scale = max(1.0, np.abs(w).max())
    if w[0] < -tol * scale:
        raise NotCompletelyPositive(float(w[0]))
    keep = w > tol * scale
    return [np.sqrt(lam) * v[:, i].reshape(N, N) for lam, i in
            sorted(zip(w[keep], np.flatnonzero(keep)), reverse=True)]


def kraus_completeness(kraus) -> np.ndarray:
    """``sum_k M_k^dagger M_k``; the identity for trace-preserving maps."""
    return sum(K.conj().T @ K for K in kraus)


def _nullspace(A, tol: float = NULL_TOL) -> np.ndarray:
    """Orthonormal columns spanning ``{x : A x = 0}``."""
    A = np.asarray(A)
    _, sv, vh = np.linalg.svd(A)
    largest = sv[0] if sv.size else 0.0
    if largest == 0:
        return np.eye(A.shape[1], dtype=A.dtype)
    rank = int(np.sum(sv > tol * largest))
    return vh[rank:].conj().T


def conserved_observables(L, tol: float = NULL_TOL) -> list[np.ndarray]:
    """Hermitian basis of ``{C : sum_ij C[i,j] L[ji, kl] = 0 for all k, l}``.

    Such ``C`` have ``Tr(C rho(t))`` constant along every trajectory.  The
    basis is orthonormal under ``Tr(A^dagger B)``.  For a
    hermiticity-preserving ``L`` the solution space is closed under
    ``C -> C^dagger`` and the basis is chosen Hermitian; for a
    trace-preserving ``L`` the first element is ``1/sqrt(N)``.
    """
    L = np.asarray(L, dtype=complex)
    N = dim_of(L)
    # sum_ij C_ij L_{ji,kl} = (vec(C^T)^T L)_{kl}
    null = _nullspace(L.T, tol)
    mats = [unvec(null[:, i]).T for i in range(null.shape[1])]
    if not mats:
        return []
    # real coordinates of the Hermitian and anti-Hermitian parts
    cands = []
    for C in mats:
        cands.append(0.5 * (C + C.conj().T))
        cands.append(-0.5j * (C - C.conj().T))
    X = np.array([np.concatenate([c.real.ravel(), c.imag.ravel()]) for c in cands])
    herm_ok = all(_residual(L, c) <= tol * max(1.0, np.abs(L).max()) for c in cands)
    if not herm_ok:
        return mats
    eye = np.eye(N) / np.sqrt(N)
    basis = []
    if is_trace_preserving(L).ok:
        basis.append(eye.astype(complex))
        e = np.concatenate([eye.ravel(), np.zeros(N * N)])
        X = X - np.outer(X @ e, e)
    u, sv, vh = np.linalg.svd(X, full_matrices=False)
    rank = len(mats) - len(basis)
    for row in vh[:rank]:
        basis.append((row[: N * N] + 1j * row[N * N:]).reshape(N, N))
    return basis


def _residual(L, C) -> float:
    N = C.shape[0]
    return float(np.abs(vec(C.T) @ L).max())


def supercommutant(L, tol: float = NULL_TOL) -> tuple[int, list[np.ndarray]]:
    """Superoperators ``Q`` with ``[Q, L] = 0``: dimension and orthonormal basis."""
    L = np.asarray(L, dtype=complex)
    n = L.shape[0]
    eye = np.eye(n)
    # row-major vec of Q L - L Q
    ad = np.kron(eye, L.T) - np.kron(L, eye)
    null = _nullspace(ad, tol)
    basis = [null[:, i].reshape(n, n) for i in range(null.shape[1])]
    return len(basis), basis
