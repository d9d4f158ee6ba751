import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from liouspace.core import (
    PropagationError, apply, basis_operator, check_density, is_hermiticity_preserving, is_trace_preserving,
    liouville_inner, propagate_exp, propagate_ode, propagator, sandwich_superop, supercommutator, unvec, vec,
    von_neumann_generator,
)
from liouspace.gl2 import SIGMA_X, SIGMA_Y, SIGMA_Z, SimplifiedParams, simplified_generator

from conftest import random_density, random_hermitian, random_lindblad

finite = st.floats(-10, 10, allow_nan=False)
complex_mats = st.integers(1, 5).flatmap(
    lambda n: st.tuples(arrays(float, (n, n), elements=finite), arrays(float, (n, n), elements=finite))
).map(lambda ab: ab[0] + 1j * ab[1])


def test_vec_identity_and_basis():
    assert np.array_equal(vec(np.eye(2)), [1, 0, 0, 1])
    assert np.array_equal(vec(basis_operator(0, 1, 2)), [0, 1, 0, 0])


def test_vec_roundtrip_bitwise(rng):
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert np.array_equal(unvec(vec(A)), A)


@given(complex_mats)
def test_vec_roundtrip_property(A):
    assert np.array_equal(unvec(vec(A)), A)


@given(complex_mats, complex_mats, finite)
def test_vec_linear(A, B, c):
    if A.shape != B.shape:
        return
    assert np.allclose(vec(A + c * B), vec(A) + c * vec(B))


def test_completeness_relation(rng):
    N = 3
    A = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    acc = np.zeros(N * N, dtype=complex)
    for j in range(N):
        for k in range(N):
            e = vec(basis_operator(j, k, N))
            acc += e * np.vdot(e, vec(A))
    assert np.array_equal(acc, vec(A))


def test_inner_orthonormality():
    for j in range(2):
        for k in range(2):
            for m in range(2):
                for n in range(2):
                    val = liouville_inner(basis_operator(j, k, 2), basis_operator(m, n, 2))
                    assert val == (1.0 if (j, k) == (m, n) else 0.0)


def test_inner_direct_sum_and_symmetry(rng):
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    B = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    direct = sum(np.conj(B[j, k]) * A[j, k] for j in range(4) for k in range(4))
    assert abs(liouville_inner(B, A) - direct) < 1e-12
    assert abs(liouville_inner(B, A) - np.conj(liouville_inner(A, B))) < 1e-12
    assert abs(liouville_inner(np.eye(3), random_density(rng, 3)) - 1) < 1e-12


def test_inner_dimension_mismatch():
    with pytest.raises(ValueError):
        liouville_inner(np.eye(2), np.eye(3))


def test_check_density_rejects_bad_input():
    with pytest.raises(ValueError):
        check_density(np.array([[1, 1], [0, 0]]))
    with pytest.raises(ValueError):
        check_density(np.eye(2))


def test_von_neumann_zero_and_commutator():
    assert np.array_equal(von_neumann_generator(np.zeros((2, 2))), np.zeros((4, 4)))
    a = 0.8
    L = von_neumann_generator(a * SIGMA_Z)
    assert np.abs(apply(L, SIGMA_X) - 2j * a * SIGMA_Y).max() < 1e-14
    assert np.abs(apply(L, np.eye(2) / 2)).max() == 0


def test_von_neumann_rejects_non_hermitian():
    with pytest.raises(ValueError):
        von_neumann_generator(np.array([[0, 1], [0, 0]]))


def test_von_neumann_spectrum(rng):
    H = random_hermitian(rng, 2)
    E = np.linalg.eigvalsh(H)
    expected = np.sort([Ej - Ek for Ej in E for Ek in E])
    got = np.sort(np.linalg.eigvals(von_neumann_generator(H)).real)
    assert np.abs(got - expected).max() < 1e-12


def test_apply_matches_commutator(rng):
    H = random_hermitian(rng, 3)
    rho = random_density(rng, 3)
    assert np.abs(apply(von_neumann_generator(H), rho) - (H @ rho - rho @ H)).max() < 1e-13
    assert np.array_equal(apply(np.zeros((9, 9)), rho), np.zeros((3, 3)))


def test_sandwich(rng):
    A, B, X = (rng.normal(size=(3, 3)) for _ in range(3))
    assert np.abs(apply(sandwich_superop(A, B), X) - A @ X @ B).max() < 1e-13


def test_propagate_exp_phase_oracle():
    a = 0.7
    L = von_neumann_generator(a * SIGMA_Z)
    rho0 = np.array([[0.6, 0.3 - 0.1j], [0.3 + 0.1j, 0.4]])
    assert np.array_equal(propagate_exp(L, rho0, 0.0), rho0)
    for t in (0.3, 1.7, 5.0):
        rho = propagate_exp(L, rho0, t)
        assert abs(rho[0, 1] - rho0[0, 1] * np.exp(-2j * a * t)) < 1e-13


def test_propagate_exp_hbar_scaling(rng):
    L = random_lindblad(rng, 2)
    rho0 = random_density(rng, 2)
    assert np.abs(propagate_exp(L, rho0, 2.0, hbar=2.0) - propagate_exp(L, rho0, 1.0)).max() < 1e-13


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_propagator_overflow_raises():
    with pytest.raises(PropagationError):
        propagator(np.diag([1e3j, 0, 0, 0]), 1e3)


def test_propagate_ode_zero_generator(rng):
    rho0 = random_density(rng, 2)
    assert np.array_equal(propagate_ode(np.zeros((4, 4)), rho0, 1.0, 0.1), rho0)


def test_propagate_ode_fourth_order(rng):
    L = random_lindblad(rng, 3)
    rho0 = random_density(rng, 3)
    exact = propagate_exp(L, rho0, 1.0)
    e1 = np.abs(propagate_ode(L, rho0, 1.0, 0.05) - exact).max()
    e2 = np.abs(propagate_ode(L, rho0, 1.0, 0.025) - exact).max()
    assert 12 < e1 / e2 < 20


def test_propagate_ode_simplified_relaxation():
    s = SimplifiedParams(1.0, 0.3, 0.2)
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    L = simplified_generator(s)
    for t in (0.5, 1.5, 3.0):
        rho = propagate_ode(L, rho0, t, 1e-3)
        assert abs(rho[0, 0].real - (0.5 + 0.5 * np.exp(-2 * s.gamma**2 * t))) < 1e-8


def test_propagate_ode_bad_dt(rng):
    with pytest.raises(ValueError):
        propagate_ode(np.zeros((4, 4)), np.eye(2) / 2, 1.0, 0.0)


def test_structure_checks(rng):
    L = von_neumann_generator(random_hermitian(rng, 3))
    assert is_hermiticity_preserving(L).ok and is_trace_preserving(L).ok
    R = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h, t = is_hermiticity_preserving(R), is_trace_preserving(R)
    assert not h.ok and h.residual > 0
    assert not t.ok and t.residual > 0


def test_supercommutator_loops(rng):
    Q = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    L = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    loops = np.zeros((4, 4), dtype=complex)
    for a in range(4):
        for b in range(4):
            loops[a, b] = sum(Q[a, c] * L[c, b] - L[a, c] * Q[c, b] for c in range(4))
    assert np.abs(supercommutator(Q, L) - loops).max() < 1e-13
    assert np.abs(supercommutator(L, L)).max() == 0
    assert np.abs(supercommutator(np.eye(4), L)).max() == 0
    with pytest.raises(ValueError):
        supercommutator(np.eye(4), np.eye(9))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.floats(0.1, 3.0))
def test_lindblad_evolution_properties(seed, N, t):
    r = np.random.default_rng(seed)
    L = random_lindblad(r, N)
    rho0 = random_density(r, N)
    rho = propagate_exp(L, rho0, t)
    assert np.abs(rho - rho.conj().T).max() < 1e-10
    assert abs(np.trace(rho) - 1) < 1e-10
    dt = t / int(np.ceil(t / 0.01))
    tol = max(1e-8, 100 * dt**4)
    assert np.abs(propagate_ode(L, rho0, t, dt) - rho).max() < tol
