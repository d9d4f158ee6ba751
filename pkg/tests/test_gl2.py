import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liouspace import gl2
from liouspace.core import (
    apply, is_hermiticity_preserving, is_trace_preserving, propagate_exp, rk4_trajectory, von_neumann_generator,
)
from liouspace.gl2 import GLParams, SimplifiedParams

from conftest import random_density

par = st.floats(-2, 2, allow_nan=False)


def test_parameter_count():
    assert gl2.parameter_count(2) == (4, 16)
    assert gl2.parameter_count(1) == (1, 1)
    assert gl2.parameter_count(3) == (9, 81)
    with pytest.raises(ValueError):
        gl2.parameter_count(0)


def test_glparams_vector_roundtrip(rng):
    p = GLParams.random(rng)
    assert p.to_vector().shape == (16,)
    assert np.array_equal(GLParams.from_vector(p.to_vector()).to_vector(), p.to_vector())


def test_glparams_rejects_non_hermitian_g():
    with pytest.raises(ValueError):
        GLParams(g=np.array([[0, 1], [0, 0]]))


def test_zero_params():
    p = GLParams()
    assert np.array_equal(gl2.build_gl_generator(p), np.zeros((4, 4)))
    assert np.array_equal(gl2.trace_constraint_residuals(p), np.zeros(4))


def test_gl_hermiticity_preserving_random(rng):
    for _ in range(100):
        assert is_hermiticity_preserving(gl2.build_gl_generator(GLParams.random(rng))).ok


def test_constraints_match_column_sums(rng):
    for _ in range(50):
        p = GLParams.random(rng)
        L = gl2.build_gl_generator(p)
        res = gl2.trace_constraint_residuals(p)
        assert abs(gl2.constraint_trace_residual(res) - is_trace_preserving(L).residual) < 1e-12
        assert np.abs(res).max() > 0
        rho = random_density(rng, 2)
        assert abs(np.trace(apply(L, rho))) > 0


def test_projection_restores_trace_preservation(rng):
    for _ in range(20):
        q = gl2.project_trace_preserving(GLParams.random(rng))
        assert np.abs(gl2.trace_constraint_residuals(q)).max() < 1e-12
        assert is_trace_preserving(gl2.build_gl_generator(q)).residual < 1e-10


def test_simplified_recovers_von_neumann():
    s = SimplifiedParams(0.8, 0.0, 0.0)
    assert np.abs(gl2.simplified_generator(s) - von_neumann_generator(0.8 * gl2.SIGMA_Z)).max() < 1e-15


@given(par, par, par)
def test_simplified_structure(a, b, g):
    L = gl2.simplified_generator(SimplifiedParams(a, b, g))
    assert is_hermiticity_preserving(L).ok
    assert is_trace_preserving(L).ok


@given(par, par, par)
def test_simplified_is_a_gl_point(a, b, g):
    s = SimplifiedParams(a, b, g)
    p = gl2.simplified_as_gl(s)
    assert np.abs(gl2.build_gl_generator(p) - gl2.simplified_generator(s)).max() < 1e-12
    assert np.abs(gl2.trace_constraint_residuals(p)).max() < 1e-12


def test_explicit_rhs_entrywise(rng):
    for _ in range(100):
        s = SimplifiedParams(*rng.uniform(-2, 2, 3))
        rho = random_density(rng, 2)
        assert np.abs(apply(gl2.simplified_generator(s), rho) - gl2.explicit_rhs(rho, s)).max() < 1e-12


def test_stationary_state():
    rho, deg = gl2.stationary_state(SimplifiedParams(1.0, 0.0, 0.5))
    assert not deg and np.array_equal(rho, np.eye(2) / 2)
    s = SimplifiedParams(1.0, 1.0, 1.0)
    rho, _ = gl2.stationary_state(s)
    assert np.abs(gl2.explicit_rhs(rho, s)).max() < 1e-15
    rho, deg = gl2.stationary_state(SimplifiedParams(0.0, 0.0, 0.4))
    assert deg and np.array_equal(rho, np.eye(2) / 2)


def test_fixed_point_random(rng):
    for _ in range(50):
        s = SimplifiedParams(*rng.uniform(-2, 2, 3))
        assert gl2.residual_at_fixed_point(s) < 1e-12


def test_r_c_formula():
    a, b, g = 0.7, 0.4, 0.9
    rc, _ = gl2.fixed_point_offset(SimplifiedParams(a, b, g))
    assert abs(rc - (-b * g * (a - 1j * b**2) / (a**2 + b**2 * (b**2 + g**2)))) < 1e-15


def test_mode_rates_against_drift_matrix():
    for a, b, g in [(1.0, 0.3, 0.2), (0.5, 0.7, 0.1), (2.0, 0.1, 0.7), (0.1, 0.3, 0.7)]:
        s = SimplifiedParams(a, b, g)
        om = np.sort_complex(np.array(gl2.mode_rates(s)))
        ev = np.sort_complex(np.linalg.eigvals(gl2.offdiag_drift_matrix(s)).astype(complex))
        assert np.abs(om - ev).max() < 1e-12
        if g**4 < 4 * a**2:
            assert np.abs(om.real - (2 * b**2 + g**2)).max() < 1e-12


def test_analytic_matches_rk4_reference_point():
    s = SimplifiedParams(1.0, 0.3, 0.2)
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    t = np.linspace(0, 3, 31)
    ref = rk4_trajectory(gl2.simplified_generator(s), rho0, t, 1e-3)
    assert np.abs(gl2.trajectory(rho0, s, t) - ref).max() < 1e-8


@settings(max_examples=40, deadline=None)
@given(par, par, par, st.integers(0, 2**32 - 1))
def test_analytic_matches_expm(a, b, g, seed):
    s = SimplifiedParams(a, b, g)
    rho0 = random_density(np.random.default_rng(seed), 2)
    horizon = 3 / (2 * b**2 + g**2 + abs(a) + 0.1)
    L = gl2.simplified_generator(s)
    for t in np.linspace(0, horizon, 5):
        exact = propagate_exp(L, rho0, t)
        got = gl2.analytic_solution(rho0, s, t)[0]
        assert np.abs(got - exact).max() < 1e-8 * max(1.0, np.abs(exact).max())


def test_degenerate_splitting_secular_form():
    s = SimplifiedParams(0.5, 0.2, 1.0)  # gamma^4 == 4 alpha^2
    rho0 = np.array([[0.7, 0.2 + 0.1j], [0.2 - 0.1j, 0.3]])
    modes = gl2.mode_data(rho0, s)
    assert modes.degenerate
    L = gl2.simplified_generator(s)
    for t in (0.5, 2.0):
        assert np.abs(gl2.analytic_solution(rho0, s, t)[0] - propagate_exp(L, rho0, t)).max() < 1e-10


def test_relaxation_rate_and_energy():
    s = SimplifiedParams(1.0, 0.2, 0.5)
    rho0 = np.diag([0.9, 0.1]).astype(complex)
    t = np.linspace(0, 4, 41)
    traj = gl2.trajectory(rho0, s, t)
    rate = -gl2.fit_exponential_rate(t, traj[:, 0, 0].real - 0.5)
    assert abs(rate - 2 * s.gamma**2) < 1e-10
    E = gl2.would_be_energy(traj, s)
    assert np.abs(E - s.alpha * 0.8 * np.exp(-2 * s.gamma**2 * t)).max() < 1e-12


def test_qm_limit_usual_solution():
    s = SimplifiedParams(0.6, 0.0, 0.0)
    rho0 = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    modes = gl2.mode_data(rho0, s)
    assert modes.r_plus == 0
    for t in (0.4, 3.0):
        rho = gl2.analytic_solution(rho0, s, t)[0]
        assert abs(rho[0, 1] - 0.5 * np.exp(-2j * 0.6 * t)) < 1e-14


def test_extended_mode_leaves_unit_interval():
    s = SimplifiedParams(1.0, 0.0, 0.0)
    rho0 = np.eye(2, dtype=complex) / 2
    assert gl2.scan_anomalous(s, rho0, 5.0, 0.01) == []
    events = gl2.scan_anomalous(s, rho0, 5.0, 0.01, extended=(0.4, 0.4))
    assert events and min(e[1] for e in events) < 0


def test_purity_constant_iff_qm():
    rho0 = np.array([[0.8, 0.3], [0.3, 0.2]], dtype=complex)
    t = np.linspace(0, 3, 13)
    for a, b, g in [(1, 0, 0), (0.3, 0, 0), (1, 0.3, 0), (1, 0, 0.3), (0.5, 0.2, 0.2)]:
        traj = gl2.trajectory(rho0, SimplifiedParams(a, b, g), t)
        pur = np.real(np.einsum("tij,tji->t", traj, traj))
        const = np.ptp(pur) < 1e-10
        assert const == (b == 0 and g == 0)


def test_trajectory_hermitian_unit_trace(rng):
    for _ in range(10):
        s = SimplifiedParams(*rng.uniform(-1, 1, 3))
        traj = gl2.trajectory(random_density(rng, 2), s, np.linspace(0, 3, 7))
        assert np.abs(traj - traj.conj().transpose(0, 2, 1)).max() < 1e-10
        assert np.abs(np.trace(traj, axis1=1, axis2=2) - 1).max() < 1e-10


def test_eigenvalues_2x2(rng):
    assert np.allclose(gl2.eigenvalues_2x2(np.eye(2) / 2), (0.5, 0.5))
    assert np.allclose(gl2.eigenvalues_2x2(np.diag([1.0, 0.0])), (1, 0))
    for _ in range(20):
        rho = random_density(rng, 2)
        rp, rm = gl2.eigenvalues_2x2(rho)
        w = np.linalg.eigvalsh(rho)
        assert abs(rp - w[1]) < 1e-12 and abs(rm - w[0]) < 1e-12 and abs(rp + rm - 1) < 1e-12


def test_pauli_statistics(rng):
    st0 = gl2.pauli_statistics(np.eye(2) / 2)
    assert all(abs(st0[k]) < 1e-15 for k in ("sx", "sy", "sz"))
    assert all(abs(st0[k] - 1) < 1e-15 for k in ("var_x", "var_y", "var_z"))
    st1 = gl2.pauli_statistics(np.diag([1.0, 0.0]))
    assert st1["sz"] == 1 and st1["var_z"] == 0
    rho = random_density(rng, 2)
    stats = gl2.pauli_statistics(rho)
    for key, P in zip(("sx", "sy", "sz"), gl2.PAULI):
        exp = np.trace(P @ rho).real
        assert abs(stats[key] - exp) < 1e-12
        assert abs(stats["var_" + key[1]] - (1 - exp**2)) < 1e-12
    late = gl2.analytic_solution(np.diag([1.0, 0.0]), SimplifiedParams(1.0, 0.0, 0.6), 60.0)[0]
    assert abs(gl2.pauli_statistics(late)["var_z"] - 1) < 1e-10


def test_anomalous_events_reference_point():
    s = SimplifiedParams(1.0, 0.3, 0.2)
    plus = np.full((2, 2), 0.5, dtype=complex)
    events = gl2.scan_anomalous(s, plus, 5.0, 0.01)
    assert events and min(e[1] for e in events) < -1e-6
    rk4 = gl2.scan_anomalous(s, plus, 5.0, 0.01, method="rk4")
    assert [e[0] for e in rk4] == [e[0] for e in events]


def test_scan_rejects_bad_horizon():
    with pytest.raises(ValueError):
        gl2.scan_anomalous(SimplifiedParams(1, 0, 0), np.eye(2) / 2, 0.0, 0.1)
