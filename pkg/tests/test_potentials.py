import numpy as np
import pytest
from hypothesis import given, strategies as st

from liouspace.potentials import (
    BivariatePolynomial, EvolutionMode, PolynomialPotential, eval_E, superpotential,
)

coord = st.floats(-5, 5, allow_nan=False)
coef = st.floats(-3, 3, allow_nan=False)


def test_E_quartic_value():
    assert eval_E(PolynomialPotential([0, 0, 0, 0, 1]), 1.0, 0.0) == pytest.approx(-0.5, abs=1e-15)


def test_superpotential_quartic_modes():
    V = PolynomialPotential([0, 0, 0, 0, 1])
    assert superpotential(EvolutionMode.QUANTUM, V, 1.0, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert superpotential(EvolutionMode.CLASSICAL, V, 1.0, 0.0) == pytest.approx(0.5, abs=1e-15)


def test_harmonic_modes_bitwise_equal():
    V = PolynomialPotential.harmonic(1.3, 0.7, 0.2)
    Q, q = np.meshgrid(np.linspace(-4, 4, 17), np.linspace(-4, 4, 17), indexing="ij")
    assert np.array_equal(superpotential(EvolutionMode.QUANTUM, V, Q, q),
                          superpotential(EvolutionMode.CLASSICAL, V, Q, q))
    assert superpotential(EvolutionMode.QUANTUM, V, 2.0, 1.0) == pytest.approx(
        V(2.0) - V(1.0), abs=1e-14)


def test_harmonic_constructor():
    V = PolynomialPotential.harmonic(2.0, 1.0)
    assert V(1.0) == 2.0 and V.is_harmonic and V.degree == 2


def test_potential_validation():
    with pytest.raises(ValueError):
        PolynomialPotential([0] * 10 + [1])
    with pytest.raises(ValueError):
        PolynomialPotential([np.nan])
    assert PolynomialPotential([1, 0, 0]).degree == 0


@given(coef, coef, coef, coord, coord)
def test_E_vanishes_for_harmonic(a, b, c, Q, q):
    assert eval_E(PolynomialPotential([a, b, c]), Q, q) == 0


@given(st.lists(coef, min_size=1, max_size=7), coord, coord)
def test_E_antisymmetric(c, Q, q):
    V = PolynomialPotential(c)
    e1, e2 = eval_E(V, Q, q), eval_E(V, q, Q)
    assert abs(e1 + e2) <= 1e-9 * max(1.0, abs(e1))


@given(st.lists(coef, min_size=1, max_size=7), coord, coord)
def test_E_is_mode_difference(c, Q, q):
    V = PolynomialPotential(c)
    direct = (Q - q) * V.derivative(0.5 * (Q + q)) - V(Q) + V(q)
    scale = max(1.0, abs(V(Q)), abs(V(q)))
    assert abs(eval_E(V, Q, q) - direct) < 1e-9 * scale
    diff = superpotential(EvolutionMode.CLASSICAL, V, Q, q) - superpotential(EvolutionMode.QUANTUM, V, Q, q)
    assert abs(diff - direct) < 1e-9 * scale


def test_bivariate_difference_power():
    U = BivariatePolynomial.difference_power(3, 2.0)
    assert U(1.5, 0.5) == pytest.approx(2.0)
    assert U.total_degree == 3
    assert dict(U.monomials())[(0, 3)] == -2.0


def test_bivariate_forms_broadcast():
    U = BivariatePolynomial.from_terms({(1, 1): 0.5, (2, 0): 1.0})
    x = np.linspace(-1, 1, 3)
    Q, q, Qp, qp = np.meshgrid(x, x, x, x, indexing="ij", sparse=True)
    assert U.quantum_form(Q, q, Qp, qp).shape == (3, 3, 3, 3)
    assert np.abs(U.quantum_form(Q, q, Qp, qp) - U.classical_form(Q, q, Qp, qp)).max() < 1e-14
    assert U.d_first(1.0, 2.0) == pytest.approx(3.0)
    assert U.d_second(1.0, 2.0) == pytest.approx(0.5)
