"""Monomial expansion of two-particle classical superpotentials.

Each monomial in ``(Q1, q1, Q2, q2)`` is tagged by which subsystems and which
side (bra ``Q`` / ket ``q``) it touches:

* ``LOCAL``: variables of one subsystem only.
* ``INTRA_SPACE``: both subsystems, but only ``Q`` variables or only ``q``.
* ``INTER_SPACE``: both subsystems with ``Q`` and ``q`` mixed.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass

import numpy as np
import sympy as sp

from .potentials import MAX_DEGREE, BivariatePolynomial

SYMBOLS = sp.symbols("Q1 q1 Q2 q2", real=True)
X1, X2 = sp.symbols("x1 x2", real=True)


class TermClass(enum.Enum):
    LOCAL = "Local"
    INTRA_SPACE = "IntraSpace"
    INTER_SPACE = "InterSpace"


@dataclass(frozen=True)
class Monomial:
    exponents: tuple  # powers of (Q1, q1, Q2, q2)
    coefficient: float

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    def __call__(self, Q1, q1, Q2, q2):
        e = self.exponents
        return self.coefficient * Q1 ** e[0] * q1 ** e[1] * Q2 ** e[2] * q2 ** e[3]

    def label(self) -> str:
        parts = [f"{n}^{k}" if k > 1 else n for n, k in zip(("Q1", "q1", "Q2", "q2"), self.exponents) if k]
        return "*".join(parts) or "1"


def classify_monomial(exponents) -> TermClass:
    eQ1, eq1, eQ2, eq2 = exponents
    if not (eQ1 + eq1 and eQ2 + eq2):
        return TermClass.LOCAL
    if (eq1 == 0 and eq2 == 0) or (eQ1 == 0 and eQ2 == 0):
        return TermClass.INTRA_SPACE
    return TermClass.INTER_SPACE


def _as_expr(potential):
    if isinstance(potential, BivariatePolynomial):
        return sum((sp.nsimplify(v) * X1**i * X2**j for (i, j), v in potential.monomials()), sp.Integer(0))
    return sp.sympify(potential)


def classical_superpotential_expr(potential) -> sp.Expr:
    """``[(Q1-q1) d_X1 + (Q2-q2) d_X2] V(X1, X2)`` at the midpoints, expanded."""
    V = _as_expr(potential)
    Q1, q1, Q2, q2 = SYMBOLS
    mid = {X1: (Q1 + q1) / 2, X2: (Q2 + q2) / 2}
    W = (Q1 - q1) * sp.diff(V, X1).subs(mid, simultaneous=True) + (Q2 - q2) * sp.diff(V, X2).subs(mid, simultaneous=True)
    return sp.expand(W)


def expand_and_classify(potential) -> list[tuple[Monomial, TermClass]]:
    """Expand the classical-form superpotential of ``V(x1, x2)`` and tag each term.

    ``potential`` is a :class:`BivariatePolynomial` or a sympy expression in
    ``x1, x2``.  Terms are sorted by exponent tuple.
    """
    V = _as_expr(potential)
    extra = V.free_symbols - {X1, X2}
    if extra:
        raise ValueError(f"potential may only depend on x1, x2; found {sorted(map(str, extra))}")
    poly = sp.Poly(V, X1, X2) if V.free_symbols else None
    if poly is not None and poly.total_degree() > MAX_DEGREE:
        raise ValueError(f"degree {poly.total_degree()} exceeds {MAX_DEGREE}")
    W = classical_superpotential_expr(V)
    if W == 0:
        return []
    terms = sp.Poly(W, *SYMBOLS).terms()
    out = [(Monomial(tuple(int(k) for k in e), float(c)), classify_monomial(e)) for e, c in terms]
    return sorted(out, key=lambda mc: mc[0].exponents)


def resum(terms, Q1, q1, Q2, q2):
    """Numeric sum of the expanded monomials."""
    return sum((m(Q1, q1, Q2, q2) for m, _ in terms), np.zeros(np.broadcast(Q1, q1, Q2, q2).shape))


def evaluate_classical_form(potential: BivariatePolynomial, Q1, q1, Q2, q2):
    return potential.classical_form(Q1, q1, Q2, q2)


def classifier_csv(terms) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["e_Q1", "e_q1", "e_Q2", "e_q2", "coefficient", "class"])
    for m, c in terms:
        w.writerow([*m.exponents, f"{m.coefficient:.17g}", c.value])
    return buf.getvalue()
