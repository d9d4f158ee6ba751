"""A classical particle coupled to a quantum particle.

The joint density ``rho(Q, q, Q', q')`` (classical coordinates first) evolves
under one superpotential that sums the classical-form term of particle 1,
the quantum-form term of particle 2 and the coupling.  A coupling of total
degree at most two reads the same in classical and quantum form, which is
what makes the combined dynamics consistent from either side; higher-degree
couplings are rejected.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from .grid import EngineAbort, Grid1D, SuperDensity, StabilityError, check_extent, potential_dt_bound
from .potentials import BivariatePolynomial, EvolutionMode, PolynomialPotential, superpotential

#: largest points per axis of the 4D grid
MAX_HYBRID_N = 48


class DynamicsClass(enum.Enum):
    CL_OR_QM = "CL or QM"
    CL = "CL"
    QM = "QM"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class CouplingReport:
    ok: bool
    degree: int
    offending: tuple = ()

    def __str__(self):
        if self.ok:
            return f"harmonic coupling (degree {self.degree})"
        terms = ", ".join(f"x^{i} x'^{j}" for (i, j), _ in self.offending)
        return f"coupling has degree {self.degree} > 2; offending monomials: {terms}"


@dataclass(frozen=True)
class HybridSpec:
    """Potentials ``V`` (classical, mass ``mass``), ``v`` (quantum, mass
    ``mass_q``) and the coupling ``lam * coupling(x, x')``."""

    V: PolynomialPotential
    v: PolynomialPotential
    coupling: BivariatePolynomial = field(default_factory=lambda: BivariatePolynomial([[0.0]]))
    lam: float = 0.0
    mass: float = 1.0
    mass_q: float = 1.0


def validate_coupling(spec_or_coupling) -> CouplingReport:
    """Accept the coupling iff its total degree is at most two."""
    c = spec_or_coupling.coupling if isinstance(spec_or_coupling, HybridSpec) else spec_or_coupling
    bad = tuple(((i, j), v) for (i, j), v in c.monomials() if i + j > 2)
    return CouplingReport(not bad, c.total_degree, bad)


def coupling_equivalence_check(coupling: BivariatePolynomial, grid1: Grid1D, grid2: Grid1D | None = None) -> float:
    """Largest gap between the classical and quantum forms of the coupling on the 4D grid."""
    grid2 = grid2 or grid1
    Q, q, Qp, qp = _mesh4(grid1, grid2)
    return float(np.abs(coupling.classical_form(Q, q, Qp, qp) - coupling.quantum_form(Q, q, Qp, qp)).max())


def _mesh4(grid1: Grid1D, grid2: Grid1D):
    x1, x2 = grid1.x, grid2.x
    return (x1[:, None, None, None], x1[None, :, None, None], x2[None, None, :, None], x2[None, None, None, :])


def hybrid_superpotential(spec: HybridSpec, Q, q, Qp, qp, coupling_form: str = "quantum"):
    """``(Q-q) V'((Q+q)/2) + v(Q') - v(q') + lam * coupling term``."""
    report = validate_coupling(spec)
    if not report.ok:
        raise ValueError(str(report))
    W = superpotential(EvolutionMode.CLASSICAL, spec.V, Q, q) + superpotential(EvolutionMode.QUANTUM, spec.v, Qp, qp)
    if spec.lam:
        if coupling_form == "quantum":
            W = W + spec.lam * spec.coupling.quantum_form(Q, q, Qp, qp)
        elif coupling_form == "classical":
            W = W + spec.lam * spec.coupling.classical_form(Q, q, Qp, qp)
        else:
            raise ValueError(f"unknown coupling form {coupling_form!r}")
    return W


def joint_quantum_superpotential(spec: HybridSpec, Q, q, Qp, qp):
    """Superpotential if both particles were quantum: ``H(Q, Q') - H(q, q')`` potential part."""
    W = spec.V(Q) - spec.V(q) + spec.v(Qp) - spec.v(qp)
    return W + spec.lam * spec.coupling.quantum_form(Q, q, Qp, qp)


def joint_classical_superpotential(spec: HybridSpec, Q, q, Qp, qp):
    """Superpotential if both particles were classical."""
    W = (Q - q) * spec.V.derivative(0.5 * (Q + q)) + (Qp - qp) * spec.v.derivative(0.5 * (Qp + qp))
    return W + spec.lam * spec.coupling.classical_form(Q, q, Qp, qp)


def classify_dynamics(V_type: str, v_type: str, coupling_type: str) -> DynamicsClass:
    """Character of the hybrid dynamics from the nature of the three potentials.

    Each argument is ``"harmonic"`` (or ``"h"``) or ``"anharmonic"`` (``"anh"``).
    """
    def harmonic(kind):
        kind = kind.lower()
        if kind in ("h", "harmonic"):
            return True
        if kind in ("anh", "anharmonic"):
            return False
        raise ValueError(f"unknown potential type {kind!r}")

    hV, hv, hc = harmonic(V_type), harmonic(v_type), harmonic(coupling_type)
    if not hc:
        return DynamicsClass.UNKNOWN
    if hV and hv:
        return DynamicsClass.CL_OR_QM
    if hv:
        return DynamicsClass.CL
    if hV:
        return DynamicsClass.QM
    return DynamicsClass.UNKNOWN


def classify_spec(spec: HybridSpec) -> DynamicsClass:
    kind = {True: "h", False: "anh"}
    return classify_dynamics(kind[spec.V.is_harmonic], kind[spec.v.is_harmonic], kind[validate_coupling(spec).ok])


@dataclass(frozen=True, eq=False)
class SuperDensity4D:
    """``rho(Q, q, Q', q')`` with the classical pair on axes 0, 1."""

    grid1: Grid1D
    grid2: Grid1D
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        shape = (self.grid1.n, self.grid1.n, self.grid2.n, self.grid2.n)
        if v.shape != shape:
            raise ValueError(f"values must have shape {shape}")
        object.__setattr__(self, "values", v)

    @property
    def cell(self) -> float:
        return self.grid1.dx * self.grid2.dx

    def trace(self) -> complex:
        return complex(np.einsum("aass->", self.values) * self.cell)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.cell**2)

    def purity(self) -> float:
        return float(np.real(np.sum(self.values * self.values.transpose(1, 0, 3, 2))) * self.cell**2)

    def hermiticity_residual(self) -> float:
        return float(np.abs(self.values - self.values.transpose(1, 0, 3, 2).conj()).max())


def product_state(rho1: SuperDensity, rho2: SuperDensity) -> SuperDensity4D:
    vals = np.einsum("ab,cd->abcd", rho1.values, rho2.values)
    return SuperDensity4D(rho1.grid, rho2.grid, vals, rho1.time)


def reduced_densities(state: SuperDensity4D) -> tuple[SuperDensity, SuperDensity]:
    """Partial traces over the partner's diagonal."""
    r1 = np.einsum("abss->ab", state.values) * state.grid2.dx
    r2 = np.einsum("ssab->ab", state.values) * state.grid1.dx
    return SuperDensity(state.grid1, r1, state.time), SuperDensity(state.grid2, r2, state.time)


@dataclass
class HybridSeries:
    COLUMNS = ("t", "trace_re", "trace_im", "norm", "purity", "x1_mean", "x2_mean",
               "purity1", "purity2", "min_eig1", "min_eig2")
    rows: list = field(default_factory=list)

    def append(self, row):
        self.rows.append(tuple(float(v) for v in row))

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(-1, len(self.COLUMNS))

    def column(self, name: str) -> np.ndarray:
        return self.as_array()[:, self.COLUMNS.index(name)]

    def __len__(self):
        return len(self.rows)


def hybrid_observables(state: SuperDensity4D) -> tuple:
    r1, r2 = reduced_densities(state)
    tr = state.trace()
    x1 = np.real(np.sum(state.grid1.x * np.diagonal(r1.values)) * state.grid1.dx)
    x2 = np.real(np.sum(state.grid2.x * np.diagonal(r2.values)) * state.grid2.dx)
    e1 = np.linalg.eigvalsh(0.5 * (r1.values + r1.values.conj().T) * state.grid1.dx)[0]
    e2 = np.linalg.eigvalsh(0.5 * (r2.values + r2.values.conj().T) * state.grid2.dx)[0]
    return (state.time, tr.real, tr.imag, state.norm(), state.purity(), x1, x2,
            r1.purity(), r2.purity(), e1, e2)


class HybridPropagator:
    """Precomputed Strang step on the 4D grid."""

    def __init__(self, grid1: Grid1D, grid2: Grid1D, spec: HybridSpec, dt: float):
        if max(grid1.n, grid2.n) > MAX_HYBRID_N:
            raise ValueError(f"4D grids are limited to n <= {MAX_HYBRID_N} per axis")
        if grid1.hbar != grid2.hbar:
            raise ValueError("both grids must share hbar")
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.grid1, self.grid2, self.spec, self.dt = grid1, grid2, spec, dt
        hbar = grid1.hbar
        self.W = hybrid_superpotential(spec, *_mesh4(grid1, grid2))
        self.half_potential = np.exp(-0.5j * dt * self.W / hbar)
        k1, k2 = grid1.k, grid2.k
        K = ((k1[:, None, None, None] ** 2 - k1[None, :, None, None] ** 2) / (2 * spec.mass)
             + (k2[None, None, :, None] ** 2 - k2[None, None, None, :] ** 2) / (2 * spec.mass_q))
        self.kinetic = np.exp(-1j * dt * hbar * K)

    def max_dt(self, values) -> float:
        kin = min(Grid1D(g.n, g.extent, m, g.hbar).kinetic_dt_bound()
                  for g, m in ((self.grid1, self.spec.mass), (self.grid2, self.spec.mass_q)))
        # both kinetic terms can add at the corner of the spectrum
        kin = kin / 2
        return min(kin, potential_dt_bound(self.W, values, self.grid1.hbar))

    def check_dt(self, values):
        bound = self.max_dt(values)
        if self.dt > bound * (1 + 1e-12):
            raise StabilityError(self.dt, bound)

    def step_values(self, v):
        v = v * self.half_potential
        v = fft.ifftn(fft.fftn(v) * self.kinetic)
        return v * self.half_potential


def evolve_hybrid(state: SuperDensity4D, spec: HybridSpec, T: float, dt: float, sample_stride: int = 1,
                  trace_drift: float = 1e-4, check: bool = True) -> tuple[SuperDensity4D, HybridSeries]:
    """Strang evolution of the joint density up to ``T`` (a multiple of ``dt``)."""
    steps = int(round(T / dt))
    if steps < 0 or abs(steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError("T must be a non-negative multiple of dt")
    prop = HybridPropagator(state.grid1, state.grid2, spec, dt)
    if check:
        prop.check_dt(state.values)
        check_extent(state.values, 1e-6, "hybrid state")
    series = HybridSeries()
    series.append(hybrid_observables(state))
    tr0 = state.trace()
    v = state.values
    for i in range(1, steps + 1):
        v = prop.step_values(v)
        if i % sample_stride == 0 or i == steps:
            if not np.all(np.isfinite(v)):
                raise EngineAbort(i, "non-finite values")
            cur = SuperDensity4D(state.grid1, state.grid2, v, state.time + i * dt)
            if abs(cur.trace() - tr0) > trace_drift:
                raise EngineAbort(i, f"trace drifted to {cur.trace():.6g}")
            series.append(hybrid_observables(cur))
    return SuperDensity4D(state.grid1, state.grid2, v, state.time + steps * dt), series
