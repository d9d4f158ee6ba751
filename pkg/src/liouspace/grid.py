"""Split-step propagation of a one-dimensional particle in the (Q, q)
representation.

A classical phase-space density ``rho(x, p)`` and a quantum density matrix
``rho(Q, q) = <Q|rho|q>`` live on the same square grid once the momentum is
Fourier transformed and the coordinates sheared to ``Q = x + y/2``,
``q = x - y/2``.  Both then obey::

    i hbar d(rho)/dt = [-(hbar**2 / 2m)(d_Q**2 - d_q**2) + W(Q, q)] rho

and differ only in the real superpotential ``W`` (see
:func:`liouspace.potentials.superpotential`).  One Strang step is a half
potential phase, the full kinetic phase in the 2D Fourier domain and another
half potential phase; every factor is a unimodular multiplier, so the step
is unitary on the grid.

Boundaries are periodic.  Initial data should keep its mass well away from
the edges (see :func:`check_extent`).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from .potentials import EvolutionMode, PolynomialPotential, superpotential


class AliasingWarning(UserWarning):
    """Significant density near the periodic boundary."""


class EngineAbort(RuntimeError):
    """Propagation stopped on a diagnostic failure."""

    def __init__(self, step: int, diagnostic: str):
        super().__init__(f"aborted at step {step}: {diagnostic}")
        self.step = step
        self.diagnostic = diagnostic


class StabilityError(ValueError):
    """Time step above the accuracy bound."""

    def __init__(self, dt: float, suggested: float):
        super().__init__(f"dt = {dt:.4g} exceeds the step bound; use dt <= {suggested:.4g}")
        self.dt = dt
        self.suggested = suggested


@dataclass(frozen=True)
class Grid1D:
    """``n`` points on ``[-extent, extent)`` with spacing ``2 extent / n``."""

    n: int
    extent: float
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.n < 8 or self.n % 2:
            raise ValueError("n must be even and at least 8")
        if self.extent <= 0 or self.mass <= 0 or self.hbar <= 0:
            raise ValueError("extent, mass and hbar must be positive")

    @property
    def dx(self) -> float:
        return 2 * self.extent / self.n

    @property
    def x(self) -> np.ndarray:
        return -self.extent + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n, self.dx)

    @property
    def dp(self) -> float:
        return np.pi * self.hbar / self.extent

    @property
    def p(self) -> np.ndarray:
        """Phase-space momentum grid, ascending, ``hbar * 2 pi (j - n/2) / (n dx)``."""
        return self.dp * (np.arange(self.n) - self.n // 2)

    def mesh(self):
        """``(Q, q)`` coordinate arrays with ``Q`` along axis 0."""
        return np.meshgrid(self.x, self.x, indexing="ij")

    def kinetic_dt_bound(self) -> float:
        """Largest dt keeping the kinetic phase per step below pi/4."""
        kmax = np.pi / self.dx
        return (np.pi / 4) * 2 * self.mass / (self.hbar * kmax**2)


@dataclass(frozen=True, eq=False)
class SuperDensity:
    """``rho(Q_i, q_j)`` on ``grid``; axis 0 is ``Q`` (bra), axis 1 is ``q`` (ket)."""

    grid: Grid1D
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"values must have shape {(self.grid.n, self.grid.n)}")
        object.__setattr__(self, "values", v)

    def trace(self) -> complex:
        return complex(np.trace(self.values) * self.grid.dx)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dx**2)

    def purity(self) -> float:
        return float(np.real(np.sum(self.values * self.values.T)) * self.grid.dx**2)

    def hermiticity_residual(self) -> float:
        return float(np.abs(self.values - self.values.conj().T).max())

    def diagonal(self) -> np.ndarray:
        """Position density ``rho(x, x)``."""
        return np.real(np.diagonal(self.values)).copy()

    def matrix(self) -> np.ndarray:
        """Discretized density matrix ``rho(Q_i, q_j) dx`` (unit trace)."""
        return self.values * self.grid.dx


@dataclass(frozen=True, eq=False)
class PhaseSpaceDensity:
    """Real ``rho(x_i, p_j)`` on ``grid.x`` by ``grid.p``."""

    grid: Grid1D
    values: np.ndarray
    imag_residual: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"values must have shape {(self.grid.n, self.grid.n)}")
        object.__setattr__(self, "values", v)

    @property
    def cell(self) -> float:
        return self.grid.dx * self.grid.dp

    def total(self) -> float:
        return float(self.values.sum() * self.cell)

    def x_marginal(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.grid.dp

    def p_marginal(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.grid.dx


@dataclass
class ObservableSeries:
    """Per-sample diagnostics of an evolution."""

    COLUMNS = ("t", "trace_re", "trace_im", "norm", "x_mean", "p_mean", "x_var", "purity", "min_eig")
    rows: list = field(default_factory=list)

    def append(self, row):
        self.rows.append(tuple(float(v) for v in row))

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(-1, len(self.COLUMNS))

    def column(self, name: str) -> np.ndarray:
        return self.as_array()[:, self.COLUMNS.index(name)]

    def __len__(self):
        return len(self.rows)


# --- phase space <-> superdensity -----------------------------------------

def _column_shifts(n: int) -> np.ndarray:
    """Coherence index ``m`` (``y = m dx``) for each column, FFT order."""
    return np.fft.fftfreq(n, 1.0 / n).astype(int)


def _shear_phase(grid: Grid1D) -> np.ndarray:
    """``exp(-i k_x m dx / 2)``: shifts column ``m`` by ``m dx / 2`` in ``x``."""
    m = _column_shifts(grid.n)
    return np.exp(-0.5j * np.outer(grid.k, m * grid.dx))


def _diagonal_index(n: int):
    a = np.arange(n)[:, None]
    b = (a - _column_shifts(n)[None, :]) % n
    return a, b


def boundary_mass(values: np.ndarray, fraction: float = 0.1) -> float:
    """Fraction of ``sum |values|`` within ``fraction`` of either edge of any axis."""
    a = np.abs(values)
    total = a.sum()
    if total == 0:
        return 0.0
    edge = max(1, int(round(fraction * a.shape[0])))
    inner = tuple(slice(edge, s - edge) for s in a.shape)
    return float(1 - a[inner].sum() / total)


def check_extent(values: np.ndarray, limit: float = 1e-12, what: str = "state") -> float:
    """Warn when more than ``limit`` of the mass sits near the boundary."""
    mass = boundary_mass(values)
    if mass > limit:
        warnings.warn(f"{what} carries {mass:.2e} of its mass within 10% of the boundary; "
                      "periodic wrap-around may alias", AliasingWarning, stacklevel=3)
    return mass


def to_superdensity(rho_xp: PhaseSpaceDensity, warn_limit: float = 1e-6) -> SuperDensity:
    """``rho(Q, q) = int dp exp(i p (Q - q) / hbar) rho((Q + q)/2, p)``.

    The momentum transform is an exact DFT pair on the grid; the half-sample
    shear is a Fourier shift along ``x``.  Coherences with ``|Q - q|``
    beyond half the box wrap around periodically.
    """
    g = rho_xp.grid
    n = g.n
    check_extent(rho_xp.values, warn_limit, "phase-space density")
    m = _column_shifts(n)
    # f[i, c] = rho_xy(x_i, m_c dx) = dp sum_j exp(i p_j m dx / hbar) rho(x_i, p_j)
    sign = np.where(m % 2 == 0, 1.0, -1.0)
    f = g.dp * n * fft.ifft(rho_xp.values.astype(complex), axis=1) * sign[None, :]
    shifted = fft.ifft(fft.fft(f, axis=0) * _shear_phase(g), axis=0)
    out = np.empty((n, n), dtype=complex)
    a, b = _diagonal_index(n)
    out[a, b] = shifted
    return SuperDensity(g, out)


def to_phase_space(rho: SuperDensity) -> PhaseSpaceDensity:
    """Inverse of :func:`to_superdensity`.

    For a quantum state this is its Wigner function.  The imaginary part left
    over from a non-Hermitian input is dropped and reported.
    """
    g = rho.grid
    n = g.n
    a, b = _diagonal_index(n)
    shifted = rho.values[a, b]
    f = fft.ifft(fft.fft(shifted, axis=0) * np.conj(_shear_phase(g)), axis=0)
    m = _column_shifts(n)
    sign = np.where(m % 2 == 0, 1.0, -1.0)
    vals = fft.fft(f * sign[None, :], axis=1) * (g.dx / (2 * np.pi * g.hbar))
    resid = float(np.abs(vals.imag).max())
    return PhaseSpaceDensity(g, vals.real, imag_residual=resid)


# --- initial states ---------------------------------------------------------

def gaussian_phase_space(grid: Grid1D, x0: float, p0: float, sigma_x: float, sigma_p: float) -> PhaseSpaceDensity:
    """Normalized product Gaussian ``rho(x, p)`` sampled on the grid."""
    X, Pm = np.meshgrid(grid.x, grid.p, indexing="ij")
    vals = np.exp(-((X - x0) ** 2) / (2 * sigma_x**2) - (Pm - p0) ** 2 / (2 * sigma_p**2))
    vals /= 2 * np.pi * sigma_x * sigma_p
    return PhaseSpaceDensity(grid, vals)


def gaussian_superdensity(grid: Grid1D, x0: float, p0: float, sigma_x: float, sigma_p: float) -> SuperDensity:
    """Analytic ``(Q, q)`` image of :func:`gaussian_phase_space`.

    ``rho = G(x; x0, sigma_x) exp(i p0 y / hbar - sigma_p**2 y**2 / 2 hbar**2)``
    with ``x = (Q + q)/2``, ``y = Q - q``.  Equals a pure Gaussian wave packet
    when ``sigma_x sigma_p = hbar / 2``.
    """
    Q, q = grid.mesh()
    x = 0.5 * (Q + q)
    y = Q - q
    hb = grid.hbar
    vals = np.exp(-((x - x0) ** 2) / (2 * sigma_x**2)) / np.sqrt(2 * np.pi * sigma_x**2)
    vals = vals * np.exp(1j * p0 * y / hb - sigma_p**2 * y**2 / (2 * hb**2))
    return SuperDensity(grid, vals)


def wave_packet(grid: Grid1D, x0: float, p0: float, sigma: float) -> SuperDensity:
    """Pure state ``psi(Q) conj(psi(q))`` of a Gaussian packet with width ``sigma``."""
    return gaussian_superdensity(grid, x0, p0, sigma, grid.hbar / (2 * sigma))


# --- propagation ------------------------------------------------------------

def potential_dt_bound(W: np.ndarray, values: np.ndarray, hbar: float, occupied: float = 1e-10) -> float:
    """Largest dt keeping the potential phase below pi/4 where the state lives.

    Only cells with ``|rho| > occupied * max|rho|`` count; the phase elsewhere
    multiplies (numerically) empty cells.
    """
    a = np.abs(values)
    mask = a > occupied * a.max()
    wmax = float(np.abs(W[mask]).max()) if mask.any() else 0.0
    return np.inf if wmax == 0 else (np.pi / 4) * hbar / wmax


class SplitStepPropagator:
    """Precomputed Strang step for one grid, mode, potential and time step."""

    def __init__(self, grid: Grid1D, mode: EvolutionMode, V: PolynomialPotential, dt: float):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.grid = grid
        self.mode = mode
        self.V = V
        self.dt = dt
        Q, q = grid.mesh()
        self.W = superpotential(mode, V, Q, q)
        self.half_potential = np.exp(-0.5j * dt * self.W / grid.hbar)
        k = grid.k
        K2 = k[:, None] ** 2 - k[None, :] ** 2
        self.kinetic = np.exp(-1j * dt * grid.hbar * K2 / (2 * grid.mass))

    def max_dt(self, values: np.ndarray) -> float:
        return min(self.grid.kinetic_dt_bound(), potential_dt_bound(self.W, values, self.grid.hbar))

    def check_dt(self, values: np.ndarray):
        bound = self.max_dt(values)
        if self.dt > bound * (1 + 1e-12):
            raise StabilityError(self.dt, bound)

    def step_values(self, v: np.ndarray) -> np.ndarray:
        v = v * self.half_potential
        v = fft.ifft2(fft.fft2(v) * self.kinetic)
        return v * self.half_potential


def step_splitstep(state: SuperDensity, mode: EvolutionMode, V: PolynomialPotential, dt: float,
                   check: bool = True) -> SuperDensity:
    """One Strang step of length ``dt``."""
    prop = SplitStepPropagator(state.grid, mode, V, dt)
    if check:
        prop.check_dt(state.values)
    return SuperDensity(state.grid, prop.step_values(state.values), state.time + dt)


def observables(state: SuperDensity, min_eig: bool = True) -> tuple:
    """Row of :class:`ObservableSeries` for ``state``."""
    g = state.grid
    v = state.values
    dx = g.dx
    diag = np.diagonal(v)
    tr = np.sum(diag) * dx
    x = g.x
    x_mean = np.real(np.sum(x * diag) * dx)
    x2 = np.real(np.sum(x**2 * diag) * dx)
    k = g.k.copy()
    k[g.n // 2] = 0.0
    p_rho = fft.ifft(g.hbar * k[:, None] * fft.fft(v, axis=0), axis=0)
    p_mean = np.real(np.trace(p_rho) * dx)
    lam = np.nan
    if min_eig:
        lam = float(np.linalg.eigvalsh(0.5 * (v + v.conj().T) * dx)[0])
    return (state.time, tr.real, tr.imag, state.norm(), x_mean, p_mean, x2 - x_mean**2,
            state.purity(), lam)


def evolve(state: SuperDensity, mode: EvolutionMode, V: PolynomialPotential, T: float, dt: float,
           sample_stride: int = 1, min_eig: bool = True, trace_drift: float = 1e-4,
           check: bool = True) -> tuple[SuperDensity, ObservableSeries]:
    """Repeated Strang steps up to time ``T`` (a multiple of ``dt``).

    Observables are recorded at the start, every ``sample_stride`` steps and
    at the end.  Stops with :class:`EngineAbort` on non-finite values or when
    the trace drifts from its initial value by more than ``trace_drift``.
    """
    steps = int(round(T / dt))
    if steps < 0 or abs(steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError("T must be a non-negative multiple of dt")
    if not np.all(np.isfinite(state.values)):
        raise EngineAbort(0, "non-finite initial values")
    prop = SplitStepPropagator(state.grid, mode, V, dt)
    if check:
        prop.check_dt(state.values)
    series = ObservableSeries()
    series.append(observables(state, min_eig))
    tr0 = state.trace()
    v = state.values
    t0 = state.time
    for i in range(1, steps + 1):
        v = prop.step_values(v)
        if i % sample_stride == 0 or i == steps:
            if not np.all(np.isfinite(v)):
                raise EngineAbort(i, "non-finite values")
            cur = SuperDensity(state.grid, v, t0 + i * dt)
            if abs(cur.trace() - tr0) > trace_drift:
                raise EngineAbort(i, f"trace drifted to {cur.trace():.6g}")
            series.append(observables(cur, min_eig))
    return SuperDensity(state.grid, v, t0 + steps * dt), series


# --- classical oracle -------------------------------------------------------

@dataclass(frozen=True)
class OracleResult:
    density: PhaseSpaceDensity
    escaped: int
    n_samples: int

    @property
    def escaped_fraction(self) -> float:
        return self.escaped / self.n_samples


def hamilton_flow(x, p, V: PolynomialPotential, T: float, mass: float = 1.0, dt: float = 2e-3):
    """RK4 integration of ``x' = p/m``, ``p' = -V'(x)`` for arrays of points."""
    steps = max(1, int(np.ceil(abs(T) / dt)))
    h = T / steps
    x = np.array(x, dtype=float)
    p = np.array(p, dtype=float)

    def rhs(x, p):
        return p / mass, -V.derivative(x)

    for _ in range(steps):
        k1x, k1p = rhs(x, p)
        k2x, k2p = rhs(x + 0.5 * h * k1x, p + 0.5 * h * k1p)
        k3x, k3p = rhs(x + 0.5 * h * k2x, p + 0.5 * h * k2p)
        k4x, k4p = rhs(x + h * k3x, p + h * k3p)
        x = x + (h / 6) * (k1x + 2 * k2x + 2 * k3x + k4x)
        p = p + (h / 6) * (k1p + 2 * k2p + 2 * k3p + k4p)
    return x, p


def characteristics_oracle(rho0: PhaseSpaceDensity, V: PolynomialPotential, T: float, n_samples: int,
                           seed: int = 0, max_escape: float = 0.01, dt: float = 2e-3) -> OracleResult:
    """Monte Carlo transport of ``rho0`` along classical trajectories.

    Points drawn from ``rho0`` (uniform within each cell) are moved with RK4
    and deposited back with cloud-in-cell weights.  Points landing outside the
    grid are counted; more than ``max_escape`` of them aborts the run.
    """
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 1e4")
    g = rho0.grid
    rng = np.random.default_rng(seed)
    w = np.clip(rho0.values, 0, None).ravel()
    idx = rng.choice(w.size, size=n_samples, p=w / w.sum())
    i, j = np.unravel_index(idx, rho0.values.shape)
    x = g.x[i] + g.dx * (rng.random(n_samples) - 0.5)
    p = g.p[j] + g.dp * (rng.random(n_samples) - 0.5)
    x, p = hamilton_flow(x, p, V, T, g.mass, dt)

    # fractional grid coordinates
    fx = (x - g.x[0]) / g.dx
    fp = (p - g.p[0]) / g.dp
    inside = (fx >= 0) & (fx <= g.n - 1) & (fp >= 0) & (fp <= g.n - 1)
    escaped = int(np.sum(~inside))
    if escaped > max_escape * n_samples:
        raise EngineAbort(0, f"{escaped} of {n_samples} trajectories left the grid")
    fx, fp = fx[inside], fp[inside]
    i0 = np.minimum(np.floor(fx).astype(int), g.n - 2)
    j0 = np.minimum(np.floor(fp).astype(int), g.n - 2)
    tx, tp = fx - i0, fp - j0
    out = np.zeros((g.n, g.n))
    for di, wx in ((0, 1 - tx), (1, tx)):
        for dj, wp in ((0, 1 - tp), (1, tp)):
            np.add.at(out, (i0 + di, j0 + dj), wx * wp)
    out /= n_samples * g.dx * g.dp
    return OracleResult(PhaseSpaceDensity(g, out), escaped, n_samples)


def coarsen(rho: PhaseSpaceDensity, factor: int) -> np.ndarray:
    """Block averages over ``factor x factor`` cells."""
    n = rho.grid.n
    if n % factor:
        raise ValueError("factor must divide n")
    return rho.values.reshape(n // factor, factor, n // factor, factor).mean(axis=(1, 3))


def l1_distance(a: PhaseSpaceDensity, b: PhaseSpaceDensity, factor: int = 1) -> float:
    """``int |a - b| dx dp`` after optional block averaging."""
    if a.grid != b.grid:
        raise ValueError("densities live on different grids")
    diff = coarsen(a, factor) - coarsen(b, factor) if factor > 1 else a.values - b.values
    return float(np.abs(diff).sum() * a.cell * (factor**2 if factor > 1 else 1))
