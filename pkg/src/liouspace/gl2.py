"""General linear dynamics of a two-state system.

The most general hermiticity-preserving generator on 2x2 matrices is written
with Pauli matrices as::

    L[ij, kl] = i G[mu, nu] <i|A_mu|k> <l|A_nu|j>,   A_mu = a_mu + b_mu . sigma

with ``G = diag(1, g)`` block-diagonal and ``g`` a Hermitian 2x2 matrix.  The
three-parameter ``(alpha, beta, gamma)`` model is a special case whose
evolution is solved in closed form here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import HERM_TOL, apply, check_density, sandwich_superop, propagate_exp

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


@dataclass(frozen=True)
class GLParams:
    """The 16 real parameters of the general 2x2 generator.

    ``a`` holds ``a_0, a_1, a_2``; row ``mu`` of ``b`` is the 3-vector
    ``b_mu``; ``g`` is the Hermitian lower block of ``G``.
    """

    a: np.ndarray = field(default_factory=lambda: np.zeros(3))
    b: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    g: np.ndarray = field(default_factory=lambda: np.zeros((2, 2), dtype=complex))

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(3)
        b = np.asarray(self.b, dtype=float).reshape(3, 3)
        g = np.asarray(self.g, dtype=complex).reshape(2, 2)
        if np.abs(g - g.conj().T).max() > HERM_TOL * max(1.0, np.abs(g).max()):
            raise ValueError("g must be Hermitian")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "g", g)

    @property
    def G(self) -> np.ndarray:
        G = np.zeros((3, 3), dtype=complex)
        G[0, 0] = 1.0
        G[1:, 1:] = self.g
        return G

    def operators(self) -> list[np.ndarray]:
        """The three 2x2 matrices ``a_mu + b_mu . sigma``."""
        return [self.a[m] * SIGMA_0 + np.einsum("i,ijk->jk", self.b[m], PAULI) for m in range(3)]

    def to_vector(self) -> np.ndarray:
        """Flatten to 16 reals: a (3), b (9), g11, g22, Re g12, Im g12."""
        g = self.g
        return np.concatenate(
            [self.a, self.b.reshape(-1), [g[0, 0].real, g[1, 1].real, g[0, 1].real, g[0, 1].imag]]
        )

    @classmethod
    def from_vector(cls, x) -> "GLParams":
        x = np.asarray(x, dtype=float)
        if x.shape != (16,):
            raise ValueError("expected 16 real parameters")
        g12 = x[14] + 1j * x[15]
        g = np.array([[x[12], g12], [np.conj(g12), x[13]]])
        return cls(a=x[:3], b=x[3:12].reshape(3, 3), g=g)

    @classmethod
    def random(cls, rng: np.random.Generator, scale: float = 1.0) -> "GLParams":
        return cls.from_vector(scale * rng.standard_normal(16))


@dataclass(frozen=True)
class SimplifiedParams:
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if not all(np.isfinite([self.alpha, self.beta, self.gamma])):
            raise ValueError("parameters must be finite")


@dataclass(frozen=True)
class ModeData:
    """Closed-form data of the off-diagonal solution.

    ``rho12(t) = r_plus exp(omega_plus t) + r_minus exp(omega_minus t) + r_c``.
    When the two rates coincide (``gamma**4 == 4 alpha**2`` with a nilpotent
    mode matrix) the amplitudes are undefined and ``degenerate`` is set; the
    solution then takes the secular form ``(u0 + t du0) exp(omega t) + r_c``
    with ``(u0, du0) = secular``.
    """

    omega_plus: complex
    omega_minus: complex
    r_plus: complex
    r_minus: complex
    r_c: complex
    degenerate: bool = False
    secular: tuple[complex, complex] | None = None


def parameter_count(N: int) -> tuple[int, int]:
    """Real parameters of von Neumann vs general hermiticity-preserving dynamics."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return N * N, N**4


def build_gl_generator(p: GLParams) -> np.ndarray:
    """The 4x4 superoperator of the 16-parameter model."""
    A = p.operators()
    G = p.G
    L = np.zeros((4, 4), dtype=complex)
    for mu in range(3):
        for nu in range(3):
            if G[mu, nu] != 0:
                L += 1j * G[mu, nu] * sandwich_superop(A[mu], A[nu])
    return L


def trace_constraint_residuals(p: GLParams) -> np.ndarray:
    """The scalar and vector trace constraints as 4 reals.

    Trace preservation needs ``sum_{mu,nu} G[mu,nu] A_nu A_mu = 0``.  Its
    identity part is ``a.G.a + b.G.b`` and its Pauli part is
    ``2 a.Re(G).b + i sum G[mu,nu] b_nu x b_mu``; both are real.
    """
    G = p.G
    a, b = p.a, p.b
    scalar = np.real(a @ G @ a + np.einsum("mi,mn,ni->", b, G, b))
    vector = 2 * np.einsum("m,mn,ni->i", a, G.real, b)
    cross = np.zeros(3, dtype=complex)
    for mu in range(3):
        for nu in range(3):
            cross += 1j * G[mu, nu] * np.cross(b[nu], b[mu])
    return np.concatenate([[scalar], vector + cross.real])


# alias under the operation name used in the docs
check_trace_constraints = trace_constraint_residuals


def constraint_trace_residual(residuals) -> float:
    """Largest column sum ``|sum_i L[ii, kl]|`` implied by the constraint residuals.

    The column sums are the entries of ``i (s I + v . sigma)`` with
    ``(s, v) = residuals``.
    """
    s, v = residuals[0], np.asarray(residuals[1:])
    S = s * SIGMA_0 + np.einsum("i,ijk->jk", v, PAULI)
    return float(np.abs(S).max())


def project_trace_preserving(p: GLParams, tol: float = 1e-14, max_iter: int = 50) -> GLParams:
    """Nearest-ish parameter set satisfying the four trace constraints.

    Gauss-Newton with minimum-norm steps.  The residuals are quadratic in the
    parameters, so central differences give the exact Jacobian.
    """
    x = p.to_vector()

    def res(x):
        return trace_constraint_residuals(GLParams.from_vector(x))

    h = 1e-3
    eye = np.eye(16)
    for _ in range(max_iter):
        r = res(x)
        if np.abs(r).max() <= tol * max(1.0, np.abs(x).max() ** 2):
            return GLParams.from_vector(x)
        J = np.column_stack([(res(x + h * e) - res(x - h * e)) / (2 * h) for e in eye])
        x = x - np.linalg.lstsq(J, r, rcond=None)[0]
    raise RuntimeError("trace-constraint projection did not converge")


def simplified_generator(s: SimplifiedParams) -> np.ndarray:
    """Generator of the ``(alpha, beta, gamma)`` model, term by term."""
    al, be, ga = s.alpha, s.beta, s.gamma
    I2 = SIGMA_0
    L = al * (sandwich_superop(SIGMA_Z, I2) - sandwich_superop(I2, SIGMA_Z))
    L = L + be * ga * (sandwich_superop(SIGMA_Z, SIGMA_X) - sandwich_superop(SIGMA_X, SIGMA_Z))
    L = L + 1j * be * ga * (sandwich_superop(SIGMA_Y, I2) + sandwich_superop(I2, SIGMA_Y))
    L = L + 1j * be**2 * sandwich_superop(I2, I2)
    L = L + 1j * ga**2 * sandwich_superop(SIGMA_Y, SIGMA_Y)
    L = L - 1j * (be**2 + ga**2) * sandwich_superop(SIGMA_Z, SIGMA_Z)
    return L


def simplified_as_gl(s: SimplifiedParams) -> GLParams:
    """GL parameters reproducing :func:`simplified_generator`.

    The vectors ``b_0 = (0, gamma, 0)``, ``b_1 = (beta gamma, 0, 0)``,
    ``b_2 = (0, 0, 1)`` are mutually orthogonal; ``g11 = Re g12 = 0``.
    """
    al, be, ga = s.alpha, s.beta, s.gamma
    a = [be, al, 0.0]
    b = [[0.0, ga, 0.0], [be * ga, 0.0, 0.0], [0.0, 0.0, 1.0]]
    g = [[0.0, 1j], [-1j, -(be**2 + ga**2)]]
    return GLParams(a=a, b=b, g=g)


def explicit_rhs(rho, s: SimplifiedParams) -> np.ndarray:
    """Right-hand side ``L rho`` of the model written out entry by entry."""
    al, be, ga = s.alpha, s.beta, s.gamma
    r11 = rho[0, 0]
    r12 = rho[0, 1]
    c = 2 * be**2 + ga**2
    out = np.empty((2, 2), dtype=complex)
    out[0, 0] = 1j * ga**2 * (1 - 2 * r11)
    out[1, 1] = -out[0, 0]
    out[0, 1] = 2 * be * ga + (2 * al + 1j * c) * r12 - 1j * ga**2 * np.conj(r12)
    out[1, 0] = -2 * be * ga - (2 * al - 1j * c) * np.conj(r12) - 1j * ga**2 * r12
    return out


def fixed_point_offset(s: SimplifiedParams) -> tuple[complex, bool]:
    """``r_c`` and a flag raised when its denominator vanishes."""
    al, be, ga = s.alpha, s.beta, s.gamma
    den = al**2 + be**2 * (be**2 + ga**2)
    if den <= 0 or den < 1e-300:
        # alpha = beta = 0: the forcing 2 beta gamma vanishes as well
        return 0j, True
    return complex(-be * ga * (al - 1j * be**2) / den), False


def stationary_state(s: SimplifiedParams) -> tuple[np.ndarray, bool]:
    """Fixed point ``diag(1/2) + r_c`` of the model and the degeneracy flag."""
    rc, degenerate = fixed_point_offset(s)
    rho = np.array([[0.5, rc], [np.conj(rc), 0.5]], dtype=complex)
    return rho, degenerate


def _offdiag_mode_op(u, s: SimplifiedParams):
    """``N(u) = -2 i alpha u - gamma**2 conj(u)``, the traceless part of the drift."""
    return -2j * s.alpha * u - s.gamma**2 * np.conj(u)


def mode_rates(s: SimplifiedParams) -> tuple[complex, complex]:
    """``Omega_pm = (2 beta**2 + gamma**2) +- sqrt(gamma**4 - 4 alpha**2)``."""
    c = 2 * s.beta**2 + s.gamma**2
    root = np.sqrt(complex(s.gamma**4 - 4 * s.alpha**2))
    return c + root, c - root


def offdiag_drift_matrix(s: SimplifiedParams) -> np.ndarray:
    """Real 2x2 matrix of ``d/dt (Re u, Im u)`` for ``u = rho12 - r_c``."""
    al, be, ga = s.alpha, s.beta, s.gamma
    return np.array([[2 * be**2, 2 * al], [-2 * al, 2 * be**2 + 2 * ga**2]])


def mode_data(rho0, s: SimplifiedParams, extended: tuple[complex, complex] | None = None) -> ModeData:
    """Rates and amplitudes of the off-diagonal solution for ``rho0``.

    Hermitian initial data fix both amplitudes.  ``extended=(r_plus,
    r_minus)`` overrides them, which yields the enlarged solution family
    where ``rho12`` and ``rho21`` are no longer tied by the equation of motion.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    rc, _ = fixed_point_offset(s)
    om_p, om_m = mode_rates(s)
    root = (om_p - om_m) / 2
    u0 = rho0[0, 1] - rc
    du0 = _offdiag_mode_op(u0, s)
    if extended is not None:
        return ModeData(om_p, om_m, complex(extended[0]), complex(extended[1]), rc)
    scale = 2 * abs(s.alpha) + s.gamma**2
    if abs(root) <= 1e-12 * max(scale, 1e-300) and abs(du0) > 0:
        return ModeData(om_p, om_m, np.nan, np.nan, rc, degenerate=True, secular=(u0, du0))
    if root == 0:
        # both rates equal and the drift acts as a multiple of the identity
        return ModeData(om_p, om_m, u0, 0j, rc)
    return ModeData(om_p, om_m, 0.5 * (u0 + du0 / root), 0.5 * (u0 - du0 / root), rc)


def _sinhc(z, t):
    """``sinh(z)/z * t`` with ``z = root * t``, stable at small ``z``."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-4
    safe = np.where(small, 1.0, z)
    return np.where(small, t * (1 + z**2 / 6 + z**4 / 120), t * np.sinh(safe) / safe)


def analytic_solution(rho0, s: SimplifiedParams, t, extended: tuple[complex, complex] | None = None):
    """Closed-form state of the model at time(s) ``t``.

    ``rho11(t) = 1/2 + (rho11(0) - 1/2) exp(-2 gamma**2 t)`` and
    ``rho12(t) = r_c + exp(c t) [cosh(w t) u0 + sinh(w t)/w N(u0)]`` with
    ``c = 2 beta**2 + gamma**2``, ``w = sqrt(gamma**4 - 4 alpha**2)``, which is
    the two-mode sum ``r_+ e^{Omega_+ t} + r_- e^{Omega_- t} + r_c`` written so
    that it stays finite through the degenerate point ``w = 0``.

    Returns ``(rho, modes)``; ``rho`` has shape ``(2, 2)`` for scalar ``t``
    and ``(len(t), 2, 2)`` otherwise.
    """
    rho0 = check_density(rho0, herm_tol=1e-10, trace_tol=1e-10)
    if rho0.shape != (2, 2):
        raise ValueError("the model acts on 2x2 density matrices")
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    modes = mode_data(rho0, s, extended)
    r11 = 0.5 + (rho0[0, 0].real - 0.5) * np.exp(-2 * s.gamma**2 * t)
    if extended is not None:
        r12 = modes.r_plus * np.exp(modes.omega_plus * t) + modes.r_minus * np.exp(modes.omega_minus * t) + modes.r_c
    else:
        c = 2 * s.beta**2 + s.gamma**2
        root = (modes.omega_plus - modes.omega_minus) / 2
        u0 = rho0[0, 1] - modes.r_c
        du0 = _offdiag_mode_op(u0, s)
        z = root * t
        r12 = modes.r_c + np.exp(c * t) * (np.cosh(z) * u0 + _sinhc(z, t) * du0)
    rho = np.empty((len(t), 2, 2), dtype=complex)
    rho[:, 0, 0] = r11
    rho[:, 1, 1] = 1 - r11
    rho[:, 0, 1] = r12
    rho[:, 1, 0] = np.conj(r12)
    return (rho[0] if scalar else rho), modes


def eigenvalues_2x2(rho) -> tuple:
    """``rho_pm = 1/2 +- sqrt((rho11 - 1/2)**2 + |rho12|**2)``.

    Works on a single matrix or a stack ``(..., 2, 2)``.
    """
    rho = np.asarray(rho)
    radius = np.sqrt((rho[..., 0, 0].real - 0.5) ** 2 + np.abs(rho[..., 0, 1]) ** 2)
    return 0.5 + radius, 0.5 - radius


def pauli_statistics(rho) -> dict:
    """Pauli expectations ``Tr(sigma rho)`` and their variances.

    Variances use the closed forms ``1 - (2 Re rho12)**2``,
    ``1 - (2 Im rho12)**2`` and ``4 rho11 (1 - rho11)``.
    """
    rho = np.asarray(rho, dtype=complex)
    r11 = rho[..., 0, 0].real
    r12 = rho[..., 0, 1]
    ex, ey, ez = (np.real(np.einsum("ij,...ji->...", S, rho)) for S in PAULI)
    return {
        "sx": ex,
        "sy": ey,
        "sz": ez,
        "var_x": 1 - (2 * r12.real) ** 2,
        "var_y": 1 - (2 * r12.imag) ** 2,
        "var_z": 4 * r11 * (1 - r11),
    }


def trajectory(rho0, s: SimplifiedParams, times, method: str = "analytic", dt: float = 1e-3, extended=None):
    """States at ``times`` from the closed form, the matrix exponential or RK4."""
    times = np.asarray(times, dtype=float)
    if method == "analytic":
        return analytic_solution(rho0, s, times, extended)[0]
    if extended is not None:
        raise ValueError("the extended solution family only exists in closed form")
    L = simplified_generator(s)
    if method == "expm":
        return np.array([propagate_exp(L, rho0, t) for t in times])
    if method == "rk4":
        from .core import rk4_trajectory

        return rk4_trajectory(L, rho0, times, dt)
    raise ValueError(f"unknown method {method!r}")


def scan_anomalous(s: SimplifiedParams, rho0, horizon: float, dt: float, method: str = "analytic",
                   extended=None, tol: float = 1e-10) -> list[tuple[float, float, float]]:
    """Sample times where an eigenvalue leaves ``[0, 1]``.

    Returns ``(t, rho_minus, rho_plus)`` for every sample with
    ``rho_minus < -tol`` or ``rho_plus > 1 + tol``.
    """
    if horizon <= 0 or dt <= 0:
        raise ValueError("horizon and dt must be positive")
    n = int(np.floor(horizon / dt + 1e-9))
    times = dt * np.arange(n + 1)
    # RK4 substeps of at most 1e-3 between samples
    substep = dt / np.ceil(dt / 1e-3)
    rho = trajectory(rho0, s, times, method=method, dt=substep, extended=extended)
    rp, rm = eigenvalues_2x2(rho)
    bad = (rm < -tol) | (rp > 1 + tol)
    return [(float(t), float(a), float(b)) for t, a, b in zip(times[bad], rm[bad], rp[bad])]


def fit_exponential_rate(times, values) -> float:
    """Least-squares slope of ``log|values|`` against ``times``."""
    y = np.log(np.abs(np.asarray(values)))
    return float(np.polyfit(np.asarray(times, dtype=float), y, 1)[0])


def would_be_energy(rho, s: SimplifiedParams):
    """``alpha <sigma_z>`` along a trajectory."""
    return s.alpha * pauli_statistics(rho)["sz"]


def residual_at_fixed_point(s: SimplifiedParams) -> float:
    rho, _ = stationary_state(s)
    return float(np.abs(apply(simplified_generator(s), rho)).max())
