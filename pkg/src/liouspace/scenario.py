"""Scenario files: parsing, validation and deterministic execution.

A scenario is a YAML document checked against ``data/schema.yaml`` plus a
few cross-field rules.  Validation collects every problem it finds and
reports each with its line number; no engine runs until the file is clean.
"""

from __future__ import annotations

import hashlib
import importlib.resources as resources
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import __version__
from . import gl2, grid as G, hybrid as H, maps, terms
from .core import PropagationError, is_hermiticity_preserving, is_trace_preserving, propagate_exp, von_neumann_generator
from .io import dump_json, sha256_file, write_csv, write_hybrid_snapshot, write_snapshot
from .potentials import BivariatePolynomial, EvolutionMode, PolynomialPotential, eval_E

KINDS = ("finite_2x2", "gl_params", "map_analysis", "grid_1d", "hybrid")


@dataclass(frozen=True)
class Issue:
    field: str
    message: str
    line: int | None = None
    source: str = "<scenario>"

    def __str__(self):
        where = f"{self.source}:{self.line}" if self.line else self.source
        return f"{where}: {self.field or '<root>'}: {self.message}"


class ScenarioError(ValueError):
    """All validation problems of one scenario file."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("\n".join(str(i) for i in self.issues))


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    parameters: dict
    integrator: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    seed: int = 0
    budget_seconds: float = 300.0
    description: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "parameters": self.parameters,
                "integrator": self.integrator, "output": self.output, "seed": self.seed,
                "budget_seconds": self.budget_seconds, "description": self.description}

    @property
    def digest(self) -> str:
        return hashlib.sha256(dump_json(self.to_dict()).encode()).hexdigest()


# --- schema and catalog -----------------------------------------------------

def _data():
    return resources.files("liouspace") / "data"


def load_schema() -> dict:
    return yaml.safe_load((_data() / "schema.yaml").read_text())


def bundled_dir() -> Path:
    return Path(str(_data() / "bundled"))


def list_bundled() -> list[tuple[str, str]]:
    """``(name, description)`` of every bundled scenario, sorted by name."""
    out = []
    for path in sorted(bundled_dir().glob("*.yaml")):
        doc = yaml.safe_load(path.read_text()) or {}
        out.append((path.stem, str(doc.get("description", "")).strip().splitlines()[0] if doc.get("description") else ""))
    return out


def resolve(name_or_path) -> Path:
    """A file path, or the name of a bundled scenario."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    cand = bundled_dir() / f"{name_or_path}.yaml"
    if cand.is_file():
        return cand
    raise FileNotFoundError(f"no scenario file or bundled scenario named {name_or_path!r}")


# --- parsing ----------------------------------------------------------------

def _line_index(node, path=(), out=None) -> dict:
    """Map each mapping key / sequence item path to its 1-based line."""
    out = {} if out is None else out
    out.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = path + (k.value,)
            out[key] = k.start_mark.line + 1
            _line_index(v, key, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_index(v, path + (i,), out)
    return out


def _lookup_line(lines: dict, path) -> int | None:
    path = tuple(path)
    while path not in lines and path:
        path = path[:-1]
    return lines.get(path)


def _dotted(path) -> str:
    return ".".join(str(p) for p in path)


def _fill_defaults(data: dict, schema: dict):
    for key in ("seed", "budget_seconds"):
        data.setdefault(key, schema["properties"][key]["default"])
    if "integrator" in data:
        data["integrator"].setdefault("sample_stride", 1)
    data.setdefault("output", {}).setdefault("snapshots", False)
    data.setdefault("parameters", {})
    for rule in schema["allOf"]:
        if rule["if"]["properties"]["kind"]["const"] != data["kind"]:
            continue
        props = rule["then"]["properties"]["parameters"].get("properties", {})
        for k, spec in props.items():
            if "default" in spec:
                data["parameters"].setdefault(k, spec["default"])
    p = data["parameters"]
    for k in ("coupling", "classifier_potential"):
        if isinstance(p.get(k), dict):
            p[k].setdefault("scale", 1.0)


def _coupling_from(spec: dict) -> BivariatePolynomial:
    if "terms" in spec:
        return BivariatePolynomial.from_terms({(int(i), int(j)): float(c) * spec.get("scale", 1.0)
                                               for i, j, c in spec["terms"]})
    return BivariatePolynomial.difference_power(int(spec["difference_power"]), float(spec.get("scale", 1.0)))


def _multiple(T, dt) -> bool:
    steps = round(T / dt)
    return steps >= 1 and abs(steps * dt - T) <= 1e-9 * max(1.0, T)


def _cross_checks(data: dict) -> list[tuple[tuple, str]]:
    """Rules beyond the JSON schema, as ``(path, message)`` pairs."""
    errs = []
    kind, p = data["kind"], data.get("parameters", {})
    integ = data.get("integrator")
    if integ and kind in ("finite_2x2", "grid_1d", "hybrid") and not _multiple(integ["T"], integ["dt"]):
        errs.append((("integrator", "T"), f"T = {integ['T']} must be a positive multiple of dt = {integ['dt']}"))
    if kind == "grid_1d":
        if p["n"] % 2:
            errs.append((("parameters", "n"), "grid size must be even"))
        if "classical_oracle" in p.get("analyses", []) and p["n"] % p.get("oracle_coarsen", 1):
            errs.append((("parameters", "oracle_coarsen"), "must divide n"))
    elif kind == "map_analysis":
        gen = p["generator"]
        need = ["pauli"] if gen["type"] == "von_neumann" else ["alpha", "beta", "gamma"]
        for k in need:
            if k not in gen:
                errs.append((("parameters", "generator"), f"generator type {gen['type']!r} requires {k!r}"))
    elif kind == "hybrid":
        for k in ("n", "n_q"):
            n = p.get(k)
            if n is not None and (n % 2 or n > H.MAX_HYBRID_N):
                errs.append((("parameters", k), f"must be even and at most {H.MAX_HYBRID_N}"))
        for k in ("coupling", "classifier_potential"):
            c = p.get(k)
            if c is not None and ("terms" in c) == ("difference_power" in c):
                errs.append((("parameters", k), "give exactly one of 'terms' or 'difference_power'"))
                continue
            if k == "coupling" and c is not None:
                report = H.validate_coupling(_coupling_from(c))
                if not report.ok:
                    errs.append((("parameters", k), "violates the harmonic-coupling rule (total degree <= 2): "
                                 + str(report)))
        if p.get("evolve", True):
            for k in ("initial", "initial_q"):
                if k not in p:
                    errs.append((("parameters",), f"'{k}' is required when evolve is true"))
            if not integ:
                errs.append(((), "'integrator' is required when evolve is true"))
        if "expand_classify" in p.get("analyses", []) and "classifier_potential" not in p:
            errs.append((("parameters",), "'classifier_potential' is required for expand_classify"))
    return errs


def parse_text(text: str, source: str = "<scenario>", overrides: dict | None = None) -> Scenario:
    """Parse and validate scenario text; raises :class:`ScenarioError` listing all issues."""
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioError([Issue("", f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                                   mark.line + 1 if mark else None, source)]) from None
    if not isinstance(data, dict):
        raise ScenarioError([Issue("", "scenario must be a mapping", 1, source)])
    lines = _line_index(node) if node is not None else {}
    if overrides:
        integ = data.setdefault("integrator", {})
        if isinstance(integ, dict):
            integ.update({k: v for k, v in overrides.items() if v is not None})
    schema = load_schema()
    validator = jsonschema.Draft202012Validator(schema)
    issues = []
    for err in sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message)):
        if err.validator == "if":
            continue
        path = tuple(err.absolute_path)
        issues.append(Issue(_dotted(path), err.message, _lookup_line(lines, path), source))
    if issues:
        raise ScenarioError(issues)
    _fill_defaults(data, schema)
    for path, msg in _cross_checks(data):
        issues.append(Issue(_dotted(path), msg, _lookup_line(lines, path), source))
    if issues:
        raise ScenarioError(issues)
    return Scenario(name=data.get("name", Path(source).stem), kind=data["kind"], parameters=data["parameters"],
                    integrator=data.get("integrator", {}), output=data["output"], seed=data["seed"],
                    budget_seconds=data["budget_seconds"], description=str(data.get("description", "")).strip())


def parse_scenario(path, overrides: dict | None = None) -> Scenario:
    path = Path(path)
    return parse_text(path.read_text(), str(path), overrides)


# --- running ------------------------------------------------------------------

class _Outputs:
    def __init__(self, directory: Path):
        self.dir = directory
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files = []

    def csv(self, name, columns, rows):
        self.files.append(write_csv(self.dir / name, columns, rows))

    def add(self, path):
        self.files.append(Path(path))

    def listing(self):
        return [{"name": p.name, "bytes": p.stat().st_size, "sha256": sha256_file(p)}
                for p in sorted(self.files, key=lambda p: p.name)]


def _sample_times(integ) -> np.ndarray:
    dt, T, stride = integ["dt"], integ["T"], integ["sample_stride"]
    steps = int(round(T / dt))
    idx = list(range(0, steps + 1, stride))
    if idx[-1] != steps:
        idx.append(steps)
    return dt * np.array(idx, dtype=float)


def _bloch_state(r) -> np.ndarray:
    return 0.5 * (gl2.SIGMA_0 + r[0] * gl2.SIGMA_X + r[1] * gl2.SIGMA_Y + r[2] * gl2.SIGMA_Z)


def stroboscopic_growth_rate(rho0, s: gl2.SimplifiedParams, T: float) -> float | None:
    """Rate of ``|rho12 - r_c|`` sampled once per oscillation period.

    In the oscillatory regime ``gamma**4 < 4 alpha**2`` the deviation is
    ``e^{ct}`` times a periodic factor, so samples at whole periods lie on an
    exact exponential.  Returns ``None`` outside that regime or when fewer
    than three periods fit in ``T``.
    """
    w2 = s.gamma**4 - 4 * s.alpha**2
    if w2 >= 0:
        return None
    period = 2 * np.pi / np.sqrt(-w2)
    k = int(np.floor(T / period + 1e-12))
    if k < 2:
        return None
    times = period * np.arange(k + 1)
    rho, modes = gl2.analytic_solution(rho0, s, times)
    dev = np.abs(rho[:, 0, 1] - modes.r_c)
    if dev[0] == 0:
        return None
    return gl2.fit_exponential_rate(times, dev)


def _run_finite(sc: Scenario, out: _Outputs) -> dict:
    p = sc.parameters
    s = gl2.SimplifiedParams(p["alpha"], p["beta"], p["gamma"])
    rho0 = _bloch_state(p["bloch"])
    times = _sample_times(sc.integrator)
    ref = gl2.trajectory(rho0, s, times, "analytic")
    rp_, rm_ = gl2.eigenvalues_2x2(ref)
    purity = np.real(np.einsum("tij,tji->t", ref, ref))
    cols = ["t", "rho11", "rho12_re", "rho12_im", "eig_minus", "eig_plus", "purity"]
    data = [times, ref[:, 0, 0].real, ref[:, 0, 1].real, ref[:, 0, 1].imag, rm_, rp_, purity]
    deviations = {}
    for method in p["methods"]:
        if method == "analytic":
            continue
        traj = gl2.trajectory(rho0, s, times, method, dt=sc.integrator["dt"])
        dev = np.abs(traj - ref).max(axis=(1, 2))
        cols.append(f"dev_{method}")
        data.append(dev)
        deviations[method] = float(dev.max())
    out.csv("series.csv", cols, zip(*data))

    summary = {"max_deviation_vs_analytic": deviations,
               "fixed_point_residual": gl2.residual_at_fixed_point(s)}
    rho_ss, degenerate = gl2.stationary_state(s)
    summary["stationary_rho12"] = complex(rho_ss[0, 1])
    summary["stationary_degenerate"] = degenerate
    summary["min_eigenvalue"] = float(rm_.min())
    summary["max_eigenvalue"] = float(rp_.max())
    summary["relaxation_rate_expected"] = 2 * s.gamma**2
    d = np.abs(ref[:, 0, 0].real - 0.5)
    if s.gamma and d[0] > 1e-12 and np.all(d > 1e-300):
        summary["relaxation_rate_fit"] = -gl2.fit_exponential_rate(times, d)
    summary["growth_rate_expected"] = 2 * s.beta**2 + s.gamma**2
    fit = stroboscopic_growth_rate(rho0, s, sc.integrator["T"])
    if fit is not None:
        summary["growth_rate_fit"] = fit
    if p["scan_anomalous"]:
        events = gl2.scan_anomalous(s, rho0, sc.integrator["T"], sc.integrator["dt"] * sc.integrator["sample_stride"],
                                    tol=p["anomaly_tol"])
        out.csv("anomalous.csv", ["t", "eig_minus", "eig_plus"], events)
        summary["anomalous_events"] = len(events)
        summary["first_anomalous"] = list(events[0]) if events else None
    return summary


def _run_gl(sc: Scenario, out: _Outputs) -> dict:
    p = sc.parameters
    rng = np.random.default_rng(sc.seed)
    rows = []
    for i in range(p["draws"]):
        raw = gl2.GLParams.random(rng, p["scale"])
        L = gl2.build_gl_generator(raw)
        row = [i, gl2.constraint_trace_residual(gl2.trace_constraint_residuals(raw)),
               is_trace_preserving(L).residual, is_hermiticity_preserving(L).residual]
        if p["project"]:
            proj = gl2.project_trace_preserving(raw)
            Lp = gl2.build_gl_generator(proj)
            row += [gl2.constraint_trace_residual(gl2.trace_constraint_residuals(proj)),
                    is_trace_preserving(Lp).residual]
        rows.append(row)
    cols = ["index", "constraint_residual", "trace_residual", "hermiticity_residual"]
    if p["project"]:
        cols += ["projected_constraint_residual", "projected_trace_residual"]
    out.csv("series.csv", cols, rows)
    a = np.array(rows, dtype=float)
    summary = {"draws": p["draws"],
               "max_hermiticity_residual": float(a[:, 3].max()),
               "max_constraint_vs_trace_gap": float(np.abs(a[:, 1] - a[:, 2]).max())}
    if p["project"]:
        summary["max_projected_trace_residual"] = float(a[:, 5].max())
    return summary


def _generator_of(gen: dict) -> np.ndarray:
    if gen["type"] == "von_neumann":
        h = gen["pauli"]
        H_ = sum(c * P for c, P in zip(h, (gl2.SIGMA_0, *gl2.PAULI)))
        return von_neumann_generator(H_)
    return gl2.simplified_generator(gl2.SimplifiedParams(gen["alpha"], gen["beta"], gen["gamma"]))


def _random_density(rng, N=2) -> np.ndarray:
    A = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    rho = A @ A.conj().T
    return rho / np.trace(rho)


def _run_maps(sc: Scenario, out: _Outputs) -> dict:
    p = sc.parameters
    L = _generator_of(p["generator"])
    times = _sample_times(sc.integrator)[1:]
    rows, first_fail, kraus_counts = [], None, []
    for t in times:
        M = maps.map_at_time(L, t)
        C = maps.choi_of(M)
        cp = maps.is_completely_positive(C, p["cp_tol"])
        nk, comp = np.nan, np.nan
        if cp.ok:
            K = maps.kraus_decompose(C, p["cp_tol"])
            nk = len(K)
            kraus_counts.append(nk)
            comp = float(np.abs(maps.kraus_completeness(K) - np.eye(2)).max())
        elif first_fail is None:
            first_fail = float(t)
        rows.append([t, cp.min_eigenvalue, float(cp.ok), nk, comp])
    out.csv("series.csv", ["t", "choi_min_eig", "completely_positive", "n_kraus", "kraus_completeness"], rows)

    C_basis = maps.conserved_observables(L)
    rng = np.random.default_rng(sc.seed)
    drift = 0.0
    for _ in range(p["trajectories"]):
        rho0 = _random_density(rng)
        for t in times:
            rho = propagate_exp(L, rho0, t)
            for C in C_basis:
                drift = max(drift, abs(np.trace(C @ rho) - np.trace(C @ rho0)))
    dim, _ = maps.supercommutant(L)
    return {"first_non_cp_time": first_fail,
            "all_completely_positive": first_fail is None,
            "kraus_counts": sorted(set(kraus_counts)),
            "conserved_dimension": len(C_basis),
            "conserved_drift": float(drift),
            "supercommutant_dimension": dim}


def _grid_state(grid: G.Grid1D, init: dict) -> G.SuperDensity:
    return G.gaussian_superdensity(grid, init["x0"], init["p0"], init["sigma_x"], init["sigma_p"])


def _series_rows(series):
    return series.as_array().tolist()


def _strang_errors(step_fn, v0, T, dt):
    """Max-norm errors at ``dt`` and ``dt/2`` against a ``dt/16`` reference."""
    def run(h):
        steps = int(round(T / h))
        stepper = step_fn(h)
        v = v0
        for _ in range(steps):
            v = stepper(v)
        return v
    ref = run(dt / 16)
    e1 = float(np.abs(run(dt) - ref).max())
    e2 = float(np.abs(run(dt / 2) - ref).max())
    return e1, e2, e1 / e2 if e2 else float("inf")


def _run_grid(sc: Scenario, out: _Outputs) -> dict:
    p = sc.parameters
    g = G.Grid1D(p["n"], p["extent"], p["mass"], p["hbar"])
    V = PolynomialPotential(p["potential"])
    mode = EvolutionMode(p["mode"])
    dt, T, stride = sc.integrator["dt"], sc.integrator["T"], sc.integrator["sample_stride"]
    state = _grid_state(g, p["initial"])
    final, series = G.evolve(state, mode, V, T, dt, stride)
    out.csv("series.csv", G.ObservableSeries.COLUMNS, _series_rows(series))
    if sc.output["snapshots"]:
        out.add(write_snapshot(out.dir / "initial.bin", state))
        out.add(write_snapshot(out.dir / "final.bin", final))
    arr = series.as_array()
    summary = {"final_trace": complex(final.trace()), "final_purity": final.purity(),
               "max_trace_drift": float(np.abs(arr[:, 1] - arr[0, 1] + 1j * (arr[:, 2] - arr[0, 2])).max()),
               "hermiticity_residual": final.hermiticity_residual()}
    analyses = p["analyses"]
    if "bra_ket_coupling" in analyses:
        Q, q = g.mesh()
        summary["max_abs_E"] = float(np.abs(eval_E(V, Q, q)).max())
    if "mode_difference" in analyses:
        other = EvolutionMode.QUANTUM if mode is EvolutionMode.CLASSICAL else EvolutionMode.CLASSICAL
        pa = G.SplitStepPropagator(g, mode, V, dt)
        pb = G.SplitStepPropagator(g, other, V, dt)
        va = vb = state.values
        rows = [(0.0, 0.0)]
        steps = int(round(T / dt))
        worst = 0.0
        for i in range(1, steps + 1):
            va, vb = pa.step_values(va), pb.step_values(vb)
            if i % stride == 0 or i == steps:
                d = float(np.abs(va - vb).max())
                worst = max(worst, d)
                rows.append((i * dt, d))
        out.csv("mode_difference.csv", ["t", "max_abs_diff"], rows)
        summary["mode_max_difference"] = worst
    if "transport" in analyses:
        init = p["initial"]
        expected = init["x0"] + init["p0"] * T / g.mass
        summary["centroid_error"] = float(abs(arr[-1, 4] - expected))
        summary["grid_spacing"] = g.dx
        w0, w1 = G.to_phase_space(state), G.to_phase_space(final)
        summary["momentum_marginal_l1_drift"] = float(np.sum(np.abs(w1.p_marginal() - w0.p_marginal())) * g.dp)
    if "coherent_oracle" in analyses:
        c = V.coefficients + (0.0,) * (3 - len(V.coefficients))
        if V.degree > 2 or c[2] <= 0:
            raise G.EngineAbort(0, "coherent_oracle needs a confining harmonic potential")
        omega = np.sqrt(2 * c[2] / g.mass)
        x_eq = -c[1] / (2 * c[2])
        init = p["initial"]
        t = arr[:, 0]
        x_an = x_eq + (init["x0"] - x_eq) * np.cos(omega * t) + init["p0"] / (g.mass * omega) * np.sin(omega * t)
        summary["coherent_max_error"] = float(np.abs(arr[:, 4] - x_an).max())
        out.csv("coherent_oracle.csv", ["t", "x_grid", "x_analytic"], zip(t, arr[:, 4], x_an))
    if "classical_oracle" in analyses:
        w0 = G.gaussian_phase_space(g, **p["initial"])
        orc = G.characteristics_oracle(w0, V, T, p["oracle_samples"], seed=sc.seed)
        wf = G.to_phase_space(final)
        summary["oracle_l1"] = G.l1_distance(wf, orc.density, p["oracle_coarsen"])
        summary["oracle_escaped"] = orc.escaped
        summary["grid_min_phase_space_value"] = float(wf.values.min())
    if "strang_convergence" in analyses:
        def make(h):
            return G.SplitStepPropagator(g, mode, V, h).step_values
        e1, e2, ratio = _strang_errors(make, state.values, T, dt)
        summary["strang"] = {"error_dt": e1, "error_dt_half": e2, "ratio": ratio}
    return summary


def _run_hybrid(sc: Scenario, out: _Outputs) -> dict:
    p = sc.parameters
    coupling = _coupling_from(p["coupling"]) if "coupling" in p else BivariatePolynomial([[0.0]])
    spec = H.HybridSpec(PolynomialPotential(p["V"]), PolynomialPotential(p["v"]), coupling, p["lambda"],
                        p["mass"], p["mass_q"])
    g1 = G.Grid1D(p["n"], p["extent"], p["mass"], p["hbar"])
    g2 = G.Grid1D(p.get("n_q", p["n"]), p.get("extent_q", p["extent"]), p["mass_q"], p["hbar"])
    summary = {}
    analyses = p["analyses"]
    if "classify" in analyses:
        summary["dynamics_class"] = H.classify_spec(spec).value
    if "coupling_equivalence" in analyses:
        summary["coupling_equivalence_deviation"] = H.coupling_equivalence_check(coupling, g1, g2)
    if "expand_classify" in analyses:
        pot = _coupling_from(p["classifier_potential"])
        found = terms.expand_and_classify(pot)
        (out.dir / "classifier.csv").write_text(terms.classifier_csv(found))
        out.add(out.dir / "classifier.csv")
        counts = {c.value: 0 for c in terms.TermClass}
        for _, c in found:
            counts[c.value] += 1
        rng = np.random.default_rng(sc.seed)
        pts = rng.uniform(-2, 2, size=(4, 1000))
        summary["classifier_counts"] = counts
        summary["resummation_error"] = float(np.abs(terms.resum(found, *pts) - pot.classical_form(*pts)).max())
    if p["evolve"]:
        s1 = _grid_state(g1, p["initial"])
        s2 = _grid_state(g2, p["initial_q"])
        state = H.product_state(s1, s2)
        dt, T, stride = sc.integrator["dt"], sc.integrator["T"], sc.integrator["sample_stride"]
        final, series = H.evolve_hybrid(state, spec, T, dt, stride)
        out.csv("series.csv", H.HybridSeries.COLUMNS, _series_rows(series))
        if sc.output["snapshots"]:
            out.add(write_hybrid_snapshot(out.dir / "initial.bin", state, spec.lam, spec.mass, spec.mass_q))
            out.add(write_hybrid_snapshot(out.dir / "final.bin", final, spec.lam, spec.mass, spec.mass_q))
        arr = series.as_array()
        summary.update({"final_trace": complex(final.trace()), "final_purity": final.purity(),
                        "hermiticity_residual": final.hermiticity_residual(),
                        "purity_q_range": [float(arr[:, 8].min()), float(arr[:, 8].max())],
                        "min_reduced_eigenvalue_q": float(arr[:, 10].min())})
        if "factorization" in analyses:
            a, _ = G.evolve(s1, EvolutionMode.CLASSICAL, spec.V, T, dt, 10**9, min_eig=False, check=False)
            b, _ = G.evolve(s2, EvolutionMode.QUANTUM, spec.v, T, dt, 10**9, min_eig=False, check=False)
            summary["factorization_deviation"] = float(np.abs(final.values - H.product_state(a, b).values).max())
        if "strang_convergence" in analyses:
            def make(h):
                return H.HybridPropagator(g1, g2, spec, h).step_values
            e1, e2, ratio = _strang_errors(make, state.values, T, dt)
            summary["strang"] = {"error_dt": e1, "error_dt_half": e2, "ratio": ratio}
    return summary


_RUNNERS = {"finite_2x2": _run_finite, "gl_params": _run_gl, "map_analysis": _run_maps,
            "grid_1d": _run_grid, "hybrid": _run_hybrid}


def run(scenario: Scenario, out_dir=None, deterministic: bool = True) -> dict:
    """Execute ``scenario``, write its CSVs and ``manifest.json`` and return the manifest."""
    directory = Path(out_dir or scenario.output.get("directory") or Path("runs") / scenario.name)
    out = _Outputs(directory)
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("always", G.AliasingWarning)
        summary = _RUNNERS[scenario.kind](scenario, out)
    elapsed = time.perf_counter() - start
    if elapsed > scenario.budget_seconds:
        print(f"warning: {scenario.name} took {elapsed:.1f} s, over its {scenario.budget_seconds} s budget",
              file=sys.stderr)
    manifest = {"scenario": scenario.name, "kind": scenario.kind, "scenario_digest": scenario.digest,
                "engine_version": __version__, "deterministic": deterministic,
                "wall_time": None if deterministic else elapsed, "summary": summary, "files": out.listing()}
    (directory / "manifest.json").write_text(dump_json(manifest))
    return manifest


ENGINE_ERRORS = (G.EngineAbort, G.StabilityError, PropagationError, maps.NotCompletelyPositive)
