"""Figure-level pipelines and their on-disk output.

Every scenario turns a :class:`ScenarioConfig` into a list of :class:`RunOutput`
tables.  Writing is atomic per file and each table gets a manifest carrying
the full config, so a manifest alone re-creates its run.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np

from . import __version__
from . import classical as cl
from . import pide, specfun, tide
from .model import DEFAULT_SCALES, Branch, ConstantForce, Coulomb1D, Free, Harmonic

SCENARIOS = (
    "classical-demo",
    "pide-fig2",
    "ho-fig3",
    "superposition-fig5",
    "hydrogen-fig6",
    "specfun-selftest",
)
SWEEPS = ("pide-fig2", "ho-fig3", "hydrogen-fig6")

DEFAULT_K0 = {
    "pide-fig2": (0.5, 1.0, 2.0),
    "ho-fig3": (0.0, 1.0, 2.0, 5.0),
    "hydrogen-fig6": (-0.02, -0.18, -0.5, -1.28, 0.02, 0.18, 0.5, 1.28),
}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    outdir: str = "out"
    format: str = "csv"
    window: tuple[float, float] | None = None
    grid_size: int | None = None
    k0_list: tuple[float, ...] | None = None
    branch: str = "minus"
    probe_q: float = 0.5
    q_max: float = 130.0
    forward_factorization: str = "unit-plus"

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be 'csv' or 'json'")
        if self.grid_size is not None and int(self.grid_size) < 100:
            raise ValueError("grid_size must be >= 100")
        if self.window is not None:
            w = tuple(float(v) for v in self.window)
            if len(w) != 2 or not w[0] < w[1]:
                raise ValueError("window must be an increasing pair")
            object.__setattr__(self, "window", w)
        if self.k0_list is not None:
            ks = tuple(float(k) for k in self.k0_list)
            if not ks:
                raise ValueError("k0_list must be non-empty")
            object.__setattr__(self, "k0_list", ks)
        Branch.parse(self.branch)
        if self.forward_factorization not in ("unit-plus", "symmetric"):
            raise ValueError("forward_factorization must be 'unit-plus' or 'symmetric'")
        if not self.q_max > 0:
            raise ValueError("q_max must be positive")

    def k0_values(self) -> tuple[float, ...]:
        if self.k0_list is not None:
            return self.k0_list
        return DEFAULT_K0.get(self.scenario, ())

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["window"] = list(self.window) if self.window else None
        d["k0_list"] = list(self.k0_list) if self.k0_list else None
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioConfig":
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if data.get("window") is not None:
            data["window"] = tuple(data["window"])
        if data.get("k0_list") is not None:
            data["k0_list"] = tuple(data["k0_list"])
        return cls(**data)


@dataclass
class RunOutput:
    run_id: str
    header: list[str]
    rows: list[list[Any]]
    info: dict[str, Any] = field(default_factory=dict)
    diverged: bool = False


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    runs: list[RunOutput]
    summary: dict[str, Any] = field(default_factory=dict)

    @property
    def diverged(self) -> bool:
        return any(r.diverged for r in self.runs)


# ---------------------------------------------------------------------------
# output


def _fmt(v: Any) -> str:
    if isinstance(v, str):
        return v
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def _atomic_write(path: str, text: str) -> None:
    folder = os.path.dirname(path) or "."
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def table_text(header: list[str], rows: list[list[Any]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def manifest_for(result: ScenarioResult, run: RunOutput) -> dict[str, Any]:
    return _jsonable(
        {
            "package_version": __version__,
            "scenario": result.config.scenario,
            "run_id": run.run_id,
            "config": result.config.to_dict(),
            "columns": run.header,
            "rows": len(run.rows),
            "status": "diverged-at-q" if run.diverged else "converged",
            **run.info,
        }
    )


def write_table(folder: str, run_id: str, header: list[str], rows: list[list[Any]], manifest: dict, fmt: str = "csv") -> str:
    """Write one table and its manifest; returns the data path."""
    base = os.path.join(folder, run_id)
    if fmt == "csv":
        data_path = base + ".csv"
        _atomic_write(data_path, table_text(header, rows))
    elif fmt == "json":
        data_path = base + ".json"
        payload = {"columns": header, "rows": _jsonable(rows)}
        _atomic_write(data_path, json.dumps(payload, sort_keys=True) + "\n")
    else:
        raise ValueError("format must be 'csv' or 'json'")
    _atomic_write(base + ".manifest.json", json.dumps(_jsonable(manifest), sort_keys=True, indent=2) + "\n")
    return data_path


def write_result(result: ScenarioResult) -> list[str]:
    """Write every run as ``<outdir>/<scenario>/<run-id>.{csv,json}`` plus its manifest."""
    cfg = result.config
    folder = os.path.join(cfg.outdir, cfg.scenario)
    return [write_table(folder, r.run_id, r.header, r.rows, manifest_for(result, r), cfg.format) for r in result.runs]


# ---------------------------------------------------------------------------
# scenarios


def _k0_tag(k: float) -> str:
    return f"k0_{k:+g}".replace("+", "p").replace("-", "m")


def run_classical_demo(config: ScenarioConfig, jobs: int = 1) -> ScenarioResult:
    setups = [
        ("free", cl.ClassicalSetup(Free(), h0=0.5, branch=config.branch), 0.0, 2.0),
        ("constant-force", cl.ClassicalSetup(ConstantForce(-1.0), h0=0.5, branch=config.branch), 0.0, 0.3),
        ("ho-quarter-period", cl.ClassicalSetup(Harmonic(), h0=0.5, branch=config.branch), 0.0, 1.0),
        ("gravity-to-turning-point", cl.ClassicalSetup(ConstantForce(-1.0), h0=0.5, branch=config.branch), 0.0, 0.5),
    ]
    rows = []
    for name, setup, a, b in setups:
        quad = cl.time_of_flight(setup, a, b)
        ana = complex(cl.analytic_time(setup, b) - cl.analytic_time(setup, a))
        rows.append([name, a, b, quad.real, quad.imag, ana.real, ana.imag, abs(quad - ana)])
    flight = RunOutput(
        "time-of-flight",
        ["case", "q_start", "q_end", "re_quadrature", "im_quadrature", "re_analytic", "im_analytic", "abs_gap"],
        rows,
        {"quarter_period_expected": math.pi / 2},
    )

    tp_rows = []
    for name, setup, rng, expected in [
        ("gravity", cl.ClassicalSetup(ConstantForce(-1.0), h0=0.5), (0.0, 2.0), [0.5]),
        ("harmonic", cl.ClassicalSetup(Harmonic(), h0=0.5), (-3.0, 3.0), [-1.0, 1.0]),
        ("free", cl.ClassicalSetup(Free(), h0=1.0), (-3.0, 3.0), []),
    ]:
        found = cl.turning_points(setup, rng)
        if not found:
            tp_rows.append([name, None, None])
        for r, e in zip(found, expected):
            tp_rows.append([name, r, e])
    turning = RunOutput("turning-points", ["case", "q_turning", "expected"], tp_rows)

    n = config.grid_size or 1001
    res_rows = []
    for name, setup, lo, hi in [
        ("free", cl.ClassicalSetup(Free(), h0=0.5), 0.0, 1.0),
        ("harmonic", cl.ClassicalSetup(Harmonic(), h0=0.5), -0.5, 0.5),
        ("constant-force", cl.ClassicalSetup(ConstantForce(-1.0), h0=0.5), 0.0, 0.4),
    ]:
        traj = cl.trajectory(setup, np.linspace(lo, hi, n))
        res = cl.newton_residual(traj)
        energy = cl.reconstructed_energy(traj)
        res_rows.append([name, n, float(np.max(res)), float(np.max(np.abs(energy - setup.h0)))])
    newton = RunOutput("newton-residual", ["case", "points", "max_residual", "max_energy_drift"], res_rows)
    return ScenarioResult(config, [flight, turning, newton])


def run_pide_fig2(config: ScenarioConfig, jobs: int = 1) -> ScenarioResult:
    lo, hi = config.window or (0.0, 100.0)
    if lo != 0.0:
        raise ValueError("the pide-fig2 time window must start at 0")
    t = np.linspace(lo, hi, config.grid_size or 10001)
    runs = []
    for k, abs2 in pide.fig2_series(config.k0_values(), t).items():
        x = k * t
        late = abs2[x >= 50.0]
        info = {
            "k0_over_hbar": k,
            "a0": [1.0, 0.0],
            "b0": [0.0, 0.0],
            "late_band": [float(late.min()), float(late.max())] if late.size else None,
        }
        runs.append(RunOutput(_k0_tag(k), ["t", "abs2_psi_plus"], [[a, b] for a, b in zip(t, abs2)], info))
    return ScenarioResult(config, runs)


def _ho_member(args) -> dict[str, Any]:
    k, window, n_points = args
    pot = Harmonic()
    win = window or tide.ho_window(k)
    sol = tide.solve_harmonic(pot, DEFAULT_SCALES, pide.constants_from_k0(k), win, n_points)
    out = {"k": k, "solution": sol}
    if not sol.diverged:
        nrm = sol.normalize()
        q = nrm.q_grid
        out["overlap_minus"] = abs(tide.overlap(nrm.chi_minus, tide.normalize(tide.ho_eigenstate(int(round(k)), q), q), q))
        out["overlap_plus"] = (
            abs(tide.overlap(nrm.chi_plus, tide.normalize(tide.ho_eigenstate(int(round(k)) - 1, q), q), q))
            if k >= 1 and np.any(nrm.chi_plus)
            else None
        )
        out["solution"] = nrm
    return out


def _map(fn: Callable, items: list, jobs: int) -> list:
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _solution_rows(sol: tide.TideSolution) -> list[list[float]]:
    p, m = sol.chi_plus, sol.chi_minus
    return [
        [q, a.real, a.imag, abs(a) ** 2, b.real, b.imag, abs(b) ** 2]
        for q, a, b in zip(sol.q_grid, p, m)
    ]


def run_ho_ladder(config: ScenarioConfig, jobs: int = 1) -> ScenarioResult:
    """Harmonic-oscillator ladder; ``K0`` values are in units of ``hbar omega``."""
    n = config.grid_size or 2001
    if n % 2 == 0:
        raise ValueError("ho-fig3 needs an odd grid_size so q = 0 is a grid point")
    members = _map(_ho_member, [(k, config.window, n) for k in config.k0_values()], jobs)
    runs, table = [], []
    for mem in members:
        sol = mem["solution"]
        info = sol.manifest()
        runs.append(RunOutput(_k0_tag(mem["k"]), list(tide.CSV_HEADER), _solution_rows(sol), info, sol.diverged))
        table.append([mem["k"], mem.get("overlap_minus"), mem.get("overlap_plus"), "diverged" if sol.diverged else "converged", sol.diverged_at])
    runs.append(RunOutput("overlaps", ["k0", "overlap_minus_phi_k", "overlap_plus_phi_k_minus_1", "status", "diverged_at"], table))
    return ScenarioResult(config, runs)


def superposition_traces(probe_q: float = 0.5, omega: float = 1.0, samples_per_period: int = 1000, periods: int = 3, scale: bool = True):
    """Usual-QM and Mittag-Leffler traces at a fixed position, each max-scaled unless ``scale`` is off."""
    dt = 2.0 * math.pi / (omega * samples_per_period)
    t = dt * np.arange(samples_per_period * periods)
    phi0 = float(tide.ho_eigenstate(0, probe_q, omega=omega))
    phi1 = float(tide.ho_eigenstate(1, probe_q, omega=omega))
    usual = np.abs(phi0 * np.exp(-0.5j * omega * t) + phi1 * np.exp(-1.5j * omega * t)) ** 2
    e1 = specfun.mittag_leffler(0.5, np.sqrt(-1j * omega * t))
    e2 = specfun.mittag_leffler(0.5, np.sqrt(-2j * omega * t))
    ml = np.abs(phi0 * e1 + phi1 * e2) ** 2
    if not scale:
        return t, usual, ml
    return t, usual / np.max(np.abs(usual)), ml / np.max(np.abs(ml))


def autocorrelation(x: np.ndarray, lag: int) -> float:
    """Pearson correlation of ``x[:-lag]`` with ``x[lag:]``; exactly 1 at a true period."""
    if lag == 0:
        return 1.0
    a, b = x[:-lag], x[lag:]
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(np.dot(a, a) * np.dot(b, b)))
    return float(np.dot(a, b) / den) if den > 0 else 1.0


def estimate_period(x: np.ndarray, dt: float, guess: int) -> float:
    """Autocorrelation peak near ``guess`` samples, refined by a parabola."""
    lo, hi = int(guess * 0.8), int(guess * 1.2)
    vals = np.array([autocorrelation(x, k) for k in range(lo, hi + 1)])
    i = int(np.argmax(vals))
    if 0 < i < len(vals) - 1:
        y0, y1, y2 = vals[i - 1], vals[i], vals[i + 1]
        den = y0 - 2 * y1 + y2
        off = 0.5 * (y0 - y2) / den if den != 0 else 0.0
    else:
        off = 0.0
    return (lo + i + off) * dt


def run_superposition(config: ScenarioConfig, jobs: int = 1) -> ScenarioResult:
    spp = 1000
    t, usual, ml = superposition_traces(config.probe_q, samples_per_period=spp)
    dt = t[1] - t[0]
    period = estimate_period(usual, dt, spp)
    info = {
        "probe_q": config.probe_q,
        "omega": 1.0,
        "usual_period": period,
        "usual_period_error": abs(period - 2 * math.pi),
        "usual_acf_defect": 1.0 - autocorrelation(usual, spp),
        "ml_acf_defect": 1.0 - autocorrelation(ml, spp),
    }
    run = RunOutput(f"probe_q{config.probe_q:g}", ["t", "abs2_usual", "abs2_ml"], [list(r) for r in zip(t, usual, ml)], info)
    return ScenarioResult(config, [run], info)


def _hydrogen_member(args) -> dict[str, Any]:
    k, q_max, n_points, forward = args
    sol = tide.solve_hydrogen(Coulomb1D(), DEFAULT_SCALES, tide.hydrogen_constants(k, forward=forward), q_max, n_points)
    raw_ratio = None
    if not sol.diverged:
        q = sol.q_grid
        den = float(np.trapezoid(np.abs(sol.chi_minus) ** 2, q))
        raw_ratio = float(np.trapezoid(np.abs(sol.chi_plus) ** 2, q)) / den if den > 0 else None
    return {"k": k, "solution": sol.normalize() if not sol.diverged else sol, "raw_ratio": raw_ratio}


def run_hydrogen_sweep(config: ScenarioConfig, jobs: int = 1) -> ScenarioResult:
    n = config.grid_size or 20001
    q_max = config.q_max
    members = _map(_hydrogen_member, [(k, q_max, n, config.forward_factorization) for k in config.k0_values()], jobs)
    runs, table = [], []
    for mem in members:
        sol, k = mem["solution"], mem["k"]
        info = sol.manifest()
        info["plus_minus_norm_ratio"] = mem["raw_ratio"]
        runs.append(RunOutput(_k0_tag(k), list(tide.CSV_HEADER), _solution_rows(sol), info, sol.diverged))
        am = np.abs(sol.chi_minus) ** 2
        q = sol.q_grid
        i126 = int(np.argmin(np.abs(q + 126.0))) if q[0] <= -126.0 else None
        table.append([
            k,
            "diverged" if sol.diverged else "converged",
            float(q[np.argmax(am)]),
            float(am[i126] / am.max()) if i126 is not None else None,
            mem["raw_ratio"],
        ])
        if k == -1.28:
            exact = np.abs(tide.normalize(tide.hydrogen_eigenstate(1, "odd", q), q)) ** 2
            runs.append(RunOutput("exact_n1", ["q", "abs2_exact"], [[a, b] for a, b in zip(q, exact)], {"n": 1, "parity": "odd"}))
    runs.append(RunOutput("summary", ["k0", "status", "peak_q_minus", "minus_at_q126_over_peak", "plus_minus_norm_ratio"], table))
    return ScenarioResult(config, runs)


def run_specfun_selftest(config: ScenarioConfig, jobs: int = 1) -> ScenarioResult:
    from .selftest import run_checks

    reports = run_checks(groups=("specfun",))
    rows = [[r.name, r.passed, r.measured, r.tolerance] for r in reports]
    return ScenarioResult(config, [RunOutput("report", ["property", "passed", "measured", "tolerance"], rows)])


RUNNERS: dict[str, Callable[[ScenarioConfig, int], ScenarioResult]] = {
    "classical-demo": run_classical_demo,
    "pide-fig2": run_pide_fig2,
    "ho-fig3": run_ho_ladder,
    "superposition-fig5": run_superposition,
    "hydrogen-fig6": run_hydrogen_sweep,
    "specfun-selftest": run_specfun_selftest,
}


def run_scenario(config: ScenarioConfig, jobs: int = 1) -> ScenarioResult:
    return RUNNERS[config.scenario](config, jobs)
