"""Experiment layer: deviation metrics, scenario runs and mass-ratio tuning.

A scenario builds the physical parameters from design quantities (deputy
count, frequency pair, rigidity, tether deflection angle kappa), starts
the formation on its theoretical curves and propagates the full
nonlinear model.  Deviations are measured against the ideal commensurate
design frequencies omega_x = p w0/sqrt(q^2-p^2), omega_y = q w0/sqrt(q^2-p^2):
delta_C is the hub's planar offset over the amplitude, delta_D the mean
deputy distance from the theoretical curves over the amplitude, and the
run counts as stable while delta_D stays below half the minimum
theoretical separation.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from .core import GEO_MEAN_MOTION, SystemParams, vertical_equilibrium
from .errors import OptimizationDivergedError, SpecMismatchError
from .formation import (
    FormationKind,
    FormationSpec,
    mass_ratio_for,
    min_separation,
    synthesize_initial_state,
)
from .simulate import Trajectory, integrate

__all__ = [
    "ScenarioConfig",
    "DeviationReport",
    "ScenarioResult",
    "OptimizationResult",
    "default_phase_offset",
    "design_frequencies",
    "design_period",
    "deviation_metrics",
    "run_scenario",
    "optimize_mass_ratio",
    "write_timeseries_csv",
    "write_report_json",
    "report_from_json",
]

SCHEMA_VERSION = 1


def default_phase_offset(kind: FormationKind) -> Fraction:
    """Phase offset used when a scenario does not pin one explicitly.

    1/4 (Type I) and 1/2 (Type II) sit farthest from the integer and
    half-integer degenerate sets of the common q - p = 1 designs, keeping
    both the collision and the origin-clearance margins comfortable.
    """
    return Fraction(1, 4) if kind is FormationKind.TYPE_I else Fraction(1, 2)


def design_frequencies(p: int, q: int, mean_motion: float) -> tuple[float, float]:
    """Ideal commensurate in-plane/out-of-plane rates (omega_x, omega_y)."""
    root = math.sqrt(q * q - p * p)
    return p * mean_motion / root, q * mean_motion / root


def design_period(p: int, q: int, mean_motion: float) -> float:
    """Common period of the ideal oscillations, sqrt(q^2-p^2) orbital periods."""
    return math.sqrt(q * q - p * p) * 2.0 * math.pi / mean_motion


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one simulation experiment.

    ``kappa_deg`` is the tether deflection amplitude in degrees, giving
    equal planar amplitudes a = kappa_rad * l0; ``rigidity`` is the
    dimensionless k/(3 w0^2 m_D); ``mass_ratio_offset`` is subtracted
    from the nominal deputy-to-main mass ratio with the deputy mass held
    fixed.  Phases default to the ``default_phase_offset`` convention.
    """

    kind: FormationKind
    p: int
    q: int
    n_deputies: int
    kappa_deg: float
    rigidity: float = 1000.0
    duration_orbits: float = 10.0
    mass_ratio_offset: float = 0.0
    phase_x_deg: Optional[float] = None
    phase_y_deg: float = 0.0
    m_deputy_kg: float = 10.0
    slack_length_m: float = 1.0e4
    mean_motion_rad_s: float = GEO_MEAN_MOTION
    damping_ratio: float = 0.0
    rtol: float = 1e-10
    output_stride_s: Optional[float] = None
    min_sep_samples: int = 8192

    def __post_init__(self):
        if self.phase_x_deg is None:
            phi0 = default_phase_offset(self.kind)
            object.__setattr__(self, "phase_x_deg", 180.0 * float(phi0) / self.q)
        if not 0.0 < self.kappa_deg <= 6.0:
            raise ValueError(
                f"kappa_deg must lie in (0, 6] for the linear regime, got {self.kappa_deg}"
            )
        if self.duration_orbits <= 0.0:
            raise ValueError("duration_orbits must be positive")
        if self.rigidity <= 0.0:
            raise ValueError("rigidity must be positive")

    @property
    def amplitude(self) -> float:
        return math.radians(self.kappa_deg) * self.slack_length_m

    @property
    def orbit_period(self) -> float:
        return 2.0 * math.pi / self.mean_motion_rad_s

    def params(self) -> SystemParams:
        ratio = float(mass_ratio_for(self.p, self.q)) - self.mass_ratio_offset
        if ratio <= 0.0:
            raise ValueError(f"adjusted mass ratio {ratio} must stay positive")
        return SystemParams.from_design(
            n_deputies=self.n_deputies,
            mass_ratio=ratio,
            rigidity=self.rigidity,
            m_deputy=self.m_deputy_kg,
            slack_length=self.slack_length_m,
            mean_motion=self.mean_motion_rad_s,
            damping_ratio=self.damping_ratio,
        )

    def formation_spec(self) -> FormationSpec:
        return FormationSpec(
            kind=self.kind,
            p=self.p,
            q=self.q,
            n_deputies=self.n_deputies,
            amp_x=self.amplitude,
            amp_y=self.amplitude,
            phase_x=math.radians(self.phase_x_deg),
            phase_y=math.radians(self.phase_y_deg),
        )

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "formation": {
                "kind": self.kind.value,
                "p": self.p,
                "q": self.q,
                "n_deputies": self.n_deputies,
                "phase_x_deg": self.phase_x_deg,
                "phase_y_deg": self.phase_y_deg,
            },
            "system": {
                "mean_motion_rad_s": self.mean_motion_rad_s,
                "slack_length_m": self.slack_length_m,
                "m_deputy_kg": self.m_deputy_kg,
                "rigidity": self.rigidity,
                "damping_ratio": self.damping_ratio,
            },
            "scenario": {
                "kappa_deg": self.kappa_deg,
                "duration_orbits": self.duration_orbits,
                "mass_ratio_offset": self.mass_ratio_offset,
                "rtol": self.rtol,
                "output_stride_s": self.output_stride_s,
                "min_sep_samples": self.min_sep_samples,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        form = d.get("formation", {})
        system = d.get("system", {})
        scen = d.get("scenario", {})
        return cls(
            kind=FormationKind(form["kind"]),
            p=int(form["p"]),
            q=int(form["q"]),
            n_deputies=int(form["n_deputies"]),
            kappa_deg=float(scen.get("kappa_deg", 1.0)),
            rigidity=float(system.get("rigidity", 1000.0)),
            duration_orbits=float(scen.get("duration_orbits", 10.0)),
            mass_ratio_offset=float(scen.get("mass_ratio_offset", 0.0)),
            phase_x_deg=(None if form.get("phase_x_deg") is None else float(form["phase_x_deg"])),
            phase_y_deg=float(form.get("phase_y_deg", 0.0)),
            m_deputy_kg=float(system.get("m_deputy_kg", 10.0)),
            slack_length_m=float(system.get("slack_length_m", 1.0e4)),
            mean_motion_rad_s=float(system.get("mean_motion_rad_s", GEO_MEAN_MOTION)),
            damping_ratio=float(system.get("damping_ratio", 0.0)),
            rtol=float(scen.get("rtol", 1e-10)),
            output_stride_s=(
                None if scen.get("output_stride_s") is None else float(scen["output_stride_s"])
            ),
            min_sep_samples=int(scen.get("min_sep_samples", 8192)),
        )


@dataclass(frozen=True)
class DeviationReport:
    """Deviation series, the separation floor and the stability horizon."""

    times: np.ndarray
    delta_c: np.ndarray
    delta_d: np.ndarray
    delta_min: float
    stability_horizon_s: Optional[float]  # None means the whole run stayed stable
    max_delta_d: float

    @property
    def max_delta_c(self) -> float:
        return float(np.max(self.delta_c))


@dataclass(frozen=True)
class ScenarioResult:
    config: ScenarioConfig
    params: SystemParams
    spec: FormationSpec
    trajectory: Trajectory
    report: DeviationReport


@dataclass(frozen=True)
class OptimizationResult:
    offset: float
    max_delta_d: float
    baseline_max_delta_d: float
    evaluations: int


def _theoretical_xy(
    spec: FormationSpec, times: np.ndarray, omega_x: float, omega_y: float
) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(1, spec.n_deputies + 1)[None, :]
    t = np.asarray(times, dtype=float)[:, None]
    if spec.kind is FormationKind.TYPE_I:
        ax = omega_x * t + 2.0 * np.pi * spec.p * idx / spec.n_deputies + spec.phase_x
        ay = omega_y * t + 2.0 * np.pi * spec.q * idx / spec.n_deputies + spec.phase_y
    else:
        ax = omega_x * t + 2.0 * np.pi * idx / spec.n_deputies + spec.phase_x
        ay = omega_y * t + 2.0 * np.pi * idx / spec.n_deputies + spec.phase_y
    return spec.amp_x * np.sin(ax), spec.amp_y * np.sin(ay)


def deviation_metrics(
    traj: Trajectory,
    spec: FormationSpec,
    amplitude: float,
    frequencies: Optional[tuple[float, float]] = None,
    min_sep_samples: int = 8192,
) -> DeviationReport:
    """Amplitude-normalized deviations of the run from the theoretical motion.

    delta_C(t) is the hub's planar distance from the vertical; delta_D(t)
    the mean planar distance of the deputies from their theoretical
    positions, both over ``amplitude``.  Theoretical curves run at the
    ideal design frequencies unless ``frequencies`` overrides them (the
    phases are anchored at t = 0).  The stability horizon is the first
    output time with delta_D >= delta_min/2, None when there is none.
    """
    if traj.n_deputies != spec.n_deputies:
        raise SpecMismatchError(
            f"trajectory has {traj.n_deputies} deputies, spec {spec.n_deputies}"
        )
    if frequencies is None:
        frequencies = design_frequencies(spec.p, spec.q, traj.params.mean_motion)
    omega_x, omega_y = frequencies
    x_th, y_th = _theoretical_xy(spec, traj.times, omega_x, omega_y)
    dep = traj.deputy_positions
    delta_d = np.mean(
        np.hypot(dep[:, :, 0] - x_th, dep[:, :, 1] - y_th), axis=1
    ) / amplitude
    main = traj.main_positions
    delta_c = np.hypot(main[:, 0], main[:, 1]) / amplitude
    dmin = min_separation(spec, amplitude, samples=min_sep_samples)
    crossed = np.nonzero(delta_d >= dmin / 2.0)[0]
    horizon = float(traj.times[crossed[0]]) if crossed.size else None
    return DeviationReport(
        times=traj.times,
        delta_c=delta_c,
        delta_d=delta_d,
        delta_min=dmin,
        stability_horizon_s=horizon,
        max_delta_d=float(np.max(delta_d)),
    )


def run_scenario(
    cfg: ScenarioConfig,
    out_dir: Optional[str | Path] = None,
    full_state: bool = False,
) -> ScenarioResult:
    """Build, propagate and measure one scenario; optionally persist files.

    When ``out_dir`` is given, writes ``timeseries.csv`` and
    ``report.json`` there (creating the directory).
    """
    params = cfg.params()
    spec = cfg.formation_spec()
    eq = vertical_equilibrium(params)
    state0 = synthesize_initial_state(params, spec, eq)
    t_end = cfg.duration_orbits * cfg.orbit_period
    stride = cfg.output_stride_s
    if stride is None:
        stride = t_end / 2000.0
    traj = integrate(params, state0, t_end, rtol=cfg.rtol, output_stride=stride)
    report = deviation_metrics(
        traj, spec, cfg.amplitude, min_sep_samples=cfg.min_sep_samples
    )
    result = ScenarioResult(cfg, params, spec, traj, report)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_timeseries_csv(out / "timeseries.csv", result, full_state=full_state)
        write_report_json(out / "report.json", result)
    return result


def _objective(cfg: ScenarioConfig, offset: float) -> float:
    return run_scenario(replace(cfg, mass_ratio_offset=offset)).report.max_delta_d


_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def optimize_mass_ratio(
    cfg: ScenarioConfig,
    interval: tuple[float, float] = (0.0, 0.4),
    grid_points: int = 21,
    xtol: float = 1e-4,
    jobs: int = 1,
) -> OptimizationResult:
    """Minimize the worst deputy deviation over the mass-ratio offset.

    A ``grid_points``-point scan of ``interval`` (parallelizable across
    ``jobs`` workers) brackets the minimum, then golden-section search
    narrows it below ``xtol``.  Raises ``OptimizationDivergedError`` when
    the best grid value sits on the interval boundary, i.e. no interior
    minimum is bracketed.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise ValueError(f"empty search interval {interval}")
    if not lo <= 0.0 <= hi:
        raise ValueError(f"interval {interval} must contain the nominal offset 0")
    if grid_points < 3:
        raise ValueError("grid needs at least 3 points")
    grid = np.linspace(lo, hi, grid_points)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(_objective, [cfg] * grid_points, grid))
    else:
        values = [_objective(cfg, g) for g in grid]
    evaluations = grid_points
    baseline = float(values[int(np.argmin(np.abs(grid)))])
    if abs(grid[int(np.argmin(np.abs(grid)))]) > 1e-12:
        baseline = _objective(cfg, 0.0)
        evaluations += 1
    best = int(np.argmin(values))
    if best in (0, grid_points - 1):
        raise OptimizationDivergedError(
            f"no interior minimum: best grid offset {grid[best]} on the boundary"
        )
    a, b = float(grid[best - 1]), float(grid[best + 1])
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc = _objective(cfg, c)
    fd = _objective(cfg, d)
    evaluations += 2
    while b - a > xtol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = _objective(cfg, c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = _objective(cfg, d)
        evaluations += 1
    offset = 0.5 * (a + b)
    achieved = _objective(cfg, offset)
    evaluations += 1
    return OptimizationResult(
        offset=offset,
        max_delta_d=achieved,
        baseline_max_delta_d=baseline,
        evaluations=evaluations,
    )


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_timeseries_csv(path: str | Path, result: ScenarioResult, full_state: bool = False) -> None:
    """Deviation time series as CSV; 17 significant digits throughout.

    Columns: t_seconds, tau (time over the design formation period),
    delta_C, delta_D, plus per-body x/y/z columns with ``full_state``.
    """
    cfg = result.config
    period = design_period(cfg.p, cfg.q, cfg.mean_motion_rad_s)
    report = result.report
    header = ["t_seconds", "tau", "delta_C", "delta_D"]
    n = result.params.n_deputies
    if full_state:
        header += ["x_C", "y_C", "z_C"]
        for i in range(1, n + 1):
            header += [f"x_{i}", f"y_{i}", f"z_{i}"]
    lines = [",".join(header)]
    for row, t in enumerate(report.times):
        cells = [
            _fmt(t),
            _fmt(t / period),
            _fmt(report.delta_c[row]),
            _fmt(report.delta_d[row]),
        ]
        if full_state:
            cells += [_fmt(v) for v in result.trajectory.main_positions[row]]
            for i in range(n):
                cells += [_fmt(v) for v in result.trajectory.deputy_positions[row, i]]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def _report_payload(result: ScenarioResult) -> dict:
    report = result.report
    stats = result.trajectory.stats
    return {
        "config": result.config.to_dict(),
        "results": {
            "delta_min": report.delta_min,
            "stability_horizon_s": (
                "entire-run" if report.stability_horizon_s is None else report.stability_horizon_s
            ),
            "max_delta_d": report.max_delta_d,
            "max_delta_c": report.max_delta_c,
            "mass_ratio_offset": result.config.mass_ratio_offset,
            "integrator": {
                "steps": stats.steps,
                "rejected": stats.rejected,
                "max_error_estimate": stats.max_error_estimate,
            },
        },
    }


def write_report_json(path: str | Path, result: ScenarioResult) -> None:
    """Scenario echo plus summary results as deterministic JSON."""
    Path(path).write_text(
        json.dumps(_report_payload(result), indent=2, sort_keys=True) + "\n"
    )


def report_from_json(text: str) -> tuple[ScenarioConfig, dict]:
    """Parse a report back into the scenario config and its results dict."""
    payload = json.loads(text)
    return ScenarioConfig.from_dict(payload["config"]), payload["results"]
