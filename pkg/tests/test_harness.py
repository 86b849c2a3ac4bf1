import json
import math
from fractions import Fraction

import numpy as np
import pytest

from hubspoke import (
    FormationKind,
    ScenarioConfig,
    deviation_metrics,
    optimize_mass_ratio,
    run_scenario,
)
from hubspoke.errors import OptimizationDivergedError, SpecMismatchError
from hubspoke.formation import FormationSpec
from hubspoke.harness import (
    default_phase_offset,
    design_frequencies,
    design_period,
    report_from_json,
    write_report_json,
    write_timeseries_csv,
    _theoretical_xy,
)
from hubspoke.simulate import IntegratorStats, Trajectory

I, II = FormationKind.TYPE_I, FormationKind.TYPE_II


def tiny_config(**kw):
    base = dict(kind=I, p=1, q=2, n_deputies=3, kappa_deg=1.0,
                duration_orbits=0.2, rtol=1e-8, min_sep_samples=2048)
    base.update(kw)
    return ScenarioConfig(**base)


def synthetic_trajectory(cfg):
    """Trajectory lying exactly on the theoretical curves (hub pinned)."""
    params = cfg.params()
    spec = cfg.formation_spec()
    times = np.linspace(0.0, cfg.duration_orbits * cfg.orbit_period, 101)
    wx, wy = design_frequencies(cfg.p, cfg.q, cfg.mean_motion_rad_s)
    x, y = _theoretical_xy(spec, times, wx, wy)
    n = cfg.n_deputies
    data = np.zeros((times.size, 6 * (n + 1)))
    body = data[:, 6:].reshape(times.size, n, 6)
    body[:, :, 0] = x
    body[:, :, 1] = y
    return Trajectory(params=params, times=times, data=data,
                      stats=IntegratorStats(0, 0, 0.0)), spec


class TestScenarioConfig:
    def test_default_phases(self):
        cfg = tiny_config()
        assert cfg.phase_x_deg == pytest.approx(180.0 * 0.25 / 2)
        cfg2 = tiny_config(kind=II, n_deputies=2)
        assert cfg2.phase_x_deg == pytest.approx(180.0 * 0.5 / 2)
        assert default_phase_offset(II) == Fraction(1, 2)

    def test_amplitude_relation(self):
        cfg = tiny_config(kappa_deg=2.0)
        assert cfg.amplitude == pytest.approx(math.radians(2.0) * 1e4)

    def test_params_apply_mass_ratio_offset(self):
        cfg = tiny_config(mass_ratio_offset=0.1)
        p = cfg.params()
        assert 3 * p.m_deputy / p.m_main == pytest.approx(7.9, rel=1e-12)
        assert p.m_deputy == cfg.m_deputy_kg

    def test_kappa_bounds(self):
        with pytest.raises(ValueError):
            tiny_config(kappa_deg=6.5)
        with pytest.raises(ValueError):
            tiny_config(kappa_deg=0.0)

    def test_round_trip(self):
        cfg = tiny_config(kappa_deg=3.0, damping_ratio=0.1, output_stride_s=120.0)
        assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg


class TestDeviationMetrics:
    def test_self_comparison_is_zero(self):
        cfg = tiny_config()
        traj, spec = synthetic_trajectory(cfg)
        report = deviation_metrics(traj, spec, cfg.amplitude,
                                   min_sep_samples=cfg.min_sep_samples)
        assert np.max(report.delta_d) < 1e-12
        assert np.max(report.delta_c) < 1e-12
        assert report.stability_horizon_s is None
        assert report.delta_min == pytest.approx(0.5998, abs=1e-3)

    def test_spec_mismatch(self):
        cfg = tiny_config()
        traj, spec = synthetic_trajectory(cfg)
        wrong = FormationSpec(I, 1, 2, 4, spec.amp_x, spec.amp_y)
        with pytest.raises(SpecMismatchError):
            deviation_metrics(traj, wrong, cfg.amplitude)

    def test_horizon_detection(self):
        cfg = tiny_config()
        traj, spec = synthetic_trajectory(cfg)
        base = deviation_metrics(traj, spec, cfg.amplitude,
                                 min_sep_samples=cfg.min_sep_samples)
        # Shift the deputies off the curves from mid-run onward.
        data = traj.data.copy()
        mid = len(traj) // 2
        data[mid:, 6] += cfg.amplitude  # x of deputy 1
        bumped = Trajectory(params=traj.params, times=traj.times, data=data,
                            stats=traj.stats)
        report = deviation_metrics(bumped, spec, cfg.amplitude,
                                   min_sep_samples=cfg.min_sep_samples)
        assert report.stability_horizon_s == pytest.approx(traj.times[mid])
        assert report.max_delta_d > base.delta_min / 2.0


class TestRunScenario:
    def test_persists_files(self, tmp_path):
        cfg = tiny_config()
        result = run_scenario(cfg, out_dir=tmp_path, full_state=True)
        csv_path = tmp_path / "timeseries.csv"
        json_path = tmp_path / "report.json"
        assert csv_path.exists() and json_path.exists()
        header = csv_path.read_text().splitlines()[0].split(",")
        assert header[:4] == ["t_seconds", "tau", "delta_C", "delta_D"]
        assert "x_C" in header and "z_3" in header
        payload = json.loads(json_path.read_text())
        assert payload["results"]["delta_min"] == pytest.approx(result.report.delta_min)

    def test_report_sane(self):
        result = run_scenario(tiny_config())
        report = result.report
        assert np.all(report.delta_c >= 0.0)
        assert np.all(report.delta_d >= 0.0)
        assert report.delta_min > 0.0
        assert report.max_delta_d == pytest.approx(np.max(report.delta_d))
        # Short run at 1 degree: nowhere near the stability boundary.
        assert report.stability_horizon_s is None

    def test_csv_deterministic(self, tmp_path):
        cfg = tiny_config()
        result = run_scenario(cfg)
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        write_timeseries_csv(a, result)
        write_timeseries_csv(b, result)
        assert a.read_bytes() == b.read_bytes()

    def test_tau_column_uses_design_period(self, tmp_path):
        cfg = tiny_config()
        result = run_scenario(cfg, out_dir=tmp_path)
        rows = (tmp_path / "timeseries.csv").read_text().splitlines()
        t, tau = (float(v) for v in rows[-1].split(",")[:2])
        assert tau == pytest.approx(t / design_period(1, 2, cfg.mean_motion_rad_s), rel=1e-12)

    def test_report_round_trip(self, tmp_path):
        cfg = tiny_config()
        result = run_scenario(cfg)
        path = tmp_path / "report.json"
        write_report_json(path, result)
        cfg2, results = report_from_json(path.read_text())
        assert cfg2 == cfg
        assert results["max_delta_d"] == pytest.approx(result.report.max_delta_d)
        assert results["stability_horizon_s"] == "entire-run"
        assert results["integrator"]["steps"] == result.trajectory.stats.steps


class TestOptimizeMassRatio:
    CFG = dict(kind=I, p=1, q=2, n_deputies=5, kappa_deg=3.0,
               duration_orbits=2.0, rtol=1e-9, min_sep_samples=2048)

    def test_finds_interior_minimum(self):
        cfg = ScenarioConfig(**self.CFG)
        res = optimize_mass_ratio(cfg, interval=(0.0, 0.2), grid_points=9, xtol=2e-3)
        assert 0.0 < res.offset < 0.2
        assert res.max_delta_d <= res.baseline_max_delta_d
        assert res.evaluations >= 9

    def test_deterministic(self):
        cfg = ScenarioConfig(**self.CFG)
        a = optimize_mass_ratio(cfg, interval=(0.0, 0.2), grid_points=7, xtol=5e-3)
        b = optimize_mass_ratio(cfg, interval=(0.0, 0.2), grid_points=7, xtol=5e-3)
        assert a == b

    def test_parallel_grid_matches_serial(self):
        cfg = ScenarioConfig(**dict(self.CFG, duration_orbits=1.0))
        serial = optimize_mass_ratio(cfg, interval=(0.0, 0.2), grid_points=5, xtol=5e-3)
        parallel = optimize_mass_ratio(cfg, interval=(0.0, 0.2), grid_points=5,
                                       xtol=5e-3, jobs=2)
        assert serial == parallel

    def test_boundary_minimum_raises(self):
        cfg = ScenarioConfig(**self.CFG)
        # The objective decreases into the right-hand side of this stunted
        # interval, so the best grid point is the boundary.
        with pytest.raises(OptimizationDivergedError):
            optimize_mass_ratio(cfg, interval=(0.0, 0.02), grid_points=3, xtol=5e-3)

    def test_interval_must_contain_zero(self):
        cfg = ScenarioConfig(**self.CFG)
        with pytest.raises(ValueError):
            optimize_mass_ratio(cfg, interval=(0.05, 0.2))
