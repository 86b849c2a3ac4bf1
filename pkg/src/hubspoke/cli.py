"""Command-line front end.

Subcommands: ``design`` (admissible-formation table), ``check``
(consolidated admissibility/stability verdict for one configuration),
``simulate``/``optimize`` (scenario runs and mass-ratio tuning with CSV
and JSON outputs) and ``trace`` (sampled theoretical curves for external
plotting).  Configurations are JSON files with unit-suffixed keys;
angles are degrees at this surface.  Exit codes: 0 success or all checks
passed, 1 check failure, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness, perturb, topology
from .core import stability_deputy, stability_rigid
from .errors import ConfigError, HubspokeError
from .formation import (
    FormationKind,
    FormationSpec,
    admissibility,
    deputy_position,
    enumerate_designs,
    mass_ratio_for,
)
from .harness import ScenarioConfig
from .lindyn import stability_verdict_com, stability_verdict_deputy

_CONFIG_SCHEMA = {
    "schema_version": None,
    "formation": {"kind", "p", "q", "n_deputies", "phase_x_deg", "phase_y_deg"},
    "system": {"mean_motion_rad_s", "slack_length_m", "m_deputy_kg", "rigidity", "damping_ratio"},
    "scenario": {
        "kappa_deg",
        "duration_orbits",
        "mass_ratio_offset",
        "rtol",
        "output_stride_s",
        "min_sep_samples",
    },
    "optimize": {"kappa_deg_list", "offset_min", "offset_max", "grid_points"},
    "check": {"require"},
}

_CHECK_CONDITIONS = ("balance", "collision", "center", "stability_rigid", "stability_deputy")


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config {path} is not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    _validate_keys(data, path)
    return data


def _validate_keys(data: dict, path: str) -> None:
    for section, value in data.items():
        if section not in _CONFIG_SCHEMA:
            raise ConfigError(f"{path}: unknown section {section!r}")
        allowed = _CONFIG_SCHEMA[section]
        if allowed is None:
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: section {section!r} must be an object")
        for key in value:
            if key not in allowed:
                raise ConfigError(f"{path}: unknown key {section}.{key}")


def _apply_overrides(data: dict, overrides: list[str]) -> None:
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        dotted, raw = item.split("=", 1)
        parts = dotted.split(".")
        if len(parts) != 2:
            raise ConfigError(f"override key {dotted!r} must be section.key")
        section, key = parts
        if section not in _CONFIG_SCHEMA or (
            _CONFIG_SCHEMA[section] is not None and key not in _CONFIG_SCHEMA[section]
        ):
            raise ConfigError(f"override targets unknown key {dotted!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        data.setdefault(section, {})[key] = value


def _scenario_from_config(data: dict) -> ScenarioConfig:
    form = data.get("formation")
    if not form:
        raise ConfigError("config needs a 'formation' section")
    for required in ("kind", "p", "q", "n_deputies"):
        if required not in form:
            raise ConfigError(f"config key formation.{required} is required")
    if form["kind"] not in (k.value for k in FormationKind):
        raise ConfigError(
            f"formation.kind must be one of {[k.value for k in FormationKind]}, got {form['kind']!r}"
        )
    try:
        return ScenarioConfig.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration value: {exc}") from exc


def _entanglement_label(kind: FormationKind, p: int, q: int, n: int) -> str:
    spec = FormationSpec(kind=kind, p=p, q=q, n_deputies=n, amp_x=1.0, amp_y=1.0)
    return topology.entanglement_verdict(spec).value


def _design_rows(p_max: int, q_max: int, n_max: int):
    rows = enumerate_designs(p_max, q_max, n_max)
    detailed = []
    for row in rows:
        per_n = [
            {
                "n": n,
                "entanglement": _entanglement_label(FormationKind.TYPE_I, row.p, row.q, n),
                "second_order_cancellation": perturb.cancellation_hypothesis(row.p, row.q, n),
            }
            for n in row.type1_admissible_n
        ]
        detailed.append((row, per_n))
    return detailed


def _design_text(detailed) -> str:
    lines = [
        f"{'p/q':6} {'mass ratio':>10}   {'Type I admissible N':<26} Type II",
        "-" * 78,
    ]
    for row, per_n in detailed:
        ns = ", ".join(str(d["n"]) for d in per_n[:6])
        if len(per_n) > 6:
            ns += ", ..."
        lines.append(
            f"{f'{row.p}/{row.q}':6} {str(row.mass_ratio):>10}   {ns:<26} {row.type2_note}"
        )
    return "\n".join(lines)


def _design_csv(detailed) -> str:
    lines = ["p,q,mass_ratio,n,entanglement,second_order_cancellation"]
    for row, per_n in detailed:
        for d in per_n:
            lines.append(
                f"{row.p},{row.q},{row.mass_ratio},{d['n']},{d['entanglement']},"
                f"{str(d['second_order_cancellation']).lower()}"
            )
    return "\n".join(lines)


def cmd_design(args) -> int:
    if args.max < 2:
        raise ConfigError(f"--max must be >= 2, got {args.max}")
    if args.n_max < 2:
        raise ConfigError(f"--n-max must be >= 2, got {args.n_max}")
    detailed = _design_rows(args.max, args.max, args.n_max)
    text = _design_text(detailed)
    print(text)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "design.txt").write_text(text + "\n")
        (out / "design.csv").write_text(_design_csv(detailed) + "\n")
        print(f"wrote {out / 'design.txt'} and {out / 'design.csv'}")
    return 0


def cmd_check(args) -> int:
    data = _load_config(args.config)
    _apply_overrides(data, args.set or [])
    required = data.get("check", {}).get("require", list(_CHECK_CONDITIONS))
    for name in required:
        if name not in _CHECK_CONDITIONS:
            raise ConfigError(f"check.require entry {name!r} not in {_CHECK_CONDITIONS}")
    cfg = _scenario_from_config(data)
    spec = cfg.formation_spec()
    params = cfg.params()
    report = admissibility(spec)
    verdicts = {
        "balance": report.balanced,
        "collision": report.collision_free,
        "center": report.center_free,
        "stability_rigid": stability_rigid(params),
        "stability_deputy": stability_deputy(params),
    }
    payload = {
        "admissibility": {
            "balanced": report.balanced,
            "collision_free": report.collision_free,
            "center_free": report.center_free,
        },
        "entanglement": topology.entanglement_verdict(spec).value,
        "second_order_cancellation": perturb.cancellation_hypothesis(cfg.p, cfg.q, cfg.n_deputies),
        "stability": {
            "rigid": verdicts["stability_rigid"],
            "deputy": verdicts["stability_deputy"],
            "com_block": stability_verdict_com(params).value,
            "deputy_block": stability_verdict_deputy(params).value,
        },
        "mass_ratio": {
            "nominal": str(mass_ratio_for(cfg.p, cfg.q)),
            "offset": cfg.mass_ratio_offset,
        },
        "required": list(required),
    }
    passed = all(verdicts[name] for name in required)
    payload["passed"] = passed
    for name in _CHECK_CONDITIONS:
        tag = "required" if name in required else "info"
        print(f"{name:26} {'PASS' if verdicts[name] else 'FAIL':4} [{tag}]")
    print(f"{'entanglement':26} {payload['entanglement']}")
    print(f"{'second_order_cancellation':26} {payload['second_order_cancellation']}")
    print(f"{'overall':26} {'PASS' if passed else 'FAIL'}")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "check.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0 if passed else 1


def cmd_simulate(args) -> int:
    data = _load_config(args.config)
    _apply_overrides(data, args.set or [])
    cfg = _scenario_from_config(data)
    result = harness.run_scenario(cfg, out_dir=args.out, full_state=args.full_state)
    report = result.report
    horizon = (
        "entire-run"
        if report.stability_horizon_s is None
        else f"{report.stability_horizon_s / cfg.orbit_period:.3f} orbits"
    )
    print(f"delta_min          {report.delta_min:.4f}")
    print(f"max delta_D        {report.max_delta_d:.4f}")
    print(f"max delta_C        {report.max_delta_c:.4f}")
    print(f"stability horizon  {horizon}")
    print(f"integrator steps   {result.trajectory.stats.steps}")
    print(f"wrote {Path(args.out) / 'timeseries.csv'} and {Path(args.out) / 'report.json'}")
    return 0


def cmd_optimize(args) -> int:
    data = _load_config(args.config)
    _apply_overrides(data, args.set or [])
    opt = data.get("optimize", {})
    kappas = opt.get("kappa_deg_list", [1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    interval = (float(opt.get("offset_min", 0.0)), float(opt.get("offset_max", 0.4)))
    grid_points = int(opt.get("grid_points", 21))
    cfg = _scenario_from_config(data)
    rows = []
    for kappa in kappas:
        case = replace(cfg, kappa_deg=float(kappa))
        result = harness.optimize_mass_ratio(
            case, interval=interval, grid_points=grid_points, jobs=args.jobs
        )
        rows.append((float(kappa), result))
        print(
            f"kappa={kappa:g} deg: offset={result.offset:.4f} "
            f"max_delta_D {result.baseline_max_delta_d:.4f} -> {result.max_delta_d:.4f}"
        )
    lines = ["kappa_deg,offset_opt,max_delta_d_unadjusted,max_delta_d_adjusted"]
    for kappa, result in rows:
        lines.append(
            f"{kappa:.17g},{result.offset:.17g},{result.baseline_max_delta_d:.17g},"
            f"{result.max_delta_d:.17g}"
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "mass_ratio_table.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {out / 'mass_ratio_table.csv'}")
    return 0


def cmd_trace(args) -> int:
    data = _load_config(args.config)
    _apply_overrides(data, args.set or [])
    if args.samples < 1000:
        raise ConfigError(f"--samples must be >= 1000, got {args.samples}")
    cfg = _scenario_from_config(data)
    spec = cfg.formation_spec()
    tau = np.arange(args.samples) / args.samples
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(1, spec.n_deputies + 1):
        x, y = deputy_position(spec, i, tau)
        lines = ["tau,x_m,y_m"]
        lines += [f"{t:.17g},{xv:.17g},{yv:.17g}" for t, xv, yv in zip(tau, x, y)]
        (out / f"trace_deputy_{i}.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {spec.n_deputies} curve files under {out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hubspoke",
        description="Design, verify and simulate hub-and-spoke tethered Lissajous formations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="enumerate admissible formations")
    p_design.add_argument("--max", type=int, required=True, help="bound on p and q")
    p_design.add_argument("--n-max", type=int, default=12, help="bound on deputy count")
    p_design.add_argument("--out", default=None, help="directory for design.txt/design.csv")
    p_design.set_defaults(func=cmd_design)

    def common(p):
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument(
            "--set",
            action="append",
            metavar="SECTION.KEY=VALUE",
            help="override a config value (repeatable)",
        )

    p_check = sub.add_parser("check", help="admissibility/stability verdict")
    common(p_check)
    p_check.add_argument("--out", default=None, help="directory for check.json")
    p_check.set_defaults(func=cmd_check)

    p_sim = sub.add_parser("simulate", help="propagate a scenario and measure deviations")
    common(p_sim)
    p_sim.add_argument("--out", default="out", help="output directory")
    p_sim.add_argument("--full-state", action="store_true", help="emit per-body columns")
    p_sim.set_defaults(func=cmd_simulate)

    p_opt = sub.add_parser("optimize", help="tune the mass-ratio offset per deflection angle")
    common(p_opt)
    p_opt.add_argument("--out", default="out", help="output directory")
    p_opt.add_argument("--jobs", type=int, default=1, help="parallel grid evaluations")
    p_opt.set_defaults(func=cmd_optimize)

    p_trace = sub.add_parser("trace", help="emit sampled theoretical curves")
    common(p_trace)
    p_trace.add_argument("--out", default="out", help="output directory")
    p_trace.add_argument("--samples", type=int, default=2048, help="samples per period")
    p_trace.set_defaults(func=cmd_trace)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (HubspokeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
