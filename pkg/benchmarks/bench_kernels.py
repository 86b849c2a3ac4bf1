"""Benchmark the JIT and pure-numpy kernel backends against each other.

Times the hot paths (full nonlinear propagation, pairwise grid scan) on
both backends, checks that they agree, and prints a small table.

    python3 benchmarks/bench_kernels.py [--orbits N] [--repeats R]
"""

import argparse
import math
import time
from fractions import Fraction

import numpy as np

from hubspoke import (
    FormationKind,
    FormationSpec,
    SystemParams,
    synthesize_initial_state,
    vertical_equilibrium,
)
from hubspoke import _kernels


def propagation_args(n_orbits: float):
    p = SystemParams.from_design(3, 8.0, 1000.0)
    eq = vertical_equilibrium(p)
    amp = math.radians(1.0) * p.slack_length
    spec = FormationSpec.from_phi0(FormationKind.TYPE_I, 1, 2, 3, amp, Fraction(1, 4))
    y0 = synthesize_initial_state(p, spec, eq).to_vector()
    t_end = n_orbits * p.orbit_period
    times = np.linspace(0.0, t_end, 2001)
    rtol = 1e-10
    atol = np.empty_like(y0)
    atol.reshape(-1, 6)[:, :3] = rtol * p.slack_length
    atol.reshape(-1, 6)[:, 3:] = rtol * p.slack_length * p.mean_motion
    h_max = 2.0 * math.pi / math.sqrt(p.stiffness / p.m_deputy) / 20.0
    return (
        y0, 0.0, times, rtol, atol, h_max, 0.01 * h_max, 0.0,
        p.n_deputies, p.m_main, p.m_deputy, p.stiffness, p.damping,
        p.slack_length, p.mean_motion,
    )


def time_call(fn, args, repeats):
    best = math.inf
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--orbits", type=float, default=10.0)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--grid-samples", type=int, default=1_000_000)
    args = parser.parse_args()

    backends = {"numpy": _kernels.get_backend("numpy")}
    try:
        backends["numba"] = _kernels.get_backend("numba")
    except ImportError:
        print("numba unavailable; timing the numpy path only")

    prop_args = propagation_args(args.orbits)
    grid_args = (1, 1, 2, 5, 1.0, 1.0, math.pi / 8.0, 0.0, args.grid_samples)

    rows = []
    outputs = {}
    for name, kernels in backends.items():
        if name == "numba":  # compile outside the timed region
            kernels["integrate_adaptive"](*propagation_args(0.01))
            kernels["pair_min_grid"](1, 1, 2, 5, 1.0, 1.0, 0.0, 0.0, 1000)
        t_prop, out_prop = time_call(kernels["integrate_adaptive"], prop_args, args.repeats)
        t_grid, out_grid = time_call(kernels["pair_min_grid"], grid_args, args.repeats)
        assert out_prop[1] == _kernels.STATUS_OK
        outputs[name] = (out_prop[0], out_grid[0])
        rows.append((name, t_prop, out_prop[2], t_grid))

    print(f"\npropagation: {args.orbits:g} orbits, N=3 deputies, rtol 1e-10; "
          f"grid scan: {args.grid_samples:,} samples, N=5")
    print(f"{'backend':8} {'propagate (s)':>14} {'steps':>8} {'grid scan (s)':>14}")
    for name, t_prop, steps, t_grid in rows:
        print(f"{name:8} {t_prop:14.4f} {steps:8d} {t_grid:14.4f}")
    if len(rows) == 2:
        prop = {name: t for name, t, _, _ in rows}
        grid = {name: t for name, _, _, t in rows}
        print(f"\nspeedup numba vs numpy: propagate {prop['numpy'] / prop['numba']:.1f}x, "
              f"grid {grid['numpy'] / grid['numba']:.1f}x")
        a, b = outputs["numpy"], outputs["numba"]
        agree = np.allclose(a[0], b[0], rtol=1e-9, atol=1e-6) and np.allclose(a[1], b[1], rtol=1e-12)
        print(f"backend agreement: {'ok' if agree else 'MISMATCH'}")
        if not agree:
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
