"""Hot numeric kernels: tethered-system propagation and trajectory grid scans.

Two interchangeable backends are provided.  The default wraps the scalar
loops in ``numba.njit``; a pure-numpy vectorized path is kept for
environments without a working JIT and for cross-checking.  Selection is
driven by the ``HUBSPOKE_NUMBA`` environment variable:

* unset / ``auto`` -- use numba when importable, else numpy;
* ``0`` / ``false`` / ``no`` / ``off`` -- force the numpy path;
* ``1`` / ``true`` / ``yes`` / ``on`` -- require numba (raise if missing).

``benchmarks/bench_kernels.py`` times both paths against each other.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = [
    "BACKEND",
    "USING_NUMBA",
    "STATUS_OK",
    "STATUS_STEP_UNDERFLOW",
    "STATUS_NONFINITE",
    "integrate_adaptive",
    "pair_min_grid",
    "origin_min_grid",
    "rhs_numpy",
    "get_backend",
]

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_NONFINITE = 2

# Hard floor for the adaptive step, seconds.
H_MIN = 1e-6

# Dormand-Prince 5(4) tableau.
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


def _numba_flag() -> str:
    return os.environ.get("HUBSPOKE_NUMBA", "auto").strip().lower()


def _resolve_backend() -> tuple[str, object]:
    flag = _numba_flag()
    if flag in ("0", "false", "no", "off"):
        return "numpy", None
    try:
        import numba
    except ImportError:
        if flag in ("1", "true", "yes", "on"):
            raise ImportError("HUBSPOKE_NUMBA requires numba, which is not importable")
        return "numpy", None
    return "numba", numba


# ---------------------------------------------------------------------------
# Scalar-loop implementations (njit-compatible).
# ---------------------------------------------------------------------------


def _rhs_loop(y, dy, n_dep, m_main, m_dep, k, b, l0, omega0):
    # Body layout: main at slots 0..5, deputy i at 6*(i+1)..6*(i+1)+5,
    # each as (x, y, z, vx, vy, vz) in the LVLH frame.
    fx = 0.0
    fy = 0.0
    fz = 0.0
    w2 = omega0 * omega0
    for i in range(n_dep):
        o = 6 * (i + 1)
        dxc = y[0] - y[o]
        dyc = y[1] - y[o + 1]
        dzc = y[2] - y[o + 2]
        sep = math.sqrt(dxc * dxc + dyc * dyc + dzc * dzc)
        tix = 0.0
        tiy = 0.0
        tiz = 0.0
        if sep > l0:
            rvx = y[3] - y[o + 3]
            rvy = y[4] - y[o + 4]
            rvz = y[5] - y[o + 5]
            rate = (dxc * rvx + dyc * rvy + dzc * rvz) / sep
            mag = k * (sep - l0) + b * rate
            tix = mag * dxc / sep
            tiy = mag * dyc / sep
            tiz = mag * dzc / sep
        dy[o] = y[o + 3]
        dy[o + 1] = y[o + 4]
        dy[o + 2] = y[o + 5]
        dy[o + 3] = 2.0 * omega0 * y[o + 5] + tix / m_dep
        dy[o + 4] = -w2 * y[o + 1] + tiy / m_dep
        dy[o + 5] = -2.0 * omega0 * y[o + 3] + 3.0 * w2 * y[o + 2] + tiz / m_dep
        fx += tix
        fy += tiy
        fz += tiz
    dy[0] = y[3]
    dy[1] = y[4]
    dy[2] = y[5]
    dy[3] = 2.0 * omega0 * y[5] - fx / m_main
    dy[4] = -w2 * y[1] - fy / m_main
    dy[5] = -2.0 * omega0 * y[3] + 3.0 * w2 * y[2] - fz / m_main


def _make_integrate_loop(rhs):
    def integrate_loop(
        y0,
        t0,
        out_times,
        rtol,
        atol,
        h_max,
        h_init,
        fixed_step,
        n_dep,
        m_main,
        m_dep,
        k,
        b,
        l0,
        omega0,
    ):
        n = y0.size
        n_out = out_times.size
        out = np.empty((n_out, n))
        y = y0.copy()
        t = t0
        k1 = np.empty(n)
        k2 = np.empty(n)
        k3 = np.empty(n)
        k4 = np.empty(n)
        k5 = np.empty(n)
        k6 = np.empty(n)
        k7 = np.empty(n)
        ytmp = np.empty(n)
        ynew = np.empty(n)
        rhs(y, k1, n_dep, m_main, m_dep, k, b, l0, omega0)
        n_steps = 0
        n_rejected = 0
        max_err = 0.0
        io = 0
        while io < n_out and out_times[io] <= t:
            out[io] = y
            io += 1
        t_end = out_times[n_out - 1]
        adaptive = fixed_step <= 0.0
        h = h_init if adaptive else fixed_step
        while io < n_out:
            if t + h > t_end:
                h = t_end - t
            hit_output = False
            if t + h >= out_times[io]:
                h = out_times[io] - t
                hit_output = True
            for j in range(n):
                ytmp[j] = y[j] + h * _A21 * k1[j]
            rhs(ytmp, k2, n_dep, m_main, m_dep, k, b, l0, omega0)
            for j in range(n):
                ytmp[j] = y[j] + h * (_A31 * k1[j] + _A32 * k2[j])
            rhs(ytmp, k3, n_dep, m_main, m_dep, k, b, l0, omega0)
            for j in range(n):
                ytmp[j] = y[j] + h * (_A41 * k1[j] + _A42 * k2[j] + _A43 * k3[j])
            rhs(ytmp, k4, n_dep, m_main, m_dep, k, b, l0, omega0)
            for j in range(n):
                ytmp[j] = y[j] + h * (
                    _A51 * k1[j] + _A52 * k2[j] + _A53 * k3[j] + _A54 * k4[j]
                )
            rhs(ytmp, k5, n_dep, m_main, m_dep, k, b, l0, omega0)
            for j in range(n):
                ytmp[j] = y[j] + h * (
                    _A61 * k1[j] + _A62 * k2[j] + _A63 * k3[j] + _A64 * k4[j] + _A65 * k5[j]
                )
            rhs(ytmp, k6, n_dep, m_main, m_dep, k, b, l0, omega0)
            for j in range(n):
                ynew[j] = y[j] + h * (
                    _B1 * k1[j] + _B3 * k3[j] + _B4 * k4[j] + _B5 * k5[j] + _B6 * k6[j]
                )
            rhs(ynew, k7, n_dep, m_main, m_dep, k, b, l0, omega0)
            errsum = 0.0
            for j in range(n):
                e = h * (
                    _E1 * k1[j]
                    + _E3 * k3[j]
                    + _E4 * k4[j]
                    + _E5 * k5[j]
                    + _E6 * k6[j]
                    + _E7 * k7[j]
                )
                sc = atol[j] + rtol * abs(y[j])
                errsum += (e / sc) * (e / sc)
            err = math.sqrt(errsum / n)
            finite = err == err and err != math.inf
            if not adaptive:
                ok = True
                for j in range(n):
                    if not math.isfinite(ynew[j]):
                        ok = False
                        break
                if not ok:
                    return out, STATUS_NONFINITE, n_steps, n_rejected, max_err
                t = t + h
                for j in range(n):
                    y[j] = ynew[j]
                    k1[j] = k7[j]
                n_steps += 1
                if err > max_err and finite:
                    max_err = err
                if hit_output:
                    out[io] = y
                    io += 1
                h = fixed_step
                continue
            if finite and err <= 1.0:
                t = t + h
                for j in range(n):
                    y[j] = ynew[j]
                    k1[j] = k7[j]
                n_steps += 1
                if err > max_err:
                    max_err = err
                if hit_output:
                    out[io] = y
                    io += 1
            else:
                n_rejected += 1
            if finite:
                if err > 0.0:
                    fac = 0.9 * err ** -0.2
                else:
                    fac = 5.0
                if fac > 5.0:
                    fac = 5.0
                if fac < 0.2:
                    fac = 0.2
            else:
                fac = 0.2
            h = h * fac
            if h > h_max:
                h = h_max
            if h < H_MIN:
                if finite:
                    return out, STATUS_STEP_UNDERFLOW, n_steps, n_rejected, max_err
                return out, STATUS_NONFINITE, n_steps, n_rejected, max_err
        return out, STATUS_OK, n_steps, n_rejected, max_err

    return integrate_loop


def _deputy_xy(kind, p, q, n_dep, x0, y0, phx, phy, tau, xs, ys):
    twopi = 2.0 * math.pi
    for i in range(n_dep):
        frac = (i + 1.0) / n_dep
        if kind == 1:
            ax = twopi * p * (tau + frac) + phx
            ay = twopi * q * (tau + frac) + phy
        else:
            ax = twopi * (p * tau + frac) + phx
            ay = twopi * (q * tau + frac) + phy
        xs[i] = x0 * math.sin(ax)
        ys[i] = y0 * math.sin(ay)


def _make_pair_min_loop(deputy_xy):
    def pair_min_loop(kind, p, q, n_dep, x0, y0, phx, phy, n_samples):
        n_pairs = n_dep * (n_dep - 1) // 2
        best = np.full(n_pairs, np.inf)
        bidx = np.zeros(n_pairs, np.int64)
        xs = np.empty(n_dep)
        ys = np.empty(n_dep)
        for s in range(n_samples):
            tau = s / n_samples
            deputy_xy(kind, p, q, n_dep, x0, y0, phx, phy, tau, xs, ys)
            pi = 0
            for i in range(n_dep):
                for j in range(i + 1, n_dep):
                    dx = xs[i] - xs[j]
                    dy = ys[i] - ys[j]
                    d2 = dx * dx + dy * dy
                    if d2 < best[pi]:
                        best[pi] = d2
                        bidx[pi] = s
                    pi += 1
        return best, bidx

    return pair_min_loop


def _make_origin_min_loop(deputy_xy):
    def origin_min_loop(kind, p, q, n_dep, x0, y0, phx, phy, n_samples):
        best = np.full(n_dep, np.inf)
        bidx = np.zeros(n_dep, np.int64)
        xs = np.empty(n_dep)
        ys = np.empty(n_dep)
        for s in range(n_samples):
            tau = s / n_samples
            deputy_xy(kind, p, q, n_dep, x0, y0, phx, phy, tau, xs, ys)
            for i in range(n_dep):
                d2 = xs[i] * xs[i] + ys[i] * ys[i]
                if d2 < best[i]:
                    best[i] = d2
                    bidx[i] = s
        return best, bidx

    return origin_min_loop


# ---------------------------------------------------------------------------
# Vectorized numpy implementations.
# ---------------------------------------------------------------------------


def rhs_numpy(y, n_dep, m_main, m_dep, k, b, l0, omega0):
    """State derivative for the packed LVLH state vector (numpy path)."""
    # Overflow to inf is legitimate here: the driver detects non-finite
    # states and reports them, so keep numpy quiet about it.
    with np.errstate(over="ignore", invalid="ignore"):
        return _rhs_numpy_impl(y, n_dep, m_main, m_dep, k, b, l0, omega0)


def _rhs_numpy_impl(y, n_dep, m_main, m_dep, k, b, l0, omega0):
    s = y.reshape(n_dep + 1, 6)
    pos = s[:, :3]
    vel = s[:, 3:]
    d = pos[0] - pos[1:]
    dv = vel[0] - vel[1:]
    sep = np.sqrt(np.einsum("ij,ij->i", d, d))
    safe = np.where(sep > 0.0, sep, 1.0)
    rate = np.einsum("ij,ij->i", d, dv) / safe
    mag = np.where(sep > l0, k * (sep - l0) + b * rate, 0.0)
    force = (mag / safe)[:, None] * d
    w2 = omega0 * omega0
    acc = np.empty((n_dep + 1, 3))
    acc[:, 0] = 2.0 * omega0 * vel[:, 2]
    acc[:, 1] = -w2 * pos[:, 1]
    acc[:, 2] = -2.0 * omega0 * vel[:, 0] + 3.0 * w2 * pos[:, 2]
    acc[1:] += force / m_dep
    acc[0] -= force.sum(axis=0) / m_main
    dy = np.empty_like(y)
    ds = dy.reshape(n_dep + 1, 6)
    ds[:, :3] = vel
    ds[:, 3:] = acc
    return dy


_DP_A = (
    (_A21,),
    (_A31, _A32),
    (_A41, _A42, _A43),
    (_A51, _A52, _A53, _A54),
    (_A61, _A62, _A63, _A64, _A65),
)
_DP_B = np.array([_B1, 0.0, _B3, _B4, _B5, _B6])
_DP_E = np.array([_E1, 0.0, _E3, _E4, _E5, _E6, _E7])


def _integrate_numpy(
    y0,
    t0,
    out_times,
    rtol,
    atol,
    h_max,
    h_init,
    fixed_step,
    n_dep,
    m_main,
    m_dep,
    k,
    b,
    l0,
    omega0,
):
    # Mirrors the scalar loop step for step; only the inner arithmetic is
    # vectorized, so the accepted step sequence matches up to rounding.
    with np.errstate(over="ignore", invalid="ignore"):
        return _integrate_numpy_impl(
            y0, t0, out_times, rtol, atol, h_max, h_init, fixed_step,
            n_dep, m_main, m_dep, k, b, l0, omega0,
        )


def _integrate_numpy_impl(
    y0,
    t0,
    out_times,
    rtol,
    atol,
    h_max,
    h_init,
    fixed_step,
    n_dep,
    m_main,
    m_dep,
    k,
    b,
    l0,
    omega0,
):
    n = y0.size
    n_out = out_times.size
    out = np.empty((n_out, n))
    y = y0.copy()
    t = t0
    stages = np.empty((7, n))
    stages[0] = rhs_numpy(y, n_dep, m_main, m_dep, k, b, l0, omega0)
    n_steps = 0
    n_rejected = 0
    max_err = 0.0
    io = 0
    while io < n_out and out_times[io] <= t:
        out[io] = y
        io += 1
    t_end = out_times[-1]
    adaptive = fixed_step <= 0.0
    h = h_init if adaptive else fixed_step
    while io < n_out:
        if t + h > t_end:
            h = t_end - t
        hit_output = False
        if t + h >= out_times[io]:
            h = out_times[io] - t
            hit_output = True
        for st, row in enumerate(_DP_A):
            ytmp = y + h * np.einsum("s,sj->j", np.asarray(row), stages[: st + 1])
            stages[st + 1] = rhs_numpy(ytmp, n_dep, m_main, m_dep, k, b, l0, omega0)
        ynew = y + h * (_DP_B @ stages[:6])
        stages[6] = rhs_numpy(ynew, n_dep, m_main, m_dep, k, b, l0, omega0)
        escaled = h * (_DP_E @ stages) / (atol + rtol * np.abs(y))
        err = math.sqrt(float(escaled @ escaled) / n)
        finite = math.isfinite(err)
        if not adaptive:
            if not np.all(np.isfinite(ynew)):
                return out, STATUS_NONFINITE, n_steps, n_rejected, max_err
            t = t + h
            y = ynew
            stages[0] = stages[6]
            n_steps += 1
            if finite and err > max_err:
                max_err = err
            if hit_output:
                out[io] = y
                io += 1
            h = fixed_step
            continue
        if finite and err <= 1.0:
            t = t + h
            y = ynew
            stages[0] = stages[6].copy()
            n_steps += 1
            if err > max_err:
                max_err = err
            if hit_output:
                out[io] = y
                io += 1
        else:
            n_rejected += 1
        if finite:
            fac = min(5.0, max(0.2, 0.9 * err ** -0.2)) if err > 0.0 else 5.0
        else:
            fac = 0.2
        h = h * fac
        if h > h_max:
            h = h_max
        if h < H_MIN:
            status = STATUS_STEP_UNDERFLOW if finite else STATUS_NONFINITE
            return out, status, n_steps, n_rejected, max_err
    return out, STATUS_OK, n_steps, n_rejected, max_err


def _deputy_xy_vec(kind, p, q, n_dep, x0, y0, phx, phy, tau):
    frac = (np.arange(1, n_dep + 1) / n_dep)[:, None]
    t = tau[None, :]
    twopi = 2.0 * np.pi
    if kind == 1:
        xs = x0 * np.sin(twopi * p * (t + frac) + phx)
        ys = y0 * np.sin(twopi * q * (t + frac) + phy)
    else:
        xs = x0 * np.sin(twopi * (p * t + frac) + phx)
        ys = y0 * np.sin(twopi * (q * t + frac) + phy)
    return xs, ys


_CHUNK = 1 << 15


def _pair_min_numpy(kind, p, q, n_dep, x0, y0, phx, phy, n_samples):
    n_pairs = n_dep * (n_dep - 1) // 2
    best = np.full(n_pairs, np.inf)
    bidx = np.zeros(n_pairs, np.int64)
    iu, ju = np.triu_indices(n_dep, k=1)
    for start in range(0, n_samples, _CHUNK):
        stop = min(start + _CHUNK, n_samples)
        tau = np.arange(start, stop) / n_samples
        xs, ys = _deputy_xy_vec(kind, p, q, n_dep, x0, y0, phx, phy, tau)
        d2 = (xs[iu] - xs[ju]) ** 2 + (ys[iu] - ys[ju]) ** 2
        loc = np.argmin(d2, axis=1)
        vals = d2[np.arange(n_pairs), loc]
        mask = vals < best
        best[mask] = vals[mask]
        bidx[mask] = loc[mask] + start
    return best, bidx


def _origin_min_numpy(kind, p, q, n_dep, x0, y0, phx, phy, n_samples):
    best = np.full(n_dep, np.inf)
    bidx = np.zeros(n_dep, np.int64)
    for start in range(0, n_samples, _CHUNK):
        stop = min(start + _CHUNK, n_samples)
        tau = np.arange(start, stop) / n_samples
        xs, ys = _deputy_xy_vec(kind, p, q, n_dep, x0, y0, phx, phy, tau)
        d2 = xs ** 2 + ys ** 2
        loc = np.argmin(d2, axis=1)
        vals = d2[np.arange(n_dep), loc]
        mask = vals < best
        best[mask] = vals[mask]
        bidx[mask] = loc[mask] + start
    return best, bidx


# ---------------------------------------------------------------------------
# Backend assembly.
# ---------------------------------------------------------------------------


def _build_numba(numba):
    jit = numba.njit(cache=True)
    rhs = jit(_rhs_loop)
    deputy_xy = jit(_deputy_xy)
    return {
        "integrate_adaptive": jit(_make_integrate_loop(rhs)),
        "pair_min_grid": jit(_make_pair_min_loop(deputy_xy)),
        "origin_min_grid": jit(_make_origin_min_loop(deputy_xy)),
    }


def _build_numpy():
    return {
        "integrate_adaptive": _integrate_numpy,
        "pair_min_grid": _pair_min_numpy,
        "origin_min_grid": _origin_min_numpy,
    }


def get_backend(name: str) -> dict:
    """Return the kernel set for ``name`` in {'numba', 'numpy'}."""
    if name == "numpy":
        return _build_numpy()
    if name == "numba":
        import numba

        return _build_numba(numba)
    raise ValueError(f"unknown backend {name!r}")


BACKEND, _numba_mod = _resolve_backend()
USING_NUMBA = BACKEND == "numba"
_kernels = _build_numba(_numba_mod) if USING_NUMBA else _build_numpy()

integrate_adaptive = _kernels["integrate_adaptive"]
pair_min_grid = _kernels["pair_min_grid"]
origin_min_grid = _kernels["origin_min_grid"]
