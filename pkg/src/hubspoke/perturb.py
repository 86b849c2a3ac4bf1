"""Second-order perturbation sums and the main-satellite forcing cancellation.

The quadratic corrections to the evolution equations are driven by three
sums over the base harmonic motion: sum(x'_k x_k), sum(y'_k y_k) and
sum(x'_k y_k).  For a Type I formation they vanish identically exactly
when N divides none of 2p, 2q, q - p, q + p, in which case the hub feels
no second-order forcing at all and stays put.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import gcd

import numpy as np

from .core import SystemParams
from .errors import UnbalancedSpecError
from .formation import (
    FormationSpec,
    admissibility,
    deputy_position,
    deputy_velocity_tau,
    validate_spec,
)

__all__ = [
    "SecondOrderSums",
    "second_order_sums",
    "cancellation_hypothesis",
    "main_satellite_forcing",
]


@dataclass(frozen=True)
class SecondOrderSums:
    """The three quadratic sums driving second-order corrections, m^2/s."""

    sum_xx: np.ndarray
    sum_yy: np.ndarray
    sum_xy: np.ndarray

    @property
    def magnitude(self) -> np.ndarray:
        return np.maximum(np.abs(self.sum_xx), np.maximum(np.abs(self.sum_yy), np.abs(self.sum_xy)))


def second_order_sums(spec: FormationSpec, tau, period: float = 1.0) -> SecondOrderSums:
    """Evaluate the three sums from the closed-form base motion.

    Velocities are physical-time derivatives for a formation period of
    ``period`` seconds; the default leaves them as tau-derivatives, which
    only rescales all three sums by a common positive factor.
    """
    bad = validate_spec(spec)
    if bad:
        raise ValueError("; ".join(bad))
    tau = np.asarray(tau, dtype=float)
    sum_xx = np.zeros_like(tau)
    sum_yy = np.zeros_like(tau)
    sum_xy = np.zeros_like(tau)
    for i in range(1, spec.n_deputies + 1):
        x, y = deputy_position(spec, i, tau)
        vx, vy = deputy_velocity_tau(spec, i, tau)
        sum_xx += vx * x
        sum_yy += vy * y
        sum_xy += vx * y
    scale = 1.0 / period
    return SecondOrderSums(sum_xx * scale, sum_yy * scale, sum_xy * scale)


def cancellation_hypothesis(p: int, q: int, n: int) -> bool:
    """True iff N divides none of 2p, 2q, q - p and q + p.

    Under this hypothesis every quadratic sum of a Type I formation
    cancels identically across the deputies.
    """
    if gcd(p, q) != 1:
        raise ValueError(f"p and q must be coprime, got ({p}, {q})")
    return all(d % n != 0 for d in (2 * p, 2 * q, q - p, q + p))


def main_satellite_forcing(spec: FormationSpec, params: SystemParams, tau):
    """Right-hand sides of the hub's second-order evolution equations.

    Returns the planar pair (f_x, f_y): the x component weighs the
    quadratic sums by m_C/(m_C + N m_D) and N m_D/(m_C + N m_D) under the
    2 omega0/l0 prefactor, the y component is the cross sum alone.  Both
    vanish identically for a Type I formation satisfying the
    ``cancellation_hypothesis``.  Requires a balanced spec (the derivation pins
    the hub's planar position to zero).
    """
    bad = validate_spec(spec)
    if bad:
        raise ValueError("; ".join(bad))
    if not admissibility(spec).balanced:
        raise UnbalancedSpecError(
            "hub forcing formulas assume a balanced formation"
        )
    if spec.n_deputies != params.n_deputies:
        raise ValueError(
            f"spec has {spec.n_deputies} deputies, params {params.n_deputies}"
        )
    w0 = params.mean_motion
    period = 2.0 * math.pi * math.sqrt(spec.q**2 - spec.p**2) / w0
    sums = second_order_sums(spec, tau, period=period)
    m_c = params.m_main
    n_md = params.n_deputies * params.m_deputy
    total = m_c + n_md
    pref = 2.0 * w0 / params.slack_length
    f_x = pref * ((m_c / total) * sums.sum_yy - (n_md / total) * sums.sum_xx)
    f_y = -pref * sums.sum_xy
    return f_x, f_y
