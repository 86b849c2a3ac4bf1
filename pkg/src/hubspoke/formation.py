"""Lissajous formation synthesis and admissibility arithmetic.

Deputies move on planar Lissajous curves
x = x0 sin(2 pi p tau + phase), y = y0 sin(2 pi q tau + phase) with
coprime p < q.  A Type I formation phases N deputies uniformly along one
curve; Type II spreads them over N phase-shifted copies.  The derived
offset ``phi0 = (q phase_x - p phase_y)/pi`` controls balance, collision
freedom and origin clearance through pure arithmetic, which the grid
oracles here cross-check geometrically.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from math import gcd
from numbers import Rational
from typing import Optional

import numpy as np

from . import _kernels
from .core import SystemParams, EquilibriumConfig
from .errors import (
    AmplitudeTooLargeError,
    CollidingFormationError,
    RatioInfeasibleError,
)
from .lindyn import mode_frequencies

__all__ = [
    "FormationKind",
    "FormationSpec",
    "AdmissibilityReport",
    "DesignRow",
    "validate_spec",
    "mass_ratio_for",
    "deputy_position",
    "deputy_velocity_tau",
    "admissibility",
    "collision_oracle",
    "origin_oracle",
    "min_separation",
    "min_separation_scan",
    "origin_clearance",
    "synthesize_initial_state",
    "enumerate_designs",
]

# Integrality tolerance for admissibility tests on floating-point phases.
EPS_INTEGRALITY = 1e-9
# A polished minimum below this fraction of the amplitude counts as a collision.
EPS_COLLISION = 1e-6


class FormationKind(enum.Enum):
    TYPE_I = "type1"
    TYPE_II = "type2"


@dataclass(frozen=True)
class FormationSpec:
    """A Type I or Type II Lissajous formation of N deputies.

    Phases are radians.  When the optional ``phase_*_pi`` fields carry the
    phases as exact rational multiples of pi, the admissibility arithmetic
    runs on exact rationals instead of tolerance-based float tests.
    """

    kind: FormationKind
    p: int
    q: int
    n_deputies: int
    amp_x: float
    amp_y: float
    phase_x: float = 0.0
    phase_y: float = 0.0
    phase_x_pi: Optional[Fraction] = None
    phase_y_pi: Optional[Fraction] = None

    @property
    def phi0(self) -> float:
        """Phase offset (q phase_x - p phase_y)/pi driving the admissibility arithmetic."""
        return (self.q * self.phase_x - self.p * self.phase_y) / math.pi

    @property
    def phi0_exact(self) -> Optional[Fraction]:
        if self.phase_x_pi is None or self.phase_y_pi is None:
            return None
        return self.q * self.phase_x_pi - self.p * self.phase_y_pi

    @classmethod
    def from_phi0(
        cls,
        kind: FormationKind,
        p: int,
        q: int,
        n_deputies: int,
        amplitude: float,
        phi0,
    ) -> "FormationSpec":
        """Spec with phase_x = pi*phi0/q, phase_y = 0, equal amplitudes.

        Rational ``phi0`` (int/Fraction) activates the exact admissibility
        path; a float stays on the tolerance-based path.
        """
        if isinstance(phi0, Rational):
            fx = Fraction(phi0) / q
            return cls(
                kind, p, q, n_deputies, amplitude, amplitude,
                phase_x=math.pi * float(fx), phase_y=0.0,
                phase_x_pi=fx, phase_y_pi=Fraction(0),
            )
        return cls(
            kind, p, q, n_deputies, amplitude, amplitude,
            phase_x=math.pi * float(phi0) / q, phase_y=0.0,
        )


@dataclass(frozen=True)
class AdmissibilityReport:
    """Closed-form verdicts: centroid balance (A), pairwise collision
    freedom (B) and clearance of the origin (C)."""

    balanced: bool
    collision_free: bool
    center_free: bool

    @property
    def admissible(self) -> bool:
        return self.balanced and self.collision_free and self.center_free


def validate_spec(spec: FormationSpec, check_frequency_ratio: bool = True) -> list[str]:
    """Return every violated invariant of the spec, deterministically ordered.

    ``check_frequency_ratio=False`` skips the p/q < sqrt(3)/2 bound, which
    diagnostic uses (circular motion p = q = 1) intentionally violate.
    """
    v = []
    if spec.p < 1 or spec.q < 1:
        v.append(f"p, q must be natural numbers, got ({spec.p}, {spec.q})")
    elif gcd(spec.p, spec.q) != 1:
        v.append(f"p and q must be coprime, got ({spec.p}, {spec.q})")
    if check_frequency_ratio and 4 * spec.p**2 >= 3 * spec.q**2:
        v.append(f"p/q must be below sqrt(3)/2, got {spec.p}/{spec.q}")
    if spec.n_deputies < 2:
        v.append(f"n_deputies must be >= 2, got {spec.n_deputies}")
    if not (spec.amp_x > 0.0 and spec.amp_y > 0.0):
        v.append(f"amplitudes must be positive, got ({spec.amp_x}, {spec.amp_y})")
    return v


def _require(spec: FormationSpec, check_frequency_ratio: bool = True) -> None:
    v = validate_spec(spec, check_frequency_ratio)
    if v:
        raise ValueError("; ".join(v))


def mass_ratio_for(p: int, q: int) -> Fraction:
    """Deputy-to-main mass ratio N m_D / m_C = 3 q^2/p^2 - 4 as an exact rational.

    Raises ``RatioInfeasibleError`` when p/q >= sqrt(3)/2 (ratio would be
    non-positive).
    """
    if gcd(p, q) != 1:
        raise ValueError(f"p and q must be coprime, got ({p}, {q})")
    value = Fraction(3 * q * q - 4 * p * p, p * p)
    if value <= 0:
        raise RatioInfeasibleError(
            f"frequency ratio {p}/{q} needs a non-positive mass ratio {value}"
        )
    return value


def _kind_code(kind: FormationKind) -> int:
    return 1 if kind is FormationKind.TYPE_I else 2


def deputy_position(spec: FormationSpec, i: int, tau):
    """Planar position (x, y) of deputy ``i`` (1-based) at nondimensional
    time ``tau`` (period exactly 1).  ``tau`` may be a scalar or array."""
    if not 1 <= i <= spec.n_deputies:
        raise ValueError(f"deputy index {i} outside 1..{spec.n_deputies}")
    tau = np.asarray(tau, dtype=float)
    frac = i / spec.n_deputies
    if spec.kind is FormationKind.TYPE_I:
        ax = 2.0 * np.pi * spec.p * (tau + frac) + spec.phase_x
        ay = 2.0 * np.pi * spec.q * (tau + frac) + spec.phase_y
    else:
        ax = 2.0 * np.pi * (spec.p * tau + frac) + spec.phase_x
        ay = 2.0 * np.pi * (spec.q * tau + frac) + spec.phase_y
    return spec.amp_x * np.sin(ax), spec.amp_y * np.sin(ay)


def deputy_velocity_tau(spec: FormationSpec, i: int, tau):
    """Analytic derivative of ``deputy_position`` with respect to tau."""
    if not 1 <= i <= spec.n_deputies:
        raise ValueError(f"deputy index {i} outside 1..{spec.n_deputies}")
    tau = np.asarray(tau, dtype=float)
    frac = i / spec.n_deputies
    if spec.kind is FormationKind.TYPE_I:
        ax = 2.0 * np.pi * spec.p * (tau + frac) + spec.phase_x
        ay = 2.0 * np.pi * spec.q * (tau + frac) + spec.phase_y
    else:
        ax = 2.0 * np.pi * (spec.p * tau + frac) + spec.phase_x
        ay = 2.0 * np.pi * (spec.q * tau + frac) + spec.phase_y
    vx = spec.amp_x * 2.0 * np.pi * spec.p * np.cos(ax)
    vy = spec.amp_y * 2.0 * np.pi * spec.q * np.cos(ay)
    return vx, vy


def _is_integer(value, eps: float) -> bool:
    if isinstance(value, Rational):
        return Fraction(value).denominator == 1
    return abs(value - round(value)) <= eps


def admissibility(spec: FormationSpec, eps: float = EPS_INTEGRALITY) -> AdmissibilityReport:
    """Evaluate the three closed-form admissibility conditions.

    Balance requires the deputy centroid to vanish identically; collision
    freedom that no two deputies ever share a planar position; center
    freedom that no deputy crosses the origin (room for a central
    satellite).  Uses exact rational arithmetic when the spec carries
    exact phases, otherwise integrality tests with tolerance ``eps``.
    """
    _require(spec)
    p, q, n = spec.p, spec.q, spec.n_deputies
    phi0 = spec.phi0_exact
    half = Fraction(p - q, 2)
    if phi0 is None:
        phi0 = spec.phi0
        half = (p - q) / 2.0
    if spec.kind is FormationKind.TYPE_I:
        balanced = (p % n != 0) and (q % n != 0)
        collision_free = (
            not _is_integer(phi0 + half, eps)
            and gcd(n, p) == 1
            and gcd(n, q) == 1
        )
        center_free = not _is_integer(phi0, eps)
    else:
        balanced = True
        if n == 2:
            collision_free = not _is_integer(phi0, eps)
        else:
            g = gcd(n, q - p)
            collision_free = not _is_integer((phi0 + half) * n / g, eps * n)
        g2 = gcd(n, 2 * (q - p))
        center_free = not _is_integer(phi0 * n / g2, eps * n)
    return AdmissibilityReport(balanced, collision_free, center_free)


def collision_oracle(spec: FormationSpec, samples: int) -> float:
    """Minimum pairwise planar deputy distance over a uniform tau grid.

    Brute-force geometric cross-check of the collision arithmetic: for a
    collision-free spec the value stays bounded away from zero under grid
    refinement, for a colliding one it decays toward zero.
    """
    if samples < 1000:
        raise ValueError("need at least 1e3 grid samples")
    _require(spec, check_frequency_ratio=False)
    best, _ = _kernels.pair_min_grid(
        _kind_code(spec.kind), spec.p, spec.q, spec.n_deputies,
        spec.amp_x, spec.amp_y, spec.phase_x, spec.phase_y, samples,
    )
    return float(math.sqrt(best.min()))


def origin_oracle(spec: FormationSpec, samples: int) -> float:
    """Minimum planar distance of any deputy from the origin over a tau grid."""
    if samples < 1000:
        raise ValueError("need at least 1e3 grid samples")
    _require(spec, check_frequency_ratio=False)
    best, _ = _kernels.origin_min_grid(
        _kind_code(spec.kind), spec.p, spec.q, spec.n_deputies,
        spec.amp_x, spec.amp_y, spec.phase_x, spec.phase_y, samples,
    )
    return float(math.sqrt(best.min()))


_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    a, b = lo, hi
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _pair_distance_sq(spec: FormationSpec, i: int, j: int):
    def f(tau: float) -> float:
        xi, yi = deputy_position(spec, i, tau)
        xj, yj = deputy_position(spec, j, tau)
        return float((xi - xj) ** 2 + (yi - yj) ** 2)

    return f


def _polished_pair_minimum(spec: FormationSpec, samples: int) -> float:
    """Grid scan of every pair followed by golden-section refinement of
    each pair's best cell (+-1 cell bracket, 1e-12 tau tolerance)."""
    best, bidx = _kernels.pair_min_grid(
        _kind_code(spec.kind), spec.p, spec.q, spec.n_deputies,
        spec.amp_x, spec.amp_y, spec.phase_x, spec.phase_y, samples,
    )
    out = math.inf
    pi = 0
    for i in range(1, spec.n_deputies + 1):
        for j in range(i + 1, spec.n_deputies + 1):
            tau0 = bidx[pi] / samples
            f = _pair_distance_sq(spec, i, j)
            _, fmin = _golden_min(f, tau0 - 1.0 / samples, tau0 + 1.0 / samples, 1e-12)
            out = min(out, min(fmin, float(best[pi])))
            pi += 1
    return math.sqrt(out)


def origin_clearance(spec: FormationSpec, samples: int = 8192) -> float:
    """Polished minimum planar distance of any deputy from the origin.

    Same grid-plus-golden-section scheme as the pair separation; the
    geometric cross-check of the origin-clearance arithmetic.
    """
    _require(spec, check_frequency_ratio=False)
    best, bidx = _kernels.origin_min_grid(
        _kind_code(spec.kind), spec.p, spec.q, spec.n_deputies,
        spec.amp_x, spec.amp_y, spec.phase_x, spec.phase_y, samples,
    )
    out = math.inf
    for i in range(1, spec.n_deputies + 1):
        tau0 = bidx[i - 1] / samples

        def radius_sq(tau: float, i: int = i) -> float:
            x, y = deputy_position(spec, i, tau)
            return float(x * x + y * y)

        _, fmin = _golden_min(radius_sq, tau0 - 1.0 / samples, tau0 + 1.0 / samples, 1e-12)
        out = min(out, fmin, float(best[i - 1]))
    return math.sqrt(out)


def min_separation(spec: FormationSpec, amplitude: float, samples: int = 8192) -> float:
    """Amplitude-normalized minimum pairwise distance on the theoretical curves.

    Evaluated at equal amplitudes x0 = y0 = ``amplitude`` (z differences
    are second-order small and neglected); a grid scan locates each
    pair's minimum, golden-section refinement polishes it.  Raises
    ``CollidingFormationError`` when the polished minimum falls below
    ``EPS_COLLISION * amplitude``.
    """
    _require(spec)
    geo = replace(spec, amp_x=float(amplitude), amp_y=float(amplitude))
    dmin = _polished_pair_minimum(geo, samples)
    if dmin < EPS_COLLISION * amplitude:
        raise CollidingFormationError(
            f"polished minimum separation {dmin:.3e} below "
            f"{EPS_COLLISION:g} * amplitude"
        )
    return dmin / amplitude


def min_separation_scan(
    kind: FormationKind,
    p: int,
    q: int,
    n_deputies: int,
    grid: int = 40,
    samples: int = 8192,
) -> list[tuple[float, Optional[float]]]:
    """Sweep the phase offset phi0 over a uniform grid on [0, 2).

    Returns (phi0, delta_min) pairs with ``None`` marking colliding
    offsets.  Handy when only a separation value is known and the phase
    convention behind it is not: the grid covers every inequivalent
    offset, so the matching configuration can be read off directly.
    """
    out = []
    for idx in range(grid):
        phi0 = Fraction(2 * idx, grid)
        spec = FormationSpec.from_phi0(kind, p, q, n_deputies, 1.0, phi0)
        report = admissibility(spec)
        if not report.collision_free:
            out.append((float(phi0), None))
            continue
        try:
            out.append((float(phi0), min_separation(spec, 1.0, samples)))
        except CollidingFormationError:
            out.append((float(phi0), None))
    return out


def synthesize_initial_state(
    params: SystemParams,
    spec: FormationSpec,
    eq: EquilibriumConfig,
    max_ratio_offset: float = 0.5,
):
    """Physical LVLH state at t = 0 realizing the planar Lissajous motion.

    Deputies start on their theoretical planar positions with velocities
    from the analytic tau-derivative scaled by the formation period
    T_L = 2 pi p / omega_x (exact omega_x of the supplied params); the
    out-of-plane coordinates come from the taut-tether constraint
    z_i - z_C = -sqrt(l*^2 - planar offset^2) with z_C placing the system
    CoM at the origin, and z rates from the constraint's time derivative.
    The main satellite starts on the z axis with zero planar velocity.
    """
    from .simulate import SystemState

    _require(spec)
    report = admissibility(spec)
    if not report.collision_free:
        raise CollidingFormationError(
            "refusing to synthesize a state for a colliding formation"
        )
    nominal = float(mass_ratio_for(spec.p, spec.q))
    actual = params.n_deputies * params.m_deputy / params.m_main
    if abs(actual - nominal) > max_ratio_offset:
        raise ValueError(
            f"mass ratio {actual:.4f} departs from the design value "
            f"{nominal:.4f} by more than {max_ratio_offset}"
        )
    if spec.n_deputies != params.n_deputies:
        raise ValueError(
            f"spec has {spec.n_deputies} deputies, params {params.n_deputies}"
        )
    n = spec.n_deputies
    t_lissajous = 2.0 * math.pi * spec.p / mode_frequencies(params).omega_x
    idx = np.arange(1, n + 1)
    xy = np.array([deputy_position(spec, i, 0.0) for i in idx])
    vxy = np.array([deputy_velocity_tau(spec, i, 0.0) for i in idx]) / t_lissajous
    l_star = eq.stretched_length
    planar_sq = xy[:, 0] ** 2 + xy[:, 1] ** 2
    if np.any(planar_sq >= l_star**2):
        raise AmplitudeTooLargeError(
            f"planar offset {math.sqrt(planar_sq.max()):.1f} m reaches the "
            f"stretched tether length {l_star:.1f} m"
        )
    drop = np.sqrt(l_star**2 - planar_sq)
    m_c, m_d = params.m_main, params.m_deputy
    z_main = m_d * drop.sum() / (m_c + n * m_d)
    z_dep = z_main - drop
    # d/dt of the constraint: relative vertical rates from the planar motion.
    rel_rate = (xy[:, 0] * vxy[:, 0] + xy[:, 1] * vxy[:, 1]) / drop
    vz_main = -m_d * rel_rate.sum() / (m_c + n * m_d)
    vz_dep = vz_main + rel_rate
    dep_pos = np.column_stack([xy[:, 0], xy[:, 1], z_dep])
    dep_vel = np.column_stack([vxy[:, 0], vxy[:, 1], vz_dep])
    return SystemState(
        t=0.0,
        main_position=np.array([0.0, 0.0, z_main]),
        main_velocity=np.array([0.0, 0.0, vz_main]),
        deputy_positions=dep_pos,
        deputy_velocities=dep_vel,
    )


@dataclass(frozen=True)
class DesignRow:
    """One feasible coprime frequency pair with its admissible deputy counts."""

    p: int
    q: int
    mass_ratio: Fraction
    type1_admissible_n: tuple[int, ...]
    type2_note: str


def enumerate_designs(p_max: int, q_max: int, n_max: int) -> list[DesignRow]:
    """All coprime (p, q) with p/q < sqrt(3)/2 up to the given bounds.

    For Type I the listed N are those passing the phase-independent
    arithmetic (N coprime with both p and q); suitable phases then exist
    for the remaining conditions.  Type II accepts every N >= 2 given
    suitable phases.  Rows are ordered by (q, p) as in the usual table.
    """
    if p_max < 1 or q_max < 1 or n_max < 2:
        raise ValueError("bounds must be >= 1 (and n_max >= 2)")
    rows = []
    for q in range(2, q_max + 1):
        for p in range(1, min(p_max, q) + 1):
            if gcd(p, q) != 1 or 4 * p * p >= 3 * q * q:
                continue
            admissible = tuple(
                n for n in range(2, n_max + 1) if gcd(n, p) == 1 and gcd(n, q) == 1
            )
            rows.append(
                DesignRow(
                    p=p,
                    q=q,
                    mass_ratio=mass_ratio_for(p, q),
                    type1_admissible_n=admissible,
                    type2_note="all N >= 2 (phases permitting)",
                )
            )
    return rows
