"""Linearized dynamics about the vertical equilibrium.

The small-displacement equations decouple into the free motion of the
system CoM, a 4x4 in-plane block ``A`` for the deputy-centroid motion
relative to the main satellite, and a 4x4 block ``A1`` governing every
difference of deputy displacements.  Both blocks act on the state
(dx, dx', dz, dz'); the out-of-plane component oscillates harmonically
on its own.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from .core import SystemParams, stability_deputy
from .errors import DegenerateTableError, UnstableParamsError

__all__ = [
    "ModeFrequencies",
    "StabilityVerdict",
    "com_relative_matrix",
    "deputy_relative_matrix",
    "char_poly_com",
    "char_poly_deputy",
    "routh_hurwitz_quartic",
    "stability_verdict_com",
    "stability_verdict_deputy",
    "mode_frequencies",
    "mode_frequencies_asymptotic",
]


@dataclass(frozen=True)
class ModeFrequencies:
    """Oscillation frequencies of the decoupled blocks, rad/s.

    ``omega_x``/``omega_z`` are the two deputy-difference in-plane modes,
    ``omega_y`` the out-of-plane one; ``omega_com_x``/``omega_com_y`` are
    the in-plane and out-of-plane rates of the deputy-centroid block in
    the rigid limit (sqrt(3) and 2 times the mean motion).
    """

    omega_x: float
    omega_y: float
    omega_z: float
    omega_com_x: float
    omega_com_y: float


class StabilityVerdict(enum.Enum):
    STABLE = "stable"
    MARGINAL = "marginal"
    UNSTABLE = "unstable"


def com_relative_matrix(p: SystemParams) -> np.ndarray:
    """First-order matrix of the deputy-centroid motion relative to the hub.

    State order (dx, dx', dz, dz'); the x restoring rate is 3 omega0^2
    (the stretch ratio cancels the reduced mass), the z row carries
    3 omega0^2 - k/m_r and -b/m_r.
    """
    w = p.mean_motion
    m_r = p.reduced_mass
    return np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [-3.0 * w**2, 0.0, 0.0, 2.0 * w],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, -2.0 * w, 3.0 * w**2 - p.stiffness / m_r, -p.damping / m_r],
        ]
    )


def deputy_relative_matrix(p: SystemParams) -> np.ndarray:
    """First-order matrix of any weighted difference of deputy motions.

    Same layout as ``com_relative_matrix`` with the deputy mass in place
    of the reduced mass and the x restoring rate lambda* k / m_D.
    """
    w = p.mean_motion
    m_d = p.m_deputy
    return np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [-p.stretch_ratio * p.stiffness / m_d, 0.0, 0.0, 2.0 * w],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, -2.0 * w, 3.0 * w**2 - p.stiffness / m_d, -p.damping / m_d],
        ]
    )


def _block_char_poly(restore: float, coupling: float, drag: float, w: float) -> np.ndarray:
    # det(M - rho I) expanded from the 4x4 block structure:
    # (rho^2 + restore)(rho^2 + drag rho - coupling) + 4 w^2 rho^2.
    return np.array(
        [
            1.0,
            drag,
            restore - coupling + 4.0 * w**2,
            restore * drag,
            -restore * coupling,
        ]
    )


def char_poly_com(p: SystemParams, normalized: bool = False) -> np.ndarray:
    """Characteristic polynomial of ``com_relative_matrix``, leading first.

    With ``normalized`` the eigenvalue variable is rho/omega0, which keeps
    all five coefficients O(1) regardless of units.
    """
    w = p.mean_motion
    m_r = p.reduced_mass
    c = _block_char_poly(3.0 * w**2, 3.0 * w**2 - p.stiffness / m_r, p.damping / m_r, w)
    if normalized:
        c = c / w ** np.arange(5.0)
    return c


def char_poly_deputy(p: SystemParams, normalized: bool = False) -> np.ndarray:
    """Characteristic polynomial of ``deputy_relative_matrix``, leading first."""
    w = p.mean_motion
    m_d = p.m_deputy
    c = _block_char_poly(
        p.stretch_ratio * p.stiffness / m_d,
        3.0 * w**2 - p.stiffness / m_d,
        p.damping / m_d,
        w,
    )
    if normalized:
        c = c / w ** np.arange(5.0)
    return c


def _exact_inputs(coeffs) -> bool:
    return all(isinstance(c, Rational) for c in coeffs)


def routh_hurwitz_quartic(coeffs, zero_tol: float = 1e-12) -> bool:
    """Hurwitz test for a quartic: True iff every root has negative real part.

    ``coeffs`` are the five coefficients with the leading one first and
    positive.  Rational inputs (int/Fraction) are processed exactly;
    floats use ``zero_tol`` to flag ill-conditioned pivots, raising
    ``DegenerateTableError`` so the caller can handle the marginal case.
    """
    if len(coeffs) != 5:
        raise ValueError("expected five quartic coefficients, leading first")
    exact = _exact_inputs(coeffs)
    a0, a1, a2, a3, a4 = (Fraction(c) for c in coeffs) if exact else map(float, coeffs)
    if a0 <= 0:
        raise ValueError("leading coefficient must be positive")

    def near_zero(x) -> bool:
        return x == 0 if exact else abs(x) <= zero_tol

    if near_zero(a1):
        if exact and a1 == 0:
            return False  # missing rho^3 term: roots cannot all be in the open left half-plane
        raise DegenerateTableError(f"rho^3 coefficient {a1} within tolerance of zero")
    b1 = (a1 * a2 - a0 * a3) / a1
    if near_zero(b1):
        if exact and b1 == 0:
            return False
        raise DegenerateTableError(f"first Routh pivot {b1} within tolerance of zero")
    c1 = (b1 * a3 - a1 * a4) / b1
    if not exact and (near_zero(c1) or near_zero(a4)):
        raise DegenerateTableError("second Routh pivot within tolerance of zero")
    return a1 > 0 and b1 > 0 and c1 > 0 and a4 > 0


def stability_verdict_com(p: SystemParams, zero_tol: float = 1e-9) -> StabilityVerdict:
    """Tri-state asymptotic-stability verdict for the centroid-relative block.

    Works on the omega0-normalized polynomial so the tolerance is
    dimensionless; boundary cases report MARGINAL rather than guessing.
    """
    c = char_poly_com(p, normalized=True)
    try:
        stable = routh_hurwitz_quartic(list(c), zero_tol=zero_tol)
    except DegenerateTableError:
        return StabilityVerdict.MARGINAL
    return StabilityVerdict.STABLE if stable else StabilityVerdict.UNSTABLE


def stability_verdict_deputy(p: SystemParams, zero_tol: float = 1e-9) -> StabilityVerdict:
    """Tri-state asymptotic-stability verdict for the deputy-difference block."""
    c = char_poly_deputy(p, normalized=True)
    try:
        stable = routh_hurwitz_quartic(list(c), zero_tol=zero_tol)
    except DegenerateTableError:
        return StabilityVerdict.MARGINAL
    return StabilityVerdict.STABLE if stable else StabilityVerdict.UNSTABLE


def _difference_mode_rates(p: SystemParams) -> tuple[float, float]:
    # Undamped biquadratic rho^4 + B rho^2 + C = 0 solved in closed form.
    w = p.mean_motion
    kk = p.stiffness / p.m_deputy
    restore = p.stretch_ratio * kk
    b_coef = (p.stretch_ratio + 1.0) * kk + w**2
    c_coef = restore * (kk - 3.0 * w**2)
    if c_coef < 0.0:
        raise UnstableParamsError(
            "deputy-difference spectrum has a positive real eigenvalue "
            f"(stiffness {p.stiffness} below 3 omega0^2 m_D)"
        )
    disc = math.sqrt(max(b_coef**2 - 4.0 * c_coef, 0.0))
    omega_x = math.sqrt(max((b_coef - disc) / 2.0, 0.0))
    omega_z = math.sqrt((b_coef + disc) / 2.0)
    return omega_x, omega_z


def mode_frequencies(p: SystemParams) -> ModeFrequencies:
    """Exact undamped oscillation frequencies of the decoupled blocks.

    ``omega_y`` comes from the closed form
    omega0 * sqrt((4 m_C + N m_D)/(m_C + N m_D)); ``omega_x`` and
    ``omega_z`` are the two positive imaginary parts of the
    deputy-difference spectrum evaluated with the damping set to zero.

    Raises ``UnstableParamsError`` when that spectrum is not purely
    imaginary (stiffness below the deputy threshold).
    """
    w = p.mean_motion
    m_c, m_d, n = p.m_main, p.m_deputy, p.n_deputies
    omega_y = w * math.sqrt((4.0 * m_c + n * m_d) / (m_c + n * m_d))
    omega_x, omega_z = _difference_mode_rates(p)
    return ModeFrequencies(
        omega_x=omega_x,
        omega_y=omega_y,
        omega_z=omega_z,
        omega_com_x=math.sqrt(3.0) * w,
        omega_com_y=2.0 * w,
    )


def mode_frequencies_asymptotic(p: SystemParams) -> ModeFrequencies:
    """Large-rigidity approximations of the in-plane difference modes.

    omega_x ~ sqrt(3 m_C/(N m_D + m_C)) * omega0 * (1 - 2 m_D omega0^2/k)
    and omega_z ~ sqrt(k/m_D) * (1 + m_D omega0^2/(2k)); the relative
    error of both shrinks as 1/k^2.  ``omega_y`` stays exact.
    """
    if not stability_deputy(p):
        raise UnstableParamsError("asymptotic rates need the deputy stiffness condition")
    w = p.mean_motion
    m_c, m_d, n = p.m_main, p.m_deputy, p.n_deputies
    corr = m_d * w**2 / p.stiffness
    omega_x = w * math.sqrt(3.0 * m_c / (n * m_d + m_c)) * (1.0 - 2.0 * corr)
    omega_z = math.sqrt(p.stiffness / m_d) * (1.0 + 0.5 * corr)
    omega_y = w * math.sqrt((4.0 * m_c + n * m_d) / (m_c + n * m_d))
    return ModeFrequencies(
        omega_x=omega_x,
        omega_y=omega_y,
        omega_z=omega_z,
        omega_com_x=math.sqrt(3.0) * w,
        omega_com_y=2.0 * w,
    )
