"""Pairwise winding numbers and tether entanglement classification.

The winding number of deputy j about deputy i over one formation period
is a homotopy invariant of the collision-free motion: if it is nonzero
the tethers tangle in a way no rotation-free deformation can undo, and
pairs with opposite winding signs cannot even be untangled by spinning
the hub.  Both a numeric argument tracker and the closed-form sign-count
evaluation are provided; they must agree exactly.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import NearCollisionError
from .formation import FormationKind, FormationSpec, deputy_position, validate_spec

__all__ = [
    "EntanglementVerdict",
    "winding_number_numeric",
    "winding_number_analytic",
    "winding_matrix",
    "entanglement_verdict",
]

# Relative radius below this fraction of amp_x makes the argument ill-conditioned.
EPS_RADIUS = 1e-6
# |cos| below this triggers the documented phase nudge in the sign-count formula.
DEGENERATE_COS_TOL = 1e-9
PHASE_NUDGE = 1e-6

_MAX_STEPS = 1 << 20


class EntanglementVerdict(enum.Enum):
    """Sufficient-condition verdict; NONE_DETECTED is not a proof of
    untangled motion (a braid-like tangle can hide from pairwise winding)."""

    NONE_DETECTED = "none-detected"
    WEAK = "weak"
    STRONG = "strong"


def _check_pair(spec: FormationSpec, i: int, j: int) -> None:
    bad = validate_spec(spec, check_frequency_ratio=False)
    if bad:
        raise ValueError("; ".join(bad))
    n = spec.n_deputies
    if not (1 <= i <= n and 1 <= j <= n) or i == j:
        raise ValueError(f"need two distinct deputy indices in 1..{n}, got ({i}, {j})")


def winding_number_numeric(spec: FormationSpec, i: int, j: int) -> int:
    """Turns of deputy j about deputy i per period, by argument tracking.

    The continuous argument of the relative position is accumulated over
    a uniform tau grid that is refined until every angular increment is
    below pi/2; the total angle must land on an integer multiple of
    2 pi within 1e-6.  Raises ``NearCollisionError`` when the relative
    radius drops below ``EPS_RADIUS * amp_x``.
    """
    _check_pair(spec, i, j)
    samples = 1 << 12
    while True:
        tau = np.linspace(0.0, 1.0, samples + 1)
        xi, yi = deputy_position(spec, i, tau)
        xj, yj = deputy_position(spec, j, tau)
        dx = xj - xi
        dy = yj - yi
        if np.min(np.hypot(dx, dy)) < EPS_RADIUS * abs(spec.amp_x):
            raise NearCollisionError(
                f"pair ({i}, {j}) approaches within {EPS_RADIUS:g} * amp_x"
            )
        steps = np.diff(np.arctan2(dy, dx))
        steps = (steps + np.pi) % (2.0 * np.pi) - np.pi
        if np.max(np.abs(steps)) < np.pi / 2.0:
            total = float(np.sum(steps))
            w = total / (2.0 * np.pi)
            if abs(w - round(w)) > 1e-6:
                raise NearCollisionError(
                    f"winding {w} of pair ({i}, {j}) did not close on an integer"
                )
            return int(round(w))
        if samples >= _MAX_STEPS:
            raise NearCollisionError(
                f"argument tracking for pair ({i}, {j}) exceeded {_MAX_STEPS} steps"
            )
        samples *= 2


def _sign_count(p: int, q: int, phase: float) -> float:
    # Half the alternating sign sum of cos(pi p s/q + phase) over
    # s = 1..2q; equals the winding of the reduced cosine curve.
    s = np.arange(1, 2 * q + 1)
    for _ in range(2):
        c = np.cos(np.pi * p * s / q + phase)
        if np.min(np.abs(c)) > DEGENERATE_COS_TOL:
            return 0.5 * float(np.sum((-1.0) ** s * np.sign(c)))
        phase = phase + PHASE_NUDGE
    raise NearCollisionError("degenerate sign argument persisted after phase nudge")


def winding_number_analytic(spec: FormationSpec, i: int, j: int) -> int:
    """Closed-form winding number from the alternating sign-count formula.

    Zero whenever p or q is even.  For both odd, the value is the reduced
    cosine-curve winding times sign(x0 y0) and, for Type I, the sign of
    f_{j-i} = sin(pi p (j-i)/N) sin(pi q (j-i)/N); Type II carries the
    pair phase (i+j)(q-p)/(q N) inside the sign count instead.
    """
    _check_pair(spec, i, j)
    p, q, n = spec.p, spec.q, spec.n_deputies
    if p % 2 == 0 or q % 2 == 0:
        return 0
    amp_sign = math.copysign(1.0, spec.amp_x * spec.amp_y)
    base_phase = spec.phase_x - (p / q) * (math.pi / 2.0 + spec.phase_y)
    if spec.kind is FormationKind.TYPE_I:
        f_pair = math.sin(math.pi * p * (j - i) / n) * math.sin(math.pi * q * (j - i) / n)
        if abs(f_pair) < 1e-15:
            raise NearCollisionError(
                f"pair ({i}, {j}) is degenerate (collision arithmetic fails)"
            )
        w_star = _sign_count(p, q, base_phase)
        return int(round(amp_sign * math.copysign(1.0, f_pair) * w_star))
    pair_shift = math.pi * (i + j) * (q - p) / (q * n)
    w_star = _sign_count(p, q, base_phase + pair_shift)
    return int(round(amp_sign * w_star))


def winding_matrix(spec: FormationSpec, method: str = "analytic") -> np.ndarray:
    """Symmetric N x N integer matrix of pairwise winding numbers (zero diagonal)."""
    if method not in ("analytic", "numeric"):
        raise ValueError(f"unknown method {method!r}")
    fn = winding_number_analytic if method == "analytic" else winding_number_numeric
    n = spec.n_deputies
    w = np.zeros((n, n), dtype=int)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            w[i - 1, j - 1] = w[j - 1, i - 1] = fn(spec, i, j)
    return w


def entanglement_verdict(spec: FormationSpec) -> EntanglementVerdict:
    """Classify entanglement by the parity and divisibility criteria.

    Both p and q odd guarantees at least weak entanglement (all windings
    are +-1); a Type I formation is additionally strongly entangled when
    neither q - p nor q + p is divisible by 2N (both winding signs then
    occur).  Everything else reports NONE_DETECTED, which only means the
    winding criterion is blind to it.
    """
    bad = validate_spec(spec, check_frequency_ratio=False)
    if bad:
        raise ValueError("; ".join(bad))
    p, q, n = spec.p, spec.q, spec.n_deputies
    if p % 2 == 0 or q % 2 == 0:
        return EntanglementVerdict.NONE_DETECTED
    if (
        spec.kind is FormationKind.TYPE_I
        and (q - p) % (2 * n) != 0
        and (q + p) % (2 * n) != 0
    ):
        return EntanglementVerdict.STRONG
    return EntanglementVerdict.WEAK
