"""Physical parameters, vertical equilibrium and closed-form stability tests.

The system is one main satellite of mass ``m_C`` tied by ``N`` identical
visco-elastic tethers (stiffness ``k``, damping ``b``, slack length ``l0``)
to ``N`` deputy satellites of mass ``m_D`` each, with the formation's
center of mass on a circular orbit of mean motion ``omega0``.  All
quantities are SI; the LVLH frame has x along-track, y orbit-normal and
z toward Earth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import EquilibriumInfeasibleError

if TYPE_CHECKING:  # pragma: no cover
    from .simulate import SystemState

__all__ = [
    "GEO_MEAN_MOTION",
    "SystemParams",
    "EquilibriumConfig",
    "validate_params",
    "stability_rigid",
    "stability_deputy",
    "vertical_equilibrium",
    "relative_energy",
    "potential_hessian",
]

# Mean motion of a geostationary orbit (one sidereal day), rad/s.
GEO_MEAN_MOTION = 2.0 * math.pi / 86164.0905


@dataclass(frozen=True)
class SystemParams:
    """Masses, tether constants and orbit rate of the N+1 body system."""

    n_deputies: int
    m_main: float
    m_deputy: float
    stiffness: float
    damping: float
    slack_length: float
    mean_motion: float

    @property
    def reduced_mass(self) -> float:
        """m_C*m_D / (N*m_D + m_C), the mass governing hub-relative motion."""
        return self.m_main * self.m_deputy / (self.n_deputies * self.m_deputy + self.m_main)

    @property
    def stretch_ratio(self) -> float:
        """Relative tether elongation (l* - l0)/l* at the vertical equilibrium."""
        return 3.0 * self.mean_motion**2 * self.reduced_mass / self.stiffness

    @property
    def rigidity(self) -> float:
        """Dimensionless tether rigidity k / (3 omega0^2 m_D)."""
        return self.stiffness / (3.0 * self.mean_motion**2 * self.m_deputy)

    @property
    def orbit_period(self) -> float:
        return 2.0 * math.pi / self.mean_motion

    @classmethod
    def from_design(
        cls,
        n_deputies: int,
        mass_ratio: float,
        rigidity: float,
        m_deputy: float = 10.0,
        slack_length: float = 1.0e4,
        mean_motion: float = GEO_MEAN_MOTION,
        damping_ratio: float = 0.0,
    ) -> "SystemParams":
        """Build params from the design quantities used throughout: the
        deputy-to-main mass ratio ``N*m_D/m_C``, the dimensionless rigidity
        ``k/(3 omega0^2 m_D)`` and the damping ratio ``b/(2 sqrt(k m_D))``.
        """
        m_main = n_deputies * m_deputy / float(mass_ratio)
        stiffness = rigidity * 3.0 * mean_motion**2 * m_deputy
        damping = damping_ratio * 2.0 * math.sqrt(stiffness * m_deputy)
        return cls(
            n_deputies=n_deputies,
            m_main=m_main,
            m_deputy=m_deputy,
            stiffness=stiffness,
            damping=damping,
            slack_length=slack_length,
            mean_motion=mean_motion,
        )


@dataclass(frozen=True)
class EquilibriumConfig:
    """Vertical relative equilibrium: all tethers stretched along z."""

    z_main: float
    z_deputy: float
    stretched_length: float
    tension_magnitude: float


def validate_params(p: SystemParams) -> list[str]:
    """Return descriptions of every violated parameter invariant.

    The list is empty for a valid set and deterministically ordered.
    """
    violations = []
    if p.n_deputies < 2:
        violations.append(f"n_deputies must be >= 2, got {p.n_deputies}")
    if not p.m_main > 0.0:
        violations.append(f"m_main must be positive, got {p.m_main}")
    if not p.m_deputy > 0.0:
        violations.append(f"m_deputy must be positive, got {p.m_deputy}")
    if not p.stiffness > 0.0:
        violations.append(f"stiffness must be positive, got {p.stiffness}")
    if p.damping < 0.0:
        violations.append(f"damping must be non-negative, got {p.damping}")
    if not p.slack_length > 0.0:
        violations.append(f"slack_length must be positive, got {p.slack_length}")
    if not p.mean_motion > 0.0:
        violations.append(f"mean_motion must be positive, got {p.mean_motion}")
    return violations


def stability_rigid(p: SystemParams) -> bool:
    """True iff the tethers are stiff enough to hold the vertical equilibrium,
    k > 3 omega0^2 m_r.  Necessary for the equilibrium to exist at all."""
    return p.stiffness > 3.0 * p.mean_motion**2 * p.reduced_mass


def stability_deputy(p: SystemParams) -> bool:
    """True iff the deputy-difference dynamics is (marginally) stable,
    k >= 3 omega0^2 m_D.  Implies ``stability_rigid`` since m_r < m_D."""
    return p.stiffness >= 3.0 * p.mean_motion**2 * p.m_deputy


def vertical_equilibrium(p: SystemParams) -> EquilibriumConfig:
    """Solve the static configuration with every tether along the vertical.

    Deputies sit at z_i* and the main satellite at z_C* = -(N m_D/m_C) z_i*
    so the center of mass stays at the origin; the common stretched length
    is l* = z_i* - z_C* and each tension equals k (l* - l0).

    Raises ``EquilibriumInfeasibleError`` when the required stiffness
    condition fails (denominator of z_i* non-positive).
    """
    denom = (p.n_deputies * p.m_deputy + p.m_main) / p.m_main - 3.0 * p.m_deputy * p.mean_motion**2 / p.stiffness
    if denom <= 0.0:
        raise EquilibriumInfeasibleError(
            f"stiffness {p.stiffness} cannot support a vertical equilibrium "
            f"(needs k > 3 omega0^2 m_r = {3.0 * p.mean_motion ** 2 * p.reduced_mass})"
        )
    z_dep = p.slack_length / denom
    z_main = -(p.n_deputies * p.m_deputy / p.m_main) * z_dep
    l_star = z_dep - z_main
    return EquilibriumConfig(
        z_main=z_main,
        z_deputy=z_dep,
        stretched_length=l_star,
        tension_magnitude=p.stiffness * (l_star - p.slack_length),
    )


def _split_state(p: SystemParams, s: "SystemState"):
    r_main = np.asarray(s.main_position, dtype=float)
    v_main = np.asarray(s.main_velocity, dtype=float)
    r_dep = np.asarray(s.deputy_positions, dtype=float)
    v_dep = np.asarray(s.deputy_velocities, dtype=float)
    if r_dep.shape != (p.n_deputies, 3):
        raise ValueError(
            f"state has {r_dep.shape[0]} deputies, params expect {p.n_deputies}"
        )
    return r_main, v_main, r_dep, v_dep


def _potential(p: SystemParams, r_main: np.ndarray, r_dep: np.ndarray) -> float:
    # Tidal part: (m w^2/2)(y'^2 - 3 z'^2) per body, positions relative to
    # the system CoM; the elastic part only engages stretched tethers.
    m_c, m_d, n = p.m_main, p.m_deputy, p.n_deputies
    r_cm = (m_c * r_main + m_d * r_dep.sum(axis=0)) / (m_c + n * m_d)
    rc = r_main - r_cm
    rd = r_dep - r_cm
    w2 = p.mean_motion**2
    tidal = 0.5 * m_d * w2 * np.sum(rd[:, 1] ** 2 - 3.0 * rd[:, 2] ** 2)
    tidal += 0.5 * m_c * w2 * (rc[1] ** 2 - 3.0 * rc[2] ** 2)
    sep = np.linalg.norm(r_dep - r_main, axis=1)
    ext = np.where(sep > p.slack_length, sep - p.slack_length, 0.0)
    return float(tidal + 0.5 * p.stiffness * np.sum(ext**2))


def relative_energy(p: SystemParams, s: "SystemState") -> float:
    """Energy of motion relative to the system CoM (a Lyapunov function).

    Kinetic energy of the CoM-relative velocities plus the tidal potential
    and the elastic energy of stretched tethers.  Conserved exactly when
    the damping vanishes, non-increasing otherwise.
    """
    r_main, v_main, r_dep, v_dep = _split_state(p, s)
    m_c, m_d, n = p.m_main, p.m_deputy, p.n_deputies
    v_cm = (m_c * v_main + m_d * v_dep.sum(axis=0)) / (m_c + n * m_d)
    kin = 0.5 * m_d * np.sum((v_dep - v_cm) ** 2) + 0.5 * m_c * np.sum((v_main - v_cm) ** 2)
    return float(kin) + _potential(p, r_main, r_dep)


def potential_hessian(p: SystemParams, step_scale: float = 1e-6) -> np.ndarray:
    """Second derivatives of the relative potential at the vertical equilibrium.

    The 3N deputy displacements are the free coordinates; the main
    satellite moves as -(m_D/m_C) * sum of deputy displacements, which
    pins the CoM at the origin.  Central finite differences with step
    ``step_scale * l*``.  Positive definite exactly when both stability
    conditions hold strictly.
    """
    eq = vertical_equilibrium(p)
    n = p.n_deputies
    base_dep = np.zeros((n, 3))
    base_dep[:, 2] = eq.z_deputy
    base_main = np.array([0.0, 0.0, eq.z_main])
    ratio = p.m_deputy / p.m_main
    h = step_scale * eq.stretched_length

    def value(u: np.ndarray) -> float:
        dep = base_dep + u.reshape(n, 3)
        main = base_main - ratio * u.reshape(n, 3).sum(axis=0)
        return _potential(p, main, dep)

    dim = 3 * n
    hess = np.empty((dim, dim))
    v0 = value(np.zeros(dim))
    for a in range(dim):
        ea = np.zeros(dim)
        ea[a] = h
        vp = value(ea)
        vm = value(-ea)
        hess[a, a] = (vp - 2.0 * v0 + vm) / h**2
        for b_ in range(a + 1, dim):
            eb = np.zeros(dim)
            eb[b_] = h
            vpp = value(ea + eb)
            vpm = value(ea - eb)
            vmp = value(-ea + eb)
            vmm = value(-ea - eb)
            hess[a, b_] = hess[b_, a] = (vpp - vpm - vmp + vmm) / (4.0 * h**2)
    return 0.5 * (hess + hess.T)
