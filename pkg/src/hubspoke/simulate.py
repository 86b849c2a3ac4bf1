"""Full nonlinear propagation of the tethered formation in the LVLH frame.

Every body follows the linearized orbital relative-motion equations
(x'' = 2 w z', y'' = -w^2 y, z'' = -2 w x' + 3 w^2 z) plus the tether
terms: a slack tether exerts nothing, a stretched one pulls the deputy
toward the hub with k (sep - l0) + b d(sep)/dt along the line of sight,
and exactly the opposite force acts on the hub.  Integration is an
adaptive embedded Runge-Kutta 5(4) pair with the step capped at a
fraction of the fastest tether oscillation period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import SystemParams
from .errors import (
    CoincidentBodiesError,
    NonfiniteStateError,
    StepUnderflowError,
)

__all__ = [
    "SystemState",
    "IntegratorStats",
    "Trajectory",
    "tether_tension",
    "system_derivative",
    "integrate",
]

# Separation below which the tension direction is considered undefined, m.
EPS_SEPARATION = 1e-9
# Fraction of the fastest tether period used as the step-size cap.
MAX_STEP_FRACTION = 1.0 / 20.0
RTOL_RANGE = (1e-13, 1e-6)


def _as_readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SystemState:
    """Time-stamped LVLH positions and velocities of hub plus N deputies."""

    t: float
    main_position: np.ndarray
    main_velocity: np.ndarray
    deputy_positions: np.ndarray
    deputy_velocities: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "main_position", _as_readonly(self.main_position))
        object.__setattr__(self, "main_velocity", _as_readonly(self.main_velocity))
        object.__setattr__(self, "deputy_positions", _as_readonly(self.deputy_positions))
        object.__setattr__(self, "deputy_velocities", _as_readonly(self.deputy_velocities))
        if self.main_position.shape != (3,) or self.main_velocity.shape != (3,):
            raise ValueError("main position/velocity must be 3-vectors")
        n = self.deputy_positions.shape[0]
        if self.deputy_positions.shape != (n, 3) or self.deputy_velocities.shape != (n, 3):
            raise ValueError("deputy arrays must have shape (N, 3)")
        for arr in (self.main_position, self.main_velocity, self.deputy_positions, self.deputy_velocities):
            if not np.all(np.isfinite(arr)):
                raise ValueError("state components must be finite")

    @property
    def n_deputies(self) -> int:
        return self.deputy_positions.shape[0]

    def to_vector(self) -> np.ndarray:
        """Pack as (6 (N+1),): hub block first, then one block per deputy."""
        n = self.n_deputies
        vec = np.empty(6 * (n + 1))
        vec[0:3] = self.main_position
        vec[3:6] = self.main_velocity
        body = vec[6:].reshape(n, 6)
        body[:, :3] = self.deputy_positions
        body[:, 3:] = self.deputy_velocities
        return vec

    @classmethod
    def from_vector(cls, t: float, vec: np.ndarray, n_deputies: int) -> "SystemState":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (6 * (n_deputies + 1),):
            raise ValueError(f"expected length {6 * (n_deputies + 1)}, got {vec.shape}")
        body = vec[6:].reshape(n_deputies, 6)
        return cls(
            t=float(t),
            main_position=vec[0:3],
            main_velocity=vec[3:6],
            deputy_positions=body[:, :3],
            deputy_velocities=body[:, 3:],
        )


@dataclass(frozen=True)
class IntegratorStats:
    steps: int
    rejected: int
    max_error_estimate: float


@dataclass(frozen=True)
class Trajectory:
    """Dense propagation output at the requested output times."""

    params: SystemParams
    times: np.ndarray
    data: np.ndarray  # (n_out, 6 (N+1)) packed states
    stats: IntegratorStats = field(compare=False)

    def __post_init__(self):
        object.__setattr__(self, "times", _as_readonly(self.times))
        object.__setattr__(self, "data", _as_readonly(self.data))
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("output times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.size

    @property
    def n_deputies(self) -> int:
        return self.params.n_deputies

    @property
    def main_positions(self) -> np.ndarray:
        return self.data[:, 0:3]

    @property
    def main_velocities(self) -> np.ndarray:
        return self.data[:, 3:6]

    @property
    def deputy_positions(self) -> np.ndarray:
        n = self.n_deputies
        return self.data[:, 6:].reshape(len(self), n, 6)[:, :, :3]

    @property
    def deputy_velocities(self) -> np.ndarray:
        n = self.n_deputies
        return self.data[:, 6:].reshape(len(self), n, 6)[:, :, 3:]

    def state_at(self, index: int) -> SystemState:
        return SystemState.from_vector(float(self.times[index]), self.data[index], self.n_deputies)


def tether_tension(p: SystemParams, r_main, r_deputy, v_main, v_deputy) -> np.ndarray:
    """Visco-elastic tether force on one deputy, zero while slack.

    When the separation exceeds the slack length the magnitude is
    k (sep - l0) + b d(sep)/dt and the direction points from the deputy
    to the hub; the hub receives exactly the opposite force.
    """
    r_main = np.asarray(r_main, dtype=float)
    r_deputy = np.asarray(r_deputy, dtype=float)
    d = r_main - r_deputy
    sep = float(np.linalg.norm(d))
    if sep < EPS_SEPARATION:
        raise CoincidentBodiesError(f"separation {sep} below {EPS_SEPARATION}")
    if sep <= p.slack_length:
        return np.zeros(3)
    dv = np.asarray(v_main, dtype=float) - np.asarray(v_deputy, dtype=float)
    rate = float(d @ dv) / sep
    mag = p.stiffness * (sep - p.slack_length) + p.damping * rate
    return (mag / sep) * d


def system_derivative(p: SystemParams, s: SystemState) -> np.ndarray:
    """Packed time derivative of the full state.

    Hub and deputies each follow the relative-motion accelerations plus
    their tether terms; the hub receives minus the sum of all deputy
    tensions, so total tether force over the system is identically zero.
    Coincident bodies are harmless here: the indicator keeps the tether
    force zero before its direction would be needed.
    """
    if s.n_deputies != p.n_deputies:
        raise ValueError(f"state has {s.n_deputies} deputies, params {p.n_deputies}")
    return _kernels.rhs_numpy(
        s.to_vector(),
        p.n_deputies,
        p.m_main,
        p.m_deputy,
        p.stiffness,
        p.damping,
        p.slack_length,
        p.mean_motion,
    )


def _output_times(t0: float, t_end: float, stride: float) -> np.ndarray:
    n_strides = int(math.floor((t_end - t0) / stride + 1e-9))
    times = t0 + stride * np.arange(n_strides + 1)
    if t_end - times[-1] > 1e-9 * max(1.0, abs(t_end)):
        times = np.append(times, t_end)
    else:
        times[-1] = t_end
    return times


def integrate(
    p: SystemParams,
    s0: SystemState,
    t_end: float,
    rtol: float = 1e-10,
    output_stride: float | None = None,
    fixed_step: float | None = None,
    max_step: float | None = None,
) -> Trajectory:
    """Propagate from ``s0`` to ``t_end`` with dense output every
    ``output_stride`` seconds (default: 1/1000 of the span).

    The error norm scales positions against the slack length and
    velocities against slack length times mean motion, on top of the
    relative tolerance.  ``fixed_step`` bypasses the adaptive controller
    (used for step-halving convergence checks).  Deterministic for
    identical inputs and configuration.
    """
    if s0.n_deputies != p.n_deputies:
        raise ValueError(f"state has {s0.n_deputies} deputies, params {p.n_deputies}")
    if not t_end > s0.t:
        raise ValueError(f"t_end {t_end} must exceed the initial time {s0.t}")
    if not RTOL_RANGE[0] <= rtol <= RTOL_RANGE[1]:
        raise ValueError(f"rtol {rtol} outside {RTOL_RANGE}")
    if output_stride is None:
        output_stride = (t_end - s0.t) / 1000.0
    if output_stride <= 0.0:
        raise ValueError("output_stride must be positive")

    omega_fast = math.sqrt(p.stiffness / p.m_deputy)
    h_max = MAX_STEP_FRACTION * 2.0 * math.pi / omega_fast
    if max_step is not None:
        h_max = min(h_max, max_step)
    h_init = 0.01 * h_max

    y0 = s0.to_vector()
    atol = np.empty_like(y0)
    blocks = atol.reshape(-1, 6)
    blocks[:, :3] = rtol * p.slack_length
    blocks[:, 3:] = rtol * p.slack_length * p.mean_motion

    times = _output_times(s0.t, float(t_end), float(output_stride))
    out, status, steps, rejected, max_err = _kernels.integrate_adaptive(
        y0,
        float(s0.t),
        times,
        float(rtol),
        atol,
        float(h_max),
        float(h_init),
        float(fixed_step) if fixed_step else 0.0,
        p.n_deputies,
        p.m_main,
        p.m_deputy,
        p.stiffness,
        p.damping,
        p.slack_length,
        p.mean_motion,
    )
    if status == _kernels.STATUS_STEP_UNDERFLOW:
        raise StepUnderflowError(
            f"step controller fell below {_kernels.H_MIN} s at step {steps}"
        )
    if status == _kernels.STATUS_NONFINITE:
        raise NonfiniteStateError(f"state became non-finite after {steps} steps")
    return Trajectory(
        params=p,
        times=times,
        data=out,
        stats=IntegratorStats(steps=int(steps), rejected=int(rejected), max_error_estimate=float(max_err)),
    )
