"""Exception types shared across the package."""


class HubspokeError(Exception):
    """Base class for all package-specific errors."""


class EquilibriumInfeasibleError(HubspokeError):
    """Tethers too compliant to balance the gravity-gradient pull."""


class DegenerateTableError(HubspokeError):
    """A Routh table pivot fell within tolerance of zero."""


class UnstableParamsError(HubspokeError):
    """Modal frequencies requested for a spectrum that is not purely imaginary."""


class RatioInfeasibleError(HubspokeError):
    """Frequency ratio admits no positive deputy-to-main mass ratio."""


class CollidingFormationError(HubspokeError):
    """Deputy trajectories intersect (minimum separation below threshold)."""


class AmplitudeTooLargeError(HubspokeError):
    """Planar amplitude exceeds the stretched tether length."""


class NearCollisionError(HubspokeError):
    """Relative radius too small for a well-conditioned winding angle."""


class UnbalancedSpecError(HubspokeError):
    """Operation requires a balanced formation (vanishing deputy centroid)."""


class CoincidentBodiesError(HubspokeError):
    """Main and deputy positions coincide; tension direction undefined."""


class StepUnderflowError(HubspokeError):
    """Adaptive step controller drove the step size below the hard floor."""


class NonfiniteStateError(HubspokeError):
    """Propagated state left the range of finite floating-point values."""


class OptimizationDivergedError(HubspokeError):
    """No interior minimum bracketed on the search interval."""


class SpecMismatchError(HubspokeError):
    """Trajectory and formation specification disagree."""


class ConfigError(HubspokeError):
    """Configuration file or override is invalid."""
