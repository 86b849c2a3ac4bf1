"""Hub-and-spoke tethered satellite formations on Lissajous curves.

A library and CLI for designing the formations (frequency pairs, phases,
deputy counts), verifying them (balance, collision freedom, entanglement,
second-order cancellation, stability), and simulating the full nonlinear
tethered dynamics to measure how long the design holds up.
"""

from .core import (
    GEO_MEAN_MOTION,
    EquilibriumConfig,
    SystemParams,
    potential_hessian,
    relative_energy,
    stability_deputy,
    stability_rigid,
    validate_params,
    vertical_equilibrium,
)
from .formation import (
    AdmissibilityReport,
    FormationKind,
    FormationSpec,
    admissibility,
    collision_oracle,
    deputy_position,
    enumerate_designs,
    mass_ratio_for,
    min_separation,
    min_separation_scan,
    synthesize_initial_state,
)
from .harness import (
    DeviationReport,
    ScenarioConfig,
    ScenarioResult,
    deviation_metrics,
    optimize_mass_ratio,
    run_scenario,
)
from .lindyn import (
    ModeFrequencies,
    StabilityVerdict,
    com_relative_matrix,
    deputy_relative_matrix,
    mode_frequencies,
    mode_frequencies_asymptotic,
    routh_hurwitz_quartic,
)
from .perturb import SecondOrderSums, main_satellite_forcing, cancellation_hypothesis, second_order_sums
from .simulate import SystemState, Trajectory, integrate, system_derivative, tether_tension
from .topology import (
    EntanglementVerdict,
    entanglement_verdict,
    winding_matrix,
    winding_number_analytic,
    winding_number_numeric,
)

__version__ = "0.1.0"
