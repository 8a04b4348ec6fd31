"""Hard-impact oscillator: exact simulation, grazing analysis and Jacobians
of the stroboscopic map, and the border-collision normal form."""

from .errors import (
    BorderStraddle,
    ChatterDetected,
    ConfigError,
    DegenerateGrazing,
    DegenerateSide,
    ImpactOscError,
    InsufficientDecades,
    NoConvergence,
    NoLocalMinimum,
    NumericalFailure,
    SingularAtGrazing,
    StepTooLarge,
)
from .grazing_zdm import GrazingInfo, ZdmResult, find_grazing_orbit, h_min, zdm, zdm_jacobian
from .hybrid_sim import ImpactEvent, Trajectory, apply_reset, next_impact, simulate, strobe_map
from .jacobian_analysis import (
    JacobianReport,
    SweepRecord,
    analytic_jacobian,
    find_fixed_point,
    fit_singularity_exponent,
    grazing_sweep,
    numeric_jacobian,
)
from .linear_flow import OscillatorConfig, State, flow, fundamental_matrix, particular_solution
from .normal_form import NfOrbit, NormalFormParams, nf_fixed_points, nf_from_impact, nf_iterate, nf_step

__version__ = "0.1.0"

__all__ = [
    "BorderStraddle",
    "ChatterDetected",
    "ConfigError",
    "DegenerateGrazing",
    "DegenerateSide",
    "GrazingInfo",
    "ImpactEvent",
    "ImpactOscError",
    "InsufficientDecades",
    "JacobianReport",
    "NfOrbit",
    "NoConvergence",
    "NoLocalMinimum",
    "NormalFormParams",
    "NumericalFailure",
    "OscillatorConfig",
    "SingularAtGrazing",
    "State",
    "StepTooLarge",
    "SweepRecord",
    "Trajectory",
    "ZdmResult",
    "analytic_jacobian",
    "apply_reset",
    "find_fixed_point",
    "find_grazing_orbit",
    "fit_singularity_exponent",
    "flow",
    "fundamental_matrix",
    "grazing_sweep",
    "h_min",
    "next_impact",
    "nf_fixed_points",
    "nf_from_impact",
    "nf_iterate",
    "nf_step",
    "numeric_jacobian",
    "particular_solution",
    "simulate",
    "strobe_map",
    "zdm",
    "zdm_jacobian",
]
