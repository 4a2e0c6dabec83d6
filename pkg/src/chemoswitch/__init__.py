"""Two-phenotype chemotaxis model: stability analysis and 1D/2D/radial solvers."""
__version__ = "0.1.0"

from .config import ConfigError, ExperimentConfig, Mode, parse_config
from .experiment import ExperimentResult, load_run, run_experiment
from .grid1d import Grid1D, StateField1D, initial_condition_1d, integrate_1d, spatial_rhs_1d
from .grid2d import Grid2D, Rng2DSeed, StateField2D, initial_condition_2d, run_2d, step_2d
from .model import (
    Case,
    DimensionalParams,
    ModelParams,
    NondimScales,
    SwitchingSpec,
    Variant,
    kinetic_G,
    nondimensionalize,
    rhs_reaction,
    switching_rates,
)
from .patterns import (
    Oscillation,
    PatternSummary,
    Phenotype,
    count_peaks,
    count_spots_2d,
    detect_extinction,
    detect_oscillation,
    mass_audit,
    summarize,
)
from .radial import RadialGrid, RadialState, radial_initial_condition, radial_rhs, run_radial
from .runs import RunArtifacts, Snapshot
from .stability import (
    chi_threshold,
    dispersion_coeffs,
    eigenvalues,
    eigenvalue_map,
    h_values_analytic,
    h_values_numeric,
    homogeneous_stability,
    stability_report,
    steady_state,
)
from .timestep import TimeController

__all__ = [
    "Case",
    "ConfigError",
    "DimensionalParams",
    "ExperimentConfig",
    "ExperimentResult",
    "Grid1D",
    "Grid2D",
    "Mode",
    "ModelParams",
    "NondimScales",
    "Oscillation",
    "PatternSummary",
    "Phenotype",
    "RadialGrid",
    "RadialState",
    "Rng2DSeed",
    "RunArtifacts",
    "Snapshot",
    "StateField1D",
    "StateField2D",
    "SwitchingSpec",
    "TimeController",
    "Variant",
    "chi_threshold",
    "count_peaks",
    "count_spots_2d",
    "detect_extinction",
    "detect_oscillation",
    "dispersion_coeffs",
    "eigenvalue_map",
    "eigenvalues",
    "h_values_analytic",
    "h_values_numeric",
    "homogeneous_stability",
    "initial_condition_1d",
    "initial_condition_2d",
    "integrate_1d",
    "kinetic_G",
    "load_run",
    "mass_audit",
    "nondimensionalize",
    "parse_config",
    "radial_initial_condition",
    "radial_rhs",
    "rhs_reaction",
    "run_2d",
    "run_experiment",
    "run_radial",
    "spatial_rhs_1d",
    "stability_report",
    "step_2d",
    "steady_state",
    "summarize",
    "switching_rates",
]
