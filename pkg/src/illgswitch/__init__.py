"""Inertial macrospin switching: simulation, closed-form approximations,
and precessional pulse planning.

The package models a single magnetization unit vector with inertial
Landau-Lifshitz-Gilbert dynamics, evaluates two-time-scale closed forms
for the driven phase, and plans ballistic switching pulses whose
switch-off window it can check against the energy basin of the target
well.  A compiled adaptive Runge-Kutta stepper provides the reference
numerical solution.
"""

from .errors import (ConfigError, HypothesisError, IllgswitchError,
                     InfeasiblePlanError, IntegrationError,
                     PoleProximityError, ThresholdError, ValidationError)
from .model import (FieldSchedule, MaterialParams, SpinState, SwitchOutcome,
                    anisotropy_energy, d_gap, effective_field, energy_W,
                    equilibria, illg_rhs)
from .frames import (ScaledParams, SphericalPoint, TimeMaps, build_C,
                     build_E_explicit, build_scaled, from_spherical,
                     gamma_matrix, initial_orientation, lambda_matrix,
                     scaled_from_hats, to_spherical,
                     unitary_diagonalization_report)
from .approx import (ApproxSolution, ValidityThresholds, angles_leq2,
                     fundamental_matrix, m_leq1, m_leq2, thresholds,
                     variation_of_constants, velocity_leq1)
from .planner import (ApproximationBundle, BasinVerdict, PlanCase,
                      PlannedCheck, SwitchPlan, admissible_b,
                      basin_membership, build_approximation, compute_plan,
                      nearest_resonant_b, plan_switching,
                      planned_state_check)
from .integrator import (EnergyAudit, IntegratorConfig, SweepPoint,
                         Trajectory, energy_audit, integrate, sweep)
from .config import (ExperimentConfig, ResolvedExperiment, dump_config,
                     load_config, parse_config)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "HypothesisError", "IllgswitchError",
    "InfeasiblePlanError", "IntegrationError", "PoleProximityError",
    "ThresholdError", "ValidationError",
    "FieldSchedule", "MaterialParams", "SpinState", "SwitchOutcome",
    "anisotropy_energy", "d_gap", "effective_field", "energy_W",
    "equilibria", "illg_rhs",
    "ScaledParams", "SphericalPoint", "TimeMaps", "build_C",
    "build_E_explicit", "build_scaled", "from_spherical", "gamma_matrix",
    "initial_orientation", "lambda_matrix", "scaled_from_hats",
    "to_spherical", "unitary_diagonalization_report",
    "ApproxSolution", "ValidityThresholds", "angles_leq2",
    "fundamental_matrix", "m_leq1", "m_leq2", "thresholds",
    "variation_of_constants", "velocity_leq1",
    "ApproximationBundle", "BasinVerdict", "PlanCase", "PlannedCheck",
    "SwitchPlan", "admissible_b", "basin_membership", "build_approximation",
    "compute_plan", "nearest_resonant_b", "plan_switching",
    "planned_state_check",
    "EnergyAudit", "IntegratorConfig", "SweepPoint", "Trajectory",
    "energy_audit", "integrate", "sweep",
    "ExperimentConfig", "ResolvedExperiment", "dump_config", "load_config",
    "parse_config",
    "__version__",
]
