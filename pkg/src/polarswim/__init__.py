"""Pseudospectral simulator for the coupled Stokes / polar-order suspension model.

The polar order field ``p`` lives on a periodic box and is advanced with an
integrating-factor RK4 scheme; the suspension velocity ``u`` is slaved to
``p`` through a Stokes solve scaled by the coupling parameter ``epsilon``.
"""
from .config import ConfigError, InitSpectrum, RunConfig, dump_config, load_config, parse_config
from .diagnostics import (
    EnergyLedger,
    GronwallReport,
    apriori_bound_check,
    energy_ledger,
    energy_terms,
    gronwall_check,
    k_functional,
    relative_dissipation,
    relative_energy,
    velocity_bound_check,
    weak_strong_report,
)
from .experiments import epsilon_sweep, simulate, twin_run
from .params import (
    BaseCoefficients,
    CouplingInconsistency,
    ModelParams,
    ParameterError,
    PositivityViolation,
    StrictModeKappaNonzero,
    apply_coupling,
    linear_params,
)
from .spectral import Grid, random_solenoidal_field
from .timestep import AprioriBoundViolation, NonFinite, State, Trajectory, if_rk4_step, integrate, stable_dt

__version__ = "0.1.0"

__all__ = [
    "AprioriBoundViolation", "BaseCoefficients", "ConfigError", "CouplingInconsistency",
    "EnergyLedger", "Grid", "GronwallReport", "InitSpectrum", "ModelParams", "NonFinite",
    "ParameterError", "PositivityViolation", "RunConfig", "State", "StrictModeKappaNonzero",
    "Trajectory", "apply_coupling", "apriori_bound_check", "dump_config", "energy_ledger",
    "energy_terms", "epsilon_sweep", "gronwall_check", "if_rk4_step", "integrate",
    "k_functional", "linear_params", "load_config", "parse_config", "random_solenoidal_field",
    "relative_dissipation", "relative_energy", "simulate", "stable_dt", "twin_run",
    "velocity_bound_check", "weak_strong_report",
]
