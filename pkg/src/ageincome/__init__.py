"""Calibration and simulation toolkit for an age-conditional income process."""

__version__ = "0.1.0"

from .errors import (
    AgeRangeError,
    ConfigError,
    DataError,
    EstimationError,
    SchemaError,
    ToolkitError,
)
from .gmm import WaveMoments, compute_wave_moments, estimate_gmm, pool_moments
from .ingest import (
    DeflatorSeries,
    IngestConfig,
    LogIncomePanel,
    TransitionSet,
    load_panel,
    make_transitions,
)
from .lsm import CalibrationReport, bootstrap_ci, fit_age, fit_all
from .model import Agent, AgeProfile, step, stationary_mean_next, stationary_std_next
from .noise import NoiseSpec
from .pension import CashflowSeries, PensionParams, cashflow, sweep_alpha
from .simulate import Population, SimConfig, advance_wave, bootstrap_from_panel, run
from .stats import JointHistogram, PyramidSeries, age_curves, jdf, pyramid
from .synthetic import InitialAges, generate_synthetic_panel, smooth_profile, stationary_initial

__all__ = [
    "Agent",
    "AgeProfile",
    "AgeRangeError",
    "CalibrationReport",
    "CashflowSeries",
    "ConfigError",
    "DataError",
    "DeflatorSeries",
    "EstimationError",
    "IngestConfig",
    "InitialAges",
    "JointHistogram",
    "LogIncomePanel",
    "NoiseSpec",
    "PensionParams",
    "Population",
    "PyramidSeries",
    "SchemaError",
    "SimConfig",
    "ToolkitError",
    "TransitionSet",
    "WaveMoments",
    "advance_wave",
    "age_curves",
    "bootstrap_ci",
    "bootstrap_from_panel",
    "cashflow",
    "compute_wave_moments",
    "estimate_gmm",
    "fit_age",
    "fit_all",
    "generate_synthetic_panel",
    "jdf",
    "load_panel",
    "make_transitions",
    "pool_moments",
    "pyramid",
    "run",
    "smooth_profile",
    "stationary_initial",
    "stationary_mean_next",
    "stationary_std_next",
    "step",
    "sweep_alpha",
]
