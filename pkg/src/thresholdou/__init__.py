"""Threshold Ornstein-Uhlenbeck processes: simulation, invariant density,
least-squares drift and quadratic-variation diffusion estimation,
threshold detection and Monte Carlo studies."""

from .errors import (DataError, DegenerateRegimeError, DetectionError, ModelError,
                     MonteCarloError, NoInvariantDensityError, PipelineError,
                     SimulationError, ThresholdOUError)
from .estimators import (RegimeSums, accumulate_regime_sums, lse_drift,
                         lse_drift_zero_intercept, mqve, plugin_inference, qve)
from .model import SamplePath, ThresholdOUModel, is_ergodic, regime_of, validate_model
from .montecarlo import ScenarioConfig, normality_diagnostics, preset, run_scenario
from .simulate import SimulationPlan, derive_substream, euler_simulate
from .stationary import asymptotic_covariance, invariant_density, regime_moments
from .thresholds import detect_thresholds, select_num_regimes

__version__ = "0.1.0"
