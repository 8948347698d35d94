"""Mixed causal-noncausal VAR models: estimation, predictive densities,
nonlinear innovations and bootstrap prediction sets."""

__version__ = "0.1.0"

from .core import ArCoefficients, JordanDecomposition, TimeSeries, coefficients, jordan_decompose
from .density import DensityEstimator, DensityGrid
from .errors import MixVarError
from .forecast import ForecastRequest, GridSpec, backcast_path, backward_density, forecast_path, forward_density
from .gcov import GcovConfig, ModelEstimate, bootstrap_se, estimate, model_from_coefficients
from .innovations import IrfRequest, filter_innovations, irf_cbs, state_variances
from .sim import ErrorSpec, SimulationRequest, simulate
from .uncertainty import bootstrap_cspi, coverage_experiment, estimated_pi

__all__ = [
    "ArCoefficients", "JordanDecomposition", "TimeSeries", "coefficients", "jordan_decompose",
    "DensityEstimator", "DensityGrid", "MixVarError",
    "ForecastRequest", "GridSpec", "backcast_path", "backward_density", "forecast_path", "forward_density",
    "GcovConfig", "ModelEstimate", "bootstrap_se", "estimate", "model_from_coefficients",
    "IrfRequest", "filter_innovations", "irf_cbs", "state_variances",
    "ErrorSpec", "SimulationRequest", "simulate",
    "bootstrap_cspi", "coverage_experiment", "estimated_pi",
]
