"""Tests and localisation of jumps in the regression function of a nonlinear autoregression."""

from .detector import ChangePointReport, accuracy_metrics, detect_change_points
from .errors import StateCPError
from .estimators import (
    RegressionPairs,
    TimeSeries,
    adcf,
    conditional_variance,
    cv_bandwidth_mu,
    cv_bandwidth_sigma,
    density_estimate,
    nw_regression,
)
from .kernels import AntisymKernel, build_antisym_kernel, default_kernel, kernel_constants, rescale_to_unit
from .statetest import (
    BandwidthPair,
    CriticalValue,
    StatCurve,
    bootstrap_critical,
    gumbel_critical,
    sup_statistic,
    test_statistic,
)

__version__ = "0.1.0"

__all__ = [
    "AntisymKernel", "BandwidthPair", "ChangePointReport", "CriticalValue", "RegressionPairs",
    "StatCurve", "StateCPError", "TimeSeries", "accuracy_metrics", "adcf", "bootstrap_critical",
    "build_antisym_kernel", "conditional_variance", "cv_bandwidth_mu", "cv_bandwidth_sigma",
    "default_kernel", "density_estimate", "detect_change_points", "gumbel_critical",
    "kernel_constants", "nw_regression", "rescale_to_unit", "sup_statistic", "test_statistic",
]
