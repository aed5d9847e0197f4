"""Numerical laboratory for correlations of bounded multiplicative functions."""

from .averaging import CorrelationQuery, Mode, WindowSchedule, correlation, correlation_series
from .mfunc import Kind, MultiplicativeSpec, evaluate_range, value_at

__all__ = [
    "CorrelationQuery",
    "Kind",
    "Mode",
    "MultiplicativeSpec",
    "WindowSchedule",
    "correlation",
    "correlation_series",
    "evaluate_range",
    "value_at",
]
__version__ = "0.1.0"
