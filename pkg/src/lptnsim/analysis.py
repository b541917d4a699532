"""Small fitting helpers for benchmark post-processing."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def fit_exponential_decay(times, values) -> tuple[float, float]:
    """Fit ``values ~ A exp(-rate * t)``; returns ``(rate, amplitude)``.

    Linear least squares on the log; values must be positive.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size != v.size or t.size < 2:
        raise ValidationError("need at least two (t, value) samples")
    if np.any(v <= 0.0):
        raise ValidationError("exponential fit needs positive values")
    slope, intercept = np.polyfit(t, np.log(v), 1)
    return -float(slope), float(np.exp(intercept))


def fit_loglog_slope(x, y) -> float:
    """Slope of ``log y`` against ``log x`` (power-law exponent)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ValidationError("log-log fit needs positive data")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)
