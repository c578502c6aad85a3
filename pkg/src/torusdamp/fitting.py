"""Least-squares power-law fits on log-log axes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ExponentFit", "fit_loglog"]


@dataclass(frozen=True)
class ExponentFit:
    """Result of a straight-line fit of log(y) against log(x).

    slope, intercept describe log(y) = slope*log(x) + intercept; r_squared is
    the coefficient of determination; window records the (min, max) of the
    x-values actually used.
    """

    slope: float
    intercept: float
    r_squared: float
    window: tuple[float, float]


def fit_loglog(x, y) -> ExponentFit:
    """Fit y ~ C * x^slope by least squares in log-log coordinates.

    Requires at least two points with strictly positive x and y; points with
    nonpositive or non-finite y are rejected rather than silently dropped,
    since a vanished data point usually signals an upstream failure.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1d arrays of equal length")
    if x.size < 2:
        raise ValueError("need at least two points to fit an exponent")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in fit data")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs strictly positive data")
    lx = np.log(x)
    ly = np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return ExponentFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=float(r2),
        window=(float(x.min()), float(x.max())),
    )
