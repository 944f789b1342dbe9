"""Automatic scaling-window detection and straight-line fits on curves.

Dimension and divergence estimators all reduce to "find the part of a curve
that is actually straight, then fit its slope".  The window rule: the longest
contiguous run whose pointwise finite-difference slopes stay within a relative
band of their own mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ScalingRegionError


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    stderr: float
    window: tuple  # (first index, last index) inclusive, into the input arrays


def fit_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Ordinary least-squares line fit; returns (slope, intercept, stderr).

    stderr is the standard error of the slope; 0.0 when only 2 points are given.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 points for a line fit")
    xm = x.mean()
    ym = y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise ValueError("degenerate abscissa: all x equal")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = ym - slope * xm
    if n == 2:
        return slope, intercept, 0.0
    resid = y - (intercept + slope * x)
    stderr = float(np.sqrt(np.sum(resid ** 2) / (n - 2) / sxx))
    return slope, intercept, stderr


def scaling_window(x: np.ndarray, y: np.ndarray, rel_tol: float = 0.10,
                   min_points: int = 5) -> tuple[int, int]:
    """Longest index window where local slopes vary less than rel_tol.

    Local slopes are consecutive finite differences; a window qualifies when
    (max - min) <= rel_tol * |mean| over the slopes inside it and the mean is
    nonzero.  Ties go to the leftmost window.  Raises ScalingRegionError when
    nothing qualifies.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise ValueError("x and y must have equal length")
    if x.size < min_points:
        raise ScalingRegionError(
            f"curve has {x.size} points, need {min_points}; pass an explicit range")
    dx = np.diff(x)
    if np.any(dx == 0.0):
        raise ValueError("abscissa values must be distinct")
    slopes = np.diff(y) / dx

    best: tuple[int, int] | None = None
    n = slopes.size
    for i in range(n):
        lo = slopes[i]
        hi = slopes[i]
        total = 0.0
        for j in range(i, n):
            lo = min(lo, slopes[j])
            hi = max(hi, slopes[j])
            total += slopes[j]
            count = j - i + 1
            if count + 1 < min_points:
                continue
            mean = total / count
            if mean == 0.0:
                continue
            if hi - lo <= rel_tol * abs(mean):
                if best is None or (j - i) > (best[1] - best[0]):
                    best = (i, j + 1)  # slope window [i, j] covers points i..j+1
    if best is None:
        raise ScalingRegionError(
            "no scaling window satisfies the linearity rule; pass an explicit range")
    return best


def fit_scaling_region(x, y, rel_tol: float = 0.10, min_points: int = 5,
                       window: tuple | None = None) -> SlopeFit:
    """Fit a slope over an automatically chosen (or caller-pinned) window."""
    if window is None:
        window = scaling_window(x, y, rel_tol=rel_tol, min_points=min_points)
    i, j = window
    slope, intercept, stderr = fit_slope(x[i:j + 1], y[i:j + 1])
    return SlopeFit(slope, intercept, stderr, (i, j))
