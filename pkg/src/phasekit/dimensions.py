"""Fractal dimension estimators and the Lyapunov-dimension formula.

Correlation sums count ordered pairs closer than eps (temporal neighbors
excluded), normalized by the squared point count.  All dimension fits run in
base-2 logs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .embedding import DelayEmbedding
from .errors import DegenerateDataError, InsufficientDataError, ScalingRegionError
from .fitting import fit_scaling_region, fit_slope, scaling_window

DEFAULT_GRID_POINTS = 24
DEFAULT_GRID_SPAN = (1e-3, 1.0)  # relative to the data diameter


def _as_points(data) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(data, DelayEmbedding):
        return data.points, data.times
    pts = np.asarray(data, dtype=float)
    return pts, np.arange(pts.shape[0])


def data_diameter(points: np.ndarray) -> float:
    """Bounding-box diagonal, used to scale default epsilon grids."""
    span = points.max(axis=0) - points.min(axis=0)
    return float(np.linalg.norm(span))


def default_epsilons(points: np.ndarray,
                     n: int = DEFAULT_GRID_POINTS,
                     span: tuple = DEFAULT_GRID_SPAN) -> np.ndarray:
    diam = data_diameter(points)
    if diam == 0.0:
        raise DegenerateDataError("all points coincide; no scale range")
    return diam * np.geomspace(span[0], span[1], n)


@dataclass(frozen=True)
class CorrelationCurve:
    epsilons: np.ndarray
    values: np.ndarray
    n_points: int
    theiler: int


@dataclass(frozen=True)
class DimensionEstimate:
    value: float
    stderr: float
    q: float
    window: tuple  # (eps_low, eps_high) actually used by the fit
    n_fit_points: int


def correlation_integral(data, epsilons=None, theiler: int = 0) -> CorrelationCurve:
    """Fraction of ordered point pairs within eps, excluding |t_i - t_j| <= theiler.

    Counting runs on a dual-tree pair count with the temporally excluded
    near-diagonal pairs subtracted explicitly, so no pair is enumerated twice.
    """
    points, times = _as_points(data)
    m = points.shape[0]
    if m < 2:
        raise InsufficientDataError("need at least 2 points")
    if epsilons is None:
        epsilons = default_epsilons(points)
    epsilons = np.asarray(epsilons, dtype=float)
    if epsilons.ndim != 1 or epsilons.size == 0 or np.any(epsilons <= 0):
        raise ValueError("epsilons must be a 1-D positive array")
    if np.any(np.diff(epsilons) <= 0):
        raise ValueError("epsilons must be strictly increasing")

    tree = cKDTree(points)
    counts = tree.count_neighbors(tree, epsilons).astype(float)

    # Remove self-pairs and temporally close pairs.  Rows are consecutive in
    # time, so |t_i - t_j| <= theiler is exactly the band |i - j| <= theiler.
    counts -= m  # offset 0: every self-pair sits at distance 0
    for off in range(1, theiler + 1):
        if off >= m:
            break
        d = np.sqrt(np.sum((points[off:] - points[:-off]) ** 2, axis=1))
        d.sort()
        counts -= 2.0 * np.searchsorted(d, epsilons, side="right")

    values = counts / float(m) ** 2
    return CorrelationCurve(epsilons, values, m, theiler)


def _restrict_range(eps, y, fit_range):
    mask = np.ones(eps.size, dtype=bool)
    if fit_range is not None:
        lo, hi = fit_range
        mask &= (eps >= lo) & (eps <= hi)
    return mask


def correlation_dimension(curve: CorrelationCurve, fit_range: tuple | None = None,
                          rel_tol: float = 0.10, min_points: int = 5) -> DimensionEstimate:
    """Slope of log2 C(eps) vs log2 eps over the scaling window.

    Only grid points with 0 < C < 1 participate.  Without an explicit
    fit_range the window is chosen automatically; with one, all usable points
    inside it are fitted directly (at least 3 required).
    """
    usable = (curve.values > 0.0) & (curve.values < 1.0)
    usable &= _restrict_range(curve.epsilons, curve.values, fit_range)
    eps = curve.epsilons[usable]
    c = curve.values[usable]
    x = np.log2(eps)
    y = np.log2(c)
    if fit_range is not None:
        if x.size < 3:
            raise ScalingRegionError(
                "fewer than 3 usable grid points inside the requested range")
        slope, _, stderr = fit_slope(x, y)
        return DimensionEstimate(slope, stderr, 2.0, (float(eps[0]), float(eps[-1])),
                                 x.size)
    fit = fit_scaling_region(x, y, rel_tol=rel_tol, min_points=min_points)
    i, j = fit.window
    return DimensionEstimate(fit.slope, fit.stderr, 2.0,
                             (float(eps[i]), float(eps[j])), j - i + 1)


def _box_masses(points: np.ndarray, eps: float) -> np.ndarray:
    anchor = points.min(axis=0)
    idx = np.floor((points - anchor) / eps).astype(np.int64)
    _, counts = np.unique(idx, axis=0, return_counts=True)
    return counts / points.shape[0]


def generalized_curve(data, q: float, epsilons=None):
    """Box-counting ordinates for D_q: (epsilons, log2(sum p^q)/(q-1)).

    Boxes of side eps are anchored at the bounding-box corner; the q=1
    ordinate is the limit value sum(p log2 p).
    """
    if q < 0:
        raise ValueError("q must be >= 0")
    points, _ = _as_points(data)
    if np.all(points.max(axis=0) == points.min(axis=0)):
        raise DegenerateDataError("constant data: box partition is degenerate")
    if epsilons is None:
        epsilons = default_epsilons(points)
    epsilons = np.asarray(epsilons, dtype=float)

    y = np.empty(epsilons.size)
    for i, eps in enumerate(epsilons):
        p = _box_masses(points, eps)
        if q == 1.0:
            y[i] = float(np.sum(p * np.log2(p)))
        else:
            y[i] = float(np.log2(np.sum(p ** q)) / (q - 1.0))
    return epsilons, y


def generalized_dimension(data, q: float, epsilons=None, fit_range: tuple | None = None,
                          rel_tol: float = 0.10, min_points: int = 5) -> DimensionEstimate:
    """Renyi dimension of order q: slope of the box-counting ordinate.

    See generalized_curve for the ordinate convention.
    """
    epsilons, y = generalized_curve(data, q, epsilons)
    x = np.log2(epsilons)

    mask = _restrict_range(epsilons, y, fit_range)
    if fit_range is not None:
        if mask.sum() < 3:
            raise ScalingRegionError(
                "fewer than 3 grid points inside the requested range")
        slope, _, stderr = fit_slope(x[mask], y[mask])
        eps_used = epsilons[mask]
        return DimensionEstimate(slope, stderr, q,
                                 (float(eps_used[0]), float(eps_used[-1])),
                                 int(mask.sum()))
    fit = fit_scaling_region(x, y, rel_tol=rel_tol, min_points=min_points)
    i, j = fit.window
    return DimensionEstimate(fit.slope, fit.stderr, q,
                             (float(epsilons[i]), float(epsilons[j])), j - i + 1)


def kaplan_yorke(exponents) -> float:
    """Lyapunov dimension d = k + S_k / |lambda_{k+1}|.

    k is the largest index whose partial sum S_k stays non-negative.  All
    partial sums non-negative gives the full dimension n; a negative leading
    exponent gives 0.
    """
    lam = np.asarray(exponents, dtype=float)
    if lam.size == 0:
        raise ValueError("empty exponent list")
    if np.any(np.diff(lam) > 0):
        raise ValueError("exponents must be sorted in descending order")
    if lam[0] < 0:
        return 0.0
    sums = np.cumsum(lam)
    nonneg = np.nonzero(sums >= 0)[0]
    k = int(nonneg[-1]) + 1  # count of exponents in the non-negative head
    if k == lam.size:
        return float(lam.size)
    nxt = lam[k]
    if nxt == 0.0:
        raise ZeroDivisionError("lambda_{k+1} is zero; dimension ratio undefined")
    return k + float(sums[k - 1]) / abs(nxt)
