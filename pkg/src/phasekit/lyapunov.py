"""Largest-exponent estimators and full spectra.

All exponents are per sample in natural-log units; divide by dt (or use
per_time) for rates per time unit.  Three data-driven largest-exponent routes
(pair tracking with replacement, nearest-neighbor divergence, neighborhood
divergence) plus tangent-space QR iteration with exact or locally regressed
Jacobians.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .dimensions import data_diameter
from .embedding import DelayEmbedding, NeighborIndex
from .errors import (ConfigError, DegenerateDataError, DivergenceError,
                     InsufficientDataError)
from .fitting import fit_scaling_region, fit_slope
from .systems import DEFAULT_TRANSIENT, ReferenceSystem, rk4_step


@dataclass(frozen=True)
class LyapunovSpectrum:
    """Exponents in descending order, per sample (natural log)."""

    exponents: tuple
    method: str
    steps: int
    dt: float = 1.0

    @property
    def per_time(self) -> tuple:
        return tuple(x / self.dt for x in self.exponents)


@dataclass(frozen=True)
class DivergenceCurve:
    """Mean log separation against step offset; its slope estimates lambda1."""

    offsets: np.ndarray
    values: np.ndarray
    n_refs: int
    dt: float
    method: str
    eps0: float | None = None


@dataclass(frozen=True)
class WolfResult:
    lambda1: float          # per sample
    segments: int           # replacement events accumulated
    total_steps: int
    dt: float
    evolve_steps: int


@dataclass(frozen=True)
class RateEstimate:
    value: float            # per sample
    stderr: float
    window: tuple           # (first offset, last offset) used by the fit


@dataclass(frozen=True)
class SpectrumReport:
    sum_exponents: float
    dissipative: bool
    zero_exponent_ok: bool | None   # None for maps (no neutral direction required)
    entropy_rate: float             # sum of positive exponents


def _future_index(emb: DelayEmbedding, reserve: int) -> NeighborIndex:
    """Index over the rows that still have `reserve` future rows available."""
    n = emb.n_points - reserve
    if n < 2:
        raise InsufficientDataError("not enough rows with the requested future span")
    idx = NeighborIndex(emb.points[:n], emb.times[:n])
    idx.default_theiler = emb.default_theiler()
    return idx


def wolf_lambda1(emb: DelayEmbedding, evolve_steps: int = 1,
                 min_len: float = 0.0, max_len: float | None = None,
                 angle_tol: float = 0.9, theiler: int | None = None) -> WolfResult:
    """Track one separation vector, renormalizing by neighbor replacement.

    Each segment evolves the pair evolve_steps rows forward and accumulates
    ln(L_end / L_start).  Replacements prefer the closest admissible point
    whose direction cosine with the evolved separation is at least angle_tol
    and whose distance lies in [min_len, max_len]; when nothing qualifies the
    constraint relaxes to the plain nearest admissible point.
    """
    pts = emb.points
    k_rows = emb.n_points
    if theiler is None:
        theiler = emb.default_theiler()
    if max_len is None:
        max_len = 0.1 * data_diameter(pts)
    if evolve_steps < 1:
        raise ValueError("evolve_steps must be >= 1")
    index = _future_index(emb, evolve_steps)

    def pick(row: int, direction: np.ndarray | None):
        pool = 50
        while True:
            cand, dist = index.query_some(row, min(pool, index.n - 1), theiler)
            fallback = None
            for i, d in zip(cand, dist):
                if d <= 0.0:
                    continue
                if fallback is None:
                    fallback = int(i)
                if d < min_len or d > max_len:
                    continue
                if direction is not None:
                    v = pts[i] - pts[row]
                    cosine = float(np.dot(direction, v) / (np.linalg.norm(direction) * d))
                    if cosine < angle_tol:
                        continue
                return int(i)
            if pool >= index.n - 1 or cand.size < min(pool, index.n - 1):
                return fallback
            pool *= 2

    c = 0
    n = pick(c, None)
    if n is None:
        raise InsufficientDataError("no admissible starting neighbor")
    log_sum = 0.0
    segments = 0
    total = 0
    while c + evolve_steps <= k_rows - 1:
        l_start = float(np.linalg.norm(pts[n] - pts[c]))
        c2 = c + evolve_steps
        n2 = n + evolve_steps
        l_end = float(np.linalg.norm(pts[n2] - pts[c2]))
        if l_start > 0.0 and l_end > 0.0:
            log_sum += np.log(l_end / l_start)
            segments += 1
            total += evolve_steps
        c = c2
        if c + evolve_steps > k_rows - 1 or c >= index.n:
            break
        n = pick(c, pts[n2] - pts[c])
        if n is None:
            break
    if segments < 10:
        raise InsufficientDataError(
            f"only {segments} replacement segments; need at least 10")
    return WolfResult(log_sum / total, segments, total, emb.dt, evolve_steps)


def rosenstein_curve(emb: DelayEmbedding, horizon: int,
                     theiler: int | None = None) -> DivergenceCurve:
    """Mean ln distance between each point and its nearest neighbor, per offset."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    pts = emb.points
    if theiler is None:
        theiler = emb.default_theiler()
    n_eligible = emb.n_points - horizon
    if n_eligible < 2:
        raise InsufficientDataError("horizon exceeds the available rows")
    sub = pts[:n_eligible]
    times = emb.times[:n_eligible]
    tree = cKDTree(sub)
    pool = min(n_eligible, 4 * theiler + 8)
    _, nn_idx = tree.query(sub, k=pool)
    nn_idx = np.atleast_2d(nn_idx)

    refs = np.arange(n_eligible)
    admissible = np.abs(times[nn_idx] - times[refs][:, None]) > theiler
    has_nn = admissible.any(axis=1)
    if not has_nn.any():
        raise InsufficientDataError("no admissible nearest neighbors; lower theiler")
    first = np.argmax(admissible, axis=1)
    nns = nn_idx[refs, first]
    refs = refs[has_nn]
    nns = nns[has_nn]

    d0 = np.sqrt(np.sum((pts[refs] - pts[nns]) ** 2, axis=1))
    keep = d0 > 0.0
    refs, nns = refs[keep], nns[keep]
    if refs.size == 0:
        raise DegenerateDataError("all nearest-neighbor distances are zero")

    offsets = np.arange(horizon + 1)
    values = np.empty(horizon + 1)
    for i in offsets:
        d = np.sqrt(np.sum((pts[refs + i] - pts[nns + i]) ** 2, axis=1))
        good = d > 0.0
        values[i] = float(np.mean(np.log(d[good])))
    return DivergenceCurve(offsets, values, refs.size, emb.dt, "rosenstein")


def kantz_curve(emb: DelayEmbedding, eps0: float, horizon: int,
                theiler: int | None = None,
                n_refs: int | None = 1000) -> DivergenceCurve:
    """Mean ln of neighborhood-averaged distances, per offset.

    Reference points whose eps0 ball holds no admissible neighbor are skipped;
    if every ball is empty the call fails asking for a larger eps0.  n_refs
    caps the number of (evenly spaced) reference points; None uses all.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if eps0 <= 0:
        raise ValueError("eps0 must be positive")
    pts = emb.points
    n_eligible = emb.n_points - horizon
    if n_eligible < 2:
        raise InsufficientDataError("horizon exceeds the available rows")
    index = _future_index(emb, horizon)
    if theiler is None:
        theiler = emb.default_theiler()

    if n_refs is None or n_refs >= n_eligible:
        refs = np.arange(n_eligible)
    else:
        refs = np.unique(np.linspace(0, n_eligible - 1, n_refs).astype(int))

    offsets = np.arange(horizon + 1)
    sums = np.zeros(horizon + 1)
    used = 0
    for r in refs:
        nbrs, d = index.radius(int(r), eps0, theiler)
        nbrs = nbrs[d > 0.0]
        if nbrs.size == 0:
            continue
        # (neighbors, offsets, width) displacement block for this reference
        diff = pts[nbrs[:, None] + offsets[None, :]] - pts[r + offsets][None, :, :]
        mean_d = np.sqrt(np.sum(diff ** 2, axis=2)).mean(axis=0)
        sums += np.log(mean_d)
        used += 1
    if used == 0:
        raise ConfigError("every eps0 neighborhood is empty; increase eps0")
    return DivergenceCurve(offsets, sums / used, used, emb.dt, "kantz", eps0=eps0)


def divergence_rate(curve: DivergenceCurve, fit_range: tuple | None = None,
                    rel_tol: float = 0.10, min_points: int = 5) -> RateEstimate:
    """Slope of a divergence curve (per sample) over its linear region."""
    x = curve.offsets.astype(float)
    y = curve.values
    if fit_range is not None:
        lo, hi = fit_range
        mask = (x >= lo) & (x <= hi)
        if mask.sum() < 2:
            raise ValueError("fit range keeps fewer than 2 offsets")
        slope, _, stderr = fit_slope(x[mask], y[mask])
        xs = x[mask]
        return RateEstimate(slope, stderr, (float(xs[0]), float(xs[-1])))
    fit = fit_scaling_region(x, y, rel_tol=rel_tol, min_points=min_points)
    i, j = fit.window
    return RateEstimate(fit.slope, fit.stderr, (float(x[i]), float(x[j])))


def _qr_accumulate(w: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(w)
    diag = np.diag(r).copy()
    if np.any(diag == 0.0):
        raise DegenerateDataError("tangent frame collapsed (zero QR diagonal)")
    sigma += np.log(np.abs(diag))
    return q * np.sign(diag)


def _tangent_rk4(system: ReferenceSystem, x: np.ndarray, w: np.ndarray,
                 t: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    # Exact derivative of the RK4 one-step map, propagated alongside the state.
    f, jac = system.f, system.jac
    k1 = f(x, t)
    x2 = x + 0.5 * dt * k1
    k2 = f(x2, t + 0.5 * dt)
    x3 = x + 0.5 * dt * k2
    k3 = f(x3, t + 0.5 * dt)
    x4 = x + dt * k3
    k4 = f(x4, t + dt)
    m1 = jac(x, t) @ w
    m2 = jac(x2, t + 0.5 * dt) @ (w + 0.5 * dt * m1)
    m3 = jac(x3, t + 0.5 * dt) @ (w + 0.5 * dt * m2)
    m4 = jac(x4, t + dt) @ (w + dt * m3)
    x_new = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    w_new = w + (dt / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4)
    return x_new, w_new


def benettin_exact(system: ReferenceSystem, steps: int, x0=None,
                   dt: float | None = None, n_exp: int | None = None,
                   renorm_interval: int = 1,
                   transient: int = DEFAULT_TRANSIENT, t0: float = 0.0) -> LyapunovSpectrum:
    """QR-iterated tangent propagation with the analytic Jacobian."""
    x = np.asarray(system.x0_default if x0 is None else x0, dtype=float)
    dt = system.dt_default if dt is None else dt
    n_exp = system.dim if n_exp is None else n_exp
    if not 1 <= n_exp <= system.dim:
        raise ValueError("n_exp must lie in [1, dim]")
    if steps < 1:
        raise ValueError("steps must be positive")
    if renorm_interval < 1:
        raise ValueError("renorm_interval must be positive")
    t = t0
    for i in range(transient):
        if system.kind == "flow":
            x = rk4_step(system.f, x, t, dt)
        else:
            x = system.f(x, t)
        t = t0 + (i + 1) * (dt if system.kind == "flow" else 1.0)
    w = np.eye(system.dim)[:, :n_exp]
    sigma = np.zeros(n_exp)
    pending = 0
    for i in range(steps):
        if system.kind == "flow":
            x, w = _tangent_rk4(system, x, w, t, dt)
            t += dt
        else:
            w = system.jac(x, t) @ w
            x = system.f(x, t)
            t += 1.0
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(w)):
            raise DivergenceError(f"{system.name}: tangent propagation diverged at step {i}")
        pending += 1
        if pending == renorm_interval:
            w = _qr_accumulate(w, sigma)
            pending = 0
    if pending:
        w = _qr_accumulate(w, sigma)
    lam = np.sort(sigma / steps)[::-1]
    sample_dt = dt if system.kind == "flow" else 1.0
    return LyapunovSpectrum(tuple(lam), "benettin-exact", steps, sample_dt)


def benettin_data(emb: DelayEmbedding, steps: int | None = None,
                  k_neighbors: int | None = None, renorm_interval: int = 1,
                  theiler: int | None = None, n_exp: int | None = None) -> LyapunovSpectrum:
    """QR iteration with Jacobians regressed from neighborhood displacements.

    At each row the k nearest admissible neighbors (all having successors)
    give a least-squares map from displacements to their one-step images.
    k defaults to 2*width+1.
    """
    pts = emb.points
    width = emb.width
    n_exp = width if n_exp is None else n_exp
    if not 1 <= n_exp <= width:
        raise ValueError("n_exp must lie in [1, width]")
    max_steps = emb.n_points - 1
    steps = max_steps if steps is None else steps
    if steps < 1 or steps > max_steps:
        raise InsufficientDataError(f"steps must lie in [1, {max_steps}]")
    if k_neighbors is None:
        k_neighbors = 2 * width + 1
    if k_neighbors < width:
        raise ValueError("k_neighbors must be at least the embedding width")
    if renorm_interval < 1:
        raise ValueError("renorm_interval must be positive")
    index = _future_index(emb, 1)
    if theiler is None:
        theiler = emb.default_theiler()

    w = np.eye(width)[:, :n_exp]
    sigma = np.zeros(n_exp)
    pending = 0
    for t in range(steps):
        nbrs, _ = index.query(t, k_neighbors, theiler)
        x = pts[nbrs] - pts[t]
        y = pts[nbrs + 1] - pts[t + 1]
        sol, _, rank, _ = np.linalg.lstsq(x, y, rcond=None)
        if rank < width:
            raise DegenerateDataError(
                f"singular neighborhood regression at row {t}; increase k_neighbors")
        w = sol.T @ w
        if not np.all(np.isfinite(w)):
            raise DivergenceError(f"tangent propagation diverged at row {t}")
        pending += 1
        if pending == renorm_interval:
            w = _qr_accumulate(w, sigma)
            pending = 0
    if pending:
        w = _qr_accumulate(w, sigma)
    lam = np.sort(sigma / steps)[::-1]
    return LyapunovSpectrum(tuple(lam), "benettin-data", steps, emb.dt)


def spectrum_checks(spectrum, kind: str = "flow",
                    zero_tol: float = 0.005) -> SpectrumReport:
    """Consistency report: neutral direction (flows), dissipativity, entropy rate."""
    if isinstance(spectrum, LyapunovSpectrum):
        lam = np.asarray(spectrum.exponents)
    else:
        lam = np.asarray(spectrum, dtype=float)
    total = float(lam.sum())
    zero_ok = None
    if kind == "flow":
        zero_ok = bool(np.min(np.abs(lam)) <= zero_tol)
    return SpectrumReport(
        sum_exponents=total,
        dissipative=bool(total < 0.0),
        zero_exponent_ok=zero_ok,
        entropy_rate=float(lam[lam > 0].sum()),
    )
