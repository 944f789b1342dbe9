"""Reduced evolution models fitted to reconstructed states.

Discrete form  x(t+1) = B x(t) + P phi(t),  continuous form  dx/dt = A x + P phi(t),
observation    y(t)   = C x(t) + y0,
with phi a small catalog of explicit time functions (powers, sinusoids,
exponentials).  States come from a PCA projection of the centered embedding;
all parameter blocks are fitted by least squares.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .embedding import DelayEmbedding
from .errors import ConfigError, DegenerateDataError, DivergenceError
from .systems import rk4_step

_STATE_NORM_LIMIT = 1e12
_MAX_POLY_DEGREE = 8


@dataclass(frozen=True)
class BasisTerm:
    """One explicit time function: t^p, sin(omega t + phase), or exp(alpha t)."""

    kind: str
    degree: int = 0
    omega: float = 0.0
    phase: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind == "poly":
            if not 0 <= self.degree <= _MAX_POLY_DEGREE:
                raise ConfigError(f"polynomial degree must be in [0, {_MAX_POLY_DEGREE}]")
        elif self.kind == "sin":
            pass
        elif self.kind == "exp":
            pass
        else:
            raise ConfigError(f"unknown basis term kind {self.kind!r}")

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "poly":
            return t ** self.degree
        if self.kind == "sin":
            return np.sin(self.omega * t + self.phase)
        with np.errstate(over="ignore"):
            return np.exp(self.alpha * t)

    def label(self) -> str:
        if self.kind == "poly":
            return "1" if self.degree == 0 else ("t" if self.degree == 1 else f"t^{self.degree}")
        if self.kind == "sin":
            return f"sin({self.omega!r}*t+{self.phase!r})"
        return f"exp({self.alpha!r}*t)"


@dataclass(frozen=True)
class TimeBasis:
    """Ordered collection of basis terms with a tiny last-grid cache."""

    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "_cache", None)

    @property
    def size(self) -> int:
        return len(self.terms)

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        """(len(t), size) design block; must stay finite on the grid."""
        t = np.asarray(t, dtype=float)
        cache = getattr(self, "_cache", None)
        if cache is not None and cache[0].shape == t.shape and np.array_equal(cache[0], t):
            return cache[1]
        if self.size == 0:
            out = np.empty((t.size, 0))
        else:
            out = np.column_stack([term.evaluate(t) for term in self.terms])
        if not np.all(np.isfinite(out)):
            raise ConfigError("basis values overflow on the evaluation interval")
        object.__setattr__(self, "_cache", (t.copy(), out))
        return out

    def labels(self) -> tuple:
        return tuple(term.label() for term in self.terms)


def parse_term(token: str) -> BasisTerm:
    """Parse "1", "t", "t^3", "sin(omega,phase)", "exp(alpha)"."""
    token = token.strip()
    try:
        if token == "1":
            return BasisTerm("poly", degree=0)
        if token == "t":
            return BasisTerm("poly", degree=1)
        if token.startswith("t^"):
            return BasisTerm("poly", degree=int(token[2:]))
        if token.startswith("sin(") and token.endswith(")"):
            parts = token[4:-1].split(",")
            if len(parts) == 1:
                return BasisTerm("sin", omega=float(parts[0]))
            if len(parts) == 2:
                return BasisTerm("sin", omega=float(parts[0]),
                                 phase=float(parts[1]))
            raise ConfigError(f"sin term takes 1 or 2 parameters: {token!r}")
        if token.startswith("exp(") and token.endswith(")"):
            return BasisTerm("exp", alpha=float(token[4:-1]))
    except ValueError as exc:
        raise ConfigError(f"cannot parse basis term {token!r}") from exc
    raise ConfigError(f"cannot parse basis term {token!r}")


def parse_basis(text: str) -> TimeBasis:
    """Comma-separated term list, commas inside parentheses respected."""
    if not text.strip():
        return TimeBasis(())
    tokens, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            tokens.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    tokens.append("".join(cur))
    return TimeBasis(tuple(parse_term(tok) for tok in tokens))


@dataclass(frozen=True)
class ProjectionRecord:
    """Centering plus orthonormal components mapping embedding rows to states."""

    mean: np.ndarray
    components: np.ndarray          # (n, width)
    singular_values: np.ndarray     # full spectrum of the centered embedding
    identity: bool = False

    def transform(self, points: np.ndarray) -> np.ndarray:
        centered = np.asarray(points) - self.mean
        if self.identity:
            return centered
        return centered @ self.components.T

    def inverse(self, states: np.ndarray) -> np.ndarray:
        if self.identity:
            return np.asarray(states) + self.mean
        return np.asarray(states) @ self.components + self.mean


def build_state_sequence(emb: DelayEmbedding, n: int) -> tuple[np.ndarray, ProjectionRecord]:
    """Leading-n principal coordinates of the mean-centered embedding.

    When n equals the embedding width the projection is the identity on
    centered coordinates (no rotation).  Component signs are fixed so the
    largest-magnitude entry of each component is positive.
    """
    pts = emb.points
    k, width = pts.shape
    if not 1 <= n <= width:
        raise ConfigError(f"n must lie in [1, {width}]")
    mean = pts.mean(axis=0)
    centered = pts - mean
    _, sv, vt = np.linalg.svd(centered, full_matrices=False)
    tol = sv[0] * max(k, width) * np.finfo(float).eps if sv.size else 0.0
    rank = int(np.sum(sv > tol))
    if n > rank:
        raise DegenerateDataError(
            f"embedding has numerical rank {rank}; cannot build {n} states")
    if n == width:
        record = ProjectionRecord(mean, np.eye(width), sv, identity=True)
        return centered.copy(), record
    comps = vt[:n].copy()
    for i in range(n):
        j = int(np.argmax(np.abs(comps[i])))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    record = ProjectionRecord(mean, comps, sv)
    return centered @ comps.T, record


@dataclass(frozen=True)
class ReducedModel:
    """Fitted evolution model plus its observation map.

    dynamics is B (discrete) or A (continuous); psi_coeffs maps basis values
    into the state equation; C and output_offset map states to outputs.
    fit holds the per-channel free-run fit on the training data, simulated
    from the least-squares initial state (None when the free run diverged).
    """

    mode: str                       # "discrete" | "continuous"
    dynamics: np.ndarray            # (n, n)
    psi_coeffs: np.ndarray          # (n, b)
    C: np.ndarray                   # (channels, n)
    output_offset: np.ndarray       # (channels,)
    basis: TimeBasis
    dt: float
    t0: float = 0.0
    fit: tuple | None = None
    residual_rms: tuple = ()

    @property
    def n_states(self) -> int:
        return self.dynamics.shape[0]

    def to_json(self) -> str:
        """Serialize as {mode, n, B, psi, C, fit} plus reconstruction extras.

        B is the dynamics matrix in either mode; psi lists one entry per
        basis term with its column of coefficients.  Floats are emitted with
        full repr precision, so from_json restores the model bit-exactly.
        """
        psi = []
        for j, tm in enumerate(self.basis.terms):
            psi.append({
                "term": tm.label(),
                "params": {"kind": tm.kind, "degree": tm.degree,
                           "omega": tm.omega, "phase": tm.phase,
                           "alpha": tm.alpha},
                "coeffs": self.psi_coeffs[:, j].tolist(),
            })
        payload = {
            "mode": self.mode,
            "n": int(self.dynamics.shape[0]),
            "B": self.dynamics.tolist(),
            "psi": psi,
            "C": self.C.tolist(),
            "fit": list(self.fit) if self.fit is not None else None,
            "dt": self.dt,
            "t0": self.t0,
            "output_offset": self.output_offset.tolist(),
            "residual_rms": list(self.residual_rms),
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "ReducedModel":
        d = json.loads(text)
        n = int(d["n"])
        basis = TimeBasis(tuple(
            BasisTerm(p["kind"], p["degree"], p["omega"], p["phase"], p["alpha"])
            for p in (entry["params"] for entry in d["psi"])))
        psi_coeffs = np.zeros((n, len(d["psi"])))
        for j, entry in enumerate(d["psi"]):
            psi_coeffs[:, j] = entry["coeffs"]
        return cls(
            mode=d["mode"],
            dynamics=np.array(d["B"], dtype=float),
            psi_coeffs=psi_coeffs,
            C=np.array(d["C"], dtype=float),
            output_offset=np.array(d["output_offset"], dtype=float),
            basis=basis,
            dt=d["dt"],
            t0=d.get("t0", 0.0),
            fit=tuple(d["fit"]) if d["fit"] is not None else None,
            residual_rms=tuple(d["residual_rms"]),
        )


def fit_percent(y, yhat) -> np.ndarray:
    """Per-channel fit 100*(1 - ||y - yhat|| / ||y - mean(y)||).

    100 is a perfect match; negative values mean worse than the mean
    predictor.  Constant observations are rejected.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float).T).T
    yhat = np.atleast_2d(np.asarray(yhat, dtype=float).T).T
    if y.shape != yhat.shape:
        raise ValueError("y and yhat must have equal shapes")
    out = np.empty(y.shape[1])
    for c in range(y.shape[1]):
        denom = float(np.linalg.norm(y[:, c] - y[:, c].mean()))
        if denom == 0.0:
            raise DegenerateDataError(f"channel {c} is constant; fit percent undefined")
        out[c] = 100.0 * (1.0 - float(np.linalg.norm(y[:, c] - yhat[:, c])) / denom)
    return out


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average per column; windows shrink at the edges.

    Differentiation amplifies noise, so continuous-mode fits can pre-smooth
    the state sequence with this filter.  window <= 1 is the identity.
    """
    arr = np.asarray(values, dtype=float)
    if window <= 1:
        return arr.copy()
    flat = arr.ndim == 1
    if flat:
        arr = arr[:, None]
    h = window // 2
    csum = np.vstack([np.zeros((1, arr.shape[1])), np.cumsum(arr, axis=0)])
    k = arr.shape[0]
    lo = np.maximum(np.arange(k) - h, 0)
    hi = np.minimum(np.arange(k) + h + 1, k)
    out = (csum[hi] - csum[lo]) / (hi - lo)[:, None]
    return out[:, 0] if flat else out


def fit_model(states: np.ndarray, outputs, basis: TimeBasis | None = None,
              mode: str = "discrete", dt: float = 1.0, t0: float = 0.0,
              evaluate: bool = True, smooth_window: int = 0) -> ReducedModel:
    """Least-squares identification of the state and observation equations.

    states: (K, n) sequence on a uniform grid t0 + k*dt.  outputs: (K,) or
    (K, channels) observations aligned with the states.  In discrete mode the
    regression target is the next state; in continuous mode it is the
    central-difference derivative, optionally taken on a moving-average
    smoothed copy of the states (smooth_window > 1).  A rank-deficient
    regressor block raises, naming the cure (fewer basis terms or lower n).
    """
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[0] < 3:
        raise ValueError("states must be (K, n) with K >= 3")
    outputs = np.asarray(outputs, dtype=float)
    if outputs.ndim == 1:
        outputs = outputs[:, None]
    if outputs.shape[0] != states.shape[0]:
        raise ValueError("outputs must align with states")
    if mode not in ("discrete", "continuous"):
        raise ConfigError(f"unknown mode {mode!r}")
    basis = basis if basis is not None else TimeBasis(())
    k, n = states.shape
    tgrid = t0 + dt * np.arange(k)
    phi = basis.evaluate(tgrid)

    if mode == "discrete":
        src = states
        reg = np.hstack([src[:-1], phi[:-1]])
        target = src[1:]
    else:
        src = moving_average(states, smooth_window) if smooth_window > 1 else states
        deriv = np.empty_like(src)
        deriv[1:-1] = (src[2:] - src[:-2]) / (2.0 * dt)
        deriv[0] = (src[1] - src[0]) / dt
        deriv[-1] = (src[-1] - src[-2]) / dt
        reg = np.hstack([src, phi])
        target = deriv

    sol, _, rank, _ = np.linalg.lstsq(reg, target, rcond=None)
    if rank < reg.shape[1]:
        raise DegenerateDataError(
            "rank-deficient regressor: drop basis terms or reduce the state order")
    dynamics = sol[:n].T
    psi = sol[n:].T

    obs_reg = np.hstack([src, np.ones((k, 1))])
    obs_sol, _, obs_rank, _ = np.linalg.lstsq(obs_reg, outputs, rcond=None)
    if obs_rank < obs_reg.shape[1]:
        raise DegenerateDataError("rank-deficient observation regression")
    c_mat = obs_sol[:n].T
    offset = obs_sol[n]

    resid = target - reg @ sol
    rms = tuple(float(v) for v in np.sqrt(np.mean(resid ** 2, axis=0)))

    model = ReducedModel(mode, dynamics, psi, c_mat, offset, basis, dt, t0,
                         fit=None, residual_rms=rms)
    if not evaluate:
        return model
    try:
        x0 = estimate_x0(model, outputs)
    except (DivergenceError, np.linalg.LinAlgError):
        x0 = src[0]
    try:
        yhat = simulate(model, x0, k)
        fp = tuple(float(v) for v in fit_percent(outputs, yhat))
    except (DivergenceError, DegenerateDataError):
        fp = None
    return ReducedModel(mode, dynamics, psi, c_mat, offset, basis, dt, t0,
                        fit=fp, residual_rms=rms)


def _state_run(model: ReducedModel, x0, steps: int, t0: float,
               forced: bool = True) -> np.ndarray:
    """Propagate the model state; forced=False drops the basis input."""
    x = np.asarray(x0, dtype=float).copy()
    dt = model.dt
    basis = model.basis
    out = np.empty((steps, model.n_states))

    if model.mode == "discrete":
        for i in range(steps):
            out[i] = x
            if i == steps - 1:
                break
            x = model.dynamics @ x
            if forced:
                phi = basis.evaluate(np.array([t0 + i * dt]))[0]
                x = x + model.psi_coeffs @ phi
            if not np.all(np.isfinite(x)) or np.linalg.norm(x) > _STATE_NORM_LIMIT:
                raise DivergenceError(f"model state diverged at step {i + 1}")
        return out

    if forced:
        def rhs(state, t):
            phi = basis.evaluate(np.array([t]))[0]
            return model.dynamics @ state + model.psi_coeffs @ phi
    else:
        def rhs(state, t):
            return model.dynamics @ state

    for i in range(steps):
        out[i] = x
        if i == steps - 1:
            break
        x = rk4_step(rhs, x, t0 + i * dt, dt)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > _STATE_NORM_LIMIT:
            raise DivergenceError(f"model state diverged at step {i + 1}")
    return out


def estimate_x0(model: ReducedModel, outputs, t0: float | None = None) -> np.ndarray:
    """Least-squares initial state for the free run against observed outputs.

    The model output is affine in the initial state, so the best x0 follows
    from superposing one forced run started at zero with the n unforced runs
    started at the basis vectors.  This mirrors the initial-condition
    estimation convention of standard identification toolboxes; it keeps the
    evaluation from penalising directions the data never excited.
    """
    outputs = np.asarray(outputs, dtype=float)
    if outputs.ndim == 1:
        outputs = outputs[:, None]
    k = outputs.shape[0]
    if k < 2:
        raise ValueError("outputs must contain at least 2 rows")
    t0 = model.t0 if t0 is None else t0
    n = model.n_states
    forced = _state_run(model, np.zeros(n), k, t0, forced=True)
    y_forced = forced @ model.C.T + model.output_offset
    cols = []
    for i in range(n):
        free = _state_run(model, np.eye(n)[i], k, t0, forced=False)
        cols.append((free @ model.C.T).ravel())
    design = np.column_stack(cols)
    target = (outputs - y_forced).ravel()
    sol, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    return sol


def simulate(model: ReducedModel, x0, steps: int, t0: float | None = None) -> np.ndarray:
    """Free-run the model; returns (steps, channels) outputs starting at x0.

    The first output row corresponds to x0 itself.  Raises DivergenceError
    naming the step when the state norm passes 1e12.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.asarray(x0, dtype=float)
    if x.shape != (model.n_states,):
        raise ValueError(f"x0 must have shape ({model.n_states},)")
    t0 = model.t0 if t0 is None else t0
    states = _state_run(model, x, steps, t0, forced=True)
    return states @ model.C.T + model.output_offset
