"""Benchmark dynamical systems with exact Jacobians, plus fixed-step integrators.

Flows are integrated with classical fixed-step RK4 (no adaptive stepping, so
runs are bit-reproducible), maps by direct iteration.  Every catalog entry
carries an analytic Jacobian that is checked against central finite
differences the first time the catalog is built in a process.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, DivergenceError

DEFAULT_TRANSIENT = 1000

# States beyond this norm are treated as numerically divergent.
_NORM_LIMIT = 1e100


@dataclass(frozen=True)
class ReferenceSystem:
    """A named flow or map with analytic right-hand side and Jacobian.

    f(x, t) returns the derivative (flows) or the next state (maps); t is
    ignored by autonomous systems.  jac(x, t) is the state Jacobian d f / d x.
    """

    name: str
    kind: str  # "flow" | "map"
    dim: int
    f: Callable[[np.ndarray, float], np.ndarray]
    jac: Callable[[np.ndarray, float], np.ndarray]
    params: dict = field(default_factory=dict)
    x0_default: tuple = ()
    dt_default: float = 1.0
    transient_default: int | None = None  # None -> module default


def _lorenz(sigma: float = 10.0, rho: float = 28.0, beta: float = 8.0 / 3.0) -> ReferenceSystem:
    def f(x, t):
        return np.array([
            sigma * (x[1] - x[0]),
            x[0] * (rho - x[2]) - x[1],
            x[0] * x[1] - beta * x[2],
        ])

    def jac(x, t):
        return np.array([
            [-sigma, sigma, 0.0],
            [rho - x[2], -1.0, -x[0]],
            [x[1], x[0], -beta],
        ])

    return ReferenceSystem(
        "lorenz", "flow", 3, f, jac,
        params={"sigma": sigma, "rho": rho, "beta": beta},
        x0_default=(1.0, 1.0, 1.0), dt_default=0.01,
    )


def _rossler(a: float = 0.2, b: float = 0.2, c: float = 5.7) -> ReferenceSystem:
    def f(x, t):
        return np.array([
            -(x[1] + x[2]),
            x[0] + a * x[1],
            b + x[2] * (x[0] - c),
        ])

    def jac(x, t):
        return np.array([
            [0.0, -1.0, -1.0],
            [1.0, a, 0.0],
            [x[2], 0.0, x[0] - c],
        ])

    return ReferenceSystem(
        "rossler", "flow", 3, f, jac,
        params={"a": a, "b": b, "c": c},
        x0_default=(1.0, 1.0, 1.0), dt_default=0.05,
    )


def _test42() -> ReferenceSystem:
    # Funnel-type benchmark flow used throughout the estimator tests.
    def f(x, t):
        return np.array([
            -x[1] - x[2],
            x[0],
            0.375 * (x[1] - x[1] ** 2) - 0.23 * x[2],
        ])

    def jac(x, t):
        return np.array([
            [0.0, -1.0, -1.0],
            [1.0, 0.0, 0.0],
            [0.0, 0.375 * (1.0 - 2.0 * x[1]), -0.23],
        ])

    return ReferenceSystem(
        "test42", "flow", 3, f, jac,
        params={"gamma": 0.375, "delta": 0.23},
        x0_default=(0.1, 0.1, 0.1), dt_default=0.1,
    )


def _henon(a: float = 1.4, b: float = 0.3) -> ReferenceSystem:
    def f(x, t):
        return np.array([1.0 - a * x[0] ** 2 + x[1], b * x[0]])

    def jac(x, t):
        return np.array([[-2.0 * a * x[0], 1.0], [b, 0.0]])

    return ReferenceSystem(
        "henon", "map", 2, f, jac,
        params={"a": a, "b": b},
        x0_default=(0.0, 0.0), dt_default=1.0,
    )


def _example2() -> ReferenceSystem:
    # Oscillator with quadratic stiffness under weak 2-rad/s sinusoidal forcing.
    def f(x, t):
        return np.array([x[1], -x[0] + x[0] ** 2 - 0.05 * np.sin(2.0 * t)])

    def jac(x, t):
        return np.array([[0.0, 1.0], [-1.0 + 2.0 * x[0], 0.0]])

    return ReferenceSystem(
        "example2", "flow", 2, f, jac,
        params={"amplitude": 0.05, "omega": 2.0},
        x0_default=(0.0, 0.042), dt_default=0.1,
    )


def _example3() -> ReferenceSystem:
    # Two logistic-type maps with weak difference coupling.
    def f(x, t):
        return np.array([
            1.25 * x[0] * (1.0 - x[1]),
            1.3 * x[1] * (1.0 - x[0]) + 0.1 * (x[0] - x[1]),
        ])

    def jac(x, t):
        return np.array([
            [1.25 * (1.0 - x[1]), -1.25 * x[0]],
            [-1.3 * x[1] + 0.1, 1.3 * (1.0 - x[0]) - 0.1],
        ])

    # Almost every orbit escapes to infinity after a few dozen steps; the
    # dynamics live on a chaotic saddle around the fixed point (0.25, 0.2).
    # This seed gives one of the longest bounded rides, about 65 steps.
    return ReferenceSystem(
        "example3", "map", 2, f, jac,
        params={"r1": 1.25, "r2": 1.3, "coupling": 0.1},
        x0_default=(0.64944548, 0.59384336), dt_default=1.0,
        transient_default=0,
    )


def check_jacobian(system: ReferenceSystem, n_states: int = 100,
                   seed: int = 0, rel_tol: float = 1e-6) -> float:
    """Compare the analytic Jacobian with central differences at random states.

    Returns the worst relative deviation seen; raises AssertionError when it
    exceeds rel_tol.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_states):
        x = rng.uniform(-2.0, 2.0, size=system.dim)
        t = float(rng.uniform(0.0, 10.0))
        analytic = system.jac(x, t)
        fd = np.empty_like(analytic)
        for j in range(system.dim):
            h = 1e-6 * max(1.0, abs(x[j]))
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            fd[:, j] = (system.f(xp, t) - system.f(xm, t)) / (2.0 * h)
        scale = 1.0 + np.abs(analytic).max()
        worst = max(worst, float(np.abs(fd - analytic).max() / scale))
    if worst > rel_tol:
        raise AssertionError(
            f"jacobian of {system.name} deviates from finite differences by {worst:.3e}")
    return worst


_CATALOG_VERIFIED = False


def catalog(name: str | None = None):
    """Look up a built-in system by name, or get all of them as a dict.

    Jacobians are FD-checked the first time the catalog is touched in a
    process.  Unknown names raise ConfigError listing the valid choices.
    """
    systems = {
        s.name: s
        for s in (
            _lorenz(), _rossler(), _test42(), _henon(),
            _example2(), _example3(),
        )
    }
    global _CATALOG_VERIFIED
    if not _CATALOG_VERIFIED:
        for s in systems.values():
            check_jacobian(s)
        _CATALOG_VERIFIED = True
    if name is None:
        return systems
    if name not in systems:
        raise ConfigError(
            f"unknown system {name!r}; choose from {sorted(systems)}")
    return systems[name]


def _check_state(x: np.ndarray, step: int, name: str) -> None:
    if not np.all(np.isfinite(x)) or float(np.linalg.norm(x)) > _NORM_LIMIT:
        raise DivergenceError(f"{name}: state diverged at step {step}")


def rk4_step(f: Callable, x: np.ndarray, t: float, dt: float) -> np.ndarray:
    k1 = f(x, t)
    k2 = f(x + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = f(x + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = f(x + dt * k3, t + dt)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(system: ReferenceSystem, x0, dt: float, steps: int,
              t0: float = 0.0) -> np.ndarray:
    """RK4-integrate a flow; returns the (steps+1, dim) trajectory incl. x0."""
    if system.kind != "flow":
        raise ValueError(f"{system.name} is a map; use iterate()")
    x = np.asarray(x0, dtype=float)
    out = np.empty((steps + 1, system.dim))
    out[0] = x
    t = t0
    for i in range(steps):
        x = rk4_step(system.f, x, t, dt)
        t = t0 + (i + 1) * dt
        _check_state(x, i + 1, system.name)
        out[i + 1] = x
    return out


def iterate(system: ReferenceSystem, x0, steps: int) -> np.ndarray:
    """Iterate a map; returns the (steps+1, dim) orbit including x0."""
    if system.kind != "map":
        raise ValueError(f"{system.name} is a flow; use integrate()")
    x = np.asarray(x0, dtype=float)
    out = np.empty((steps + 1, system.dim))
    out[0] = x
    for i in range(steps):
        x = system.f(x, float(i))
        _check_state(x, i + 1, system.name)
        out[i + 1] = x
    return out


def sample(system: ReferenceSystem, steps: int, x0=None, dt: float | None = None,
           transient: int | None = None, t0: float = 0.0) -> np.ndarray:
    """Generate `steps` post-transient samples of a catalog system.

    The first `transient` samples are discarded so estimators see on-attractor
    data.  When transient is None the system's own default applies (zero for
    saddle-transient systems whose orbits never settle).  Returns an array of
    shape (steps, dim).
    """
    x0 = system.x0_default if x0 is None else x0
    dt = system.dt_default if dt is None else dt
    if transient is None:
        transient = (DEFAULT_TRANSIENT if system.transient_default is None
                     else system.transient_default)
    total = transient + steps
    if system.kind == "flow":
        traj = integrate(system, x0, dt, total - 1, t0=t0)
    else:
        traj = iterate(system, x0, total - 1)
    return traj[transient:]
