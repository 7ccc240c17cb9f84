"""Numerical integration back ends.

Two schemes are exposed through :class:`IntegratorConfig`:

* ``"adaptive"`` -- embedded Dormand-Prince 5(4) with error control, backed by
  :func:`scipy.integrate.solve_ivp`.
* ``"rk4"`` -- classical fixed-step fourth-order Runge-Kutta. Each output
  segment is split into ``ceil(dt / fixed_step)`` equal steps, so results depend
  only on the node times and are bit-reproducible.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .exceptions import IntegrationError

METHODS = ("adaptive", "rk4")


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "adaptive"
    rel_tol: float = 1e-12
    abs_tol: float = 1e-12
    max_step: float = math.inf
    fixed_step: float = 1e-3

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("integration tolerances must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.method == "rk4" and not (self.fixed_step > 0 and math.isfinite(self.fixed_step)):
            raise ValueError("fixed_step must be positive for the rk4 method")

    @classmethod
    def fixed(cls, step):
        return cls(method="rk4", fixed_step=step)


def n_substeps(dt, step):
    """Number of equal RK4 sub-steps used to cover an interval of length ``dt``."""
    if dt == 0.0:
        return 0
    return max(1, int(math.ceil(abs(dt) / step - 1e-9)))


def rk4_step(fun, t, y, h):
    k1 = fun(t, y)
    k2 = fun(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = fun(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = fun(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(fun, y0, times, cfg=None):
    """Integrate ``dy/dt = fun(t, y)`` and sample the solution at ``times``.

    ``times[0]`` is the initial epoch. Returns an array of shape
    ``(len(times), len(y0))`` whose first row is ``y0``.
    """
    cfg = cfg or IntegratorConfig()
    times = np.asarray(times, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(times)):
        raise ValueError("times must be finite")
    out = np.empty((times.size, y0.size))
    out[0] = y0
    if times.size == 1:
        return out

    if cfg.method == "rk4":
        y = y0.copy()
        for i in range(1, times.size):
            t0, t1 = times[i - 1], times[i]
            n = n_substeps(t1 - t0, cfg.fixed_step)
            if n:
                h = (t1 - t0) / n
                for j in range(n):
                    y = rk4_step(fun, t0 + j * h, y, h)
            if not np.all(np.isfinite(y)):
                raise IntegrationError(f"non-finite state at t={t1}")
            out[i] = y
        return out

    if np.all(times == times[0]):
        out[:] = y0
        return out
    sol = solve_ivp(
        fun,
        (times[0], times[-1]),
        y0,
        method="RK45",
        t_eval=times,
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=cfg.max_step,
        dense_output=False,
    )
    if sol.status != 0:
        raise IntegrationError(sol.message)
    out[:] = sol.y.T
    out[0] = y0
    return out
