"""Joint two-spacecraft flows used by the filter and the truth generator.

A flow maps the 12-state ``[r1 v1 r2 v2]`` (non-dimensional units) between
two epochs and returns the block-diagonal 12x12 STM. Both flows integrate
with fixed-step RK4 so runs are bit-reproducible.
"""

import numpy as np

from .dynamics import EARTH_MOON, rk4_crtbp
from .ephemeris import NbodyModel, rk4_nbody
from .exceptions import IntegrationError
from .integrators import IntegratorConfig, integrate, n_substeps

_EYE6 = np.eye(6).ravel()


class CrtbpFlow:
    """Both spacecraft in the Earth-Moon CRTBP, rotating barycentric frame."""

    frame = "rotating"

    def __init__(self, params=EARTH_MOON, step_s=10.0):
        self.params = params
        self.step_s = step_s
        self.step = params.seconds_to_nd(step_s)

    def _one(self, y, dt):
        n = n_substeps(dt, self.step)
        return rk4_crtbp(y, self.params.mu, dt / n, n) if n else y

    def __call__(self, x12, t0, t1):
        dt = t1 - t0
        phi = np.zeros((12, 12))
        out = np.empty(12)
        for i in (0, 6):
            y = self._one(np.concatenate([x12[i : i + 6], _EYE6]), dt)
            out[i : i + 6] = y[:6]
            phi[i : i + 6, i : i + 6] = y[6:].reshape(6, 6)
        if not np.all(np.isfinite(out)):
            raise IntegrationError(f"non-finite state propagating to t={t1}")
        return out, phi

    def trajectory(self, x12, times, cfg=None):
        """States at ``times`` (shape (n, 12)), fixed-step unless ``cfg`` asks otherwise."""
        times = np.asarray(times, dtype=float)
        if cfg is not None and cfg.method == "adaptive":
            mu = self.params.mu
            from .dynamics import crtbp_rhs

            return np.hstack(
                [integrate(lambda t, y: crtbp_rhs(y, mu), x12[i : i + 6], times, cfg) for i in (0, 6)]
            )
        out = np.empty((times.size, 12))
        out[0] = x12
        y = [np.array(x12[:6], dtype=float), np.array(x12[6:], dtype=float)]
        for k in range(1, times.size):
            dt = times[k] - times[k - 1]
            y = [self._one(yi, dt) for yi in y]
            out[k, :6], out[k, 6:] = y
        return out


class NbodyFlow:
    """Point-mass Earth/Moon/Sun plus SRP, Earth-centered inertial frame.

    Lengths and times are scaled by the CRTBP units so filter tuning carries
    over between dynamics models.
    """

    frame = "eci"
    cache_size = 200_000

    def __init__(self, models=(None, None), params=EARTH_MOON, step_s=10.0):
        self.models = tuple(m or NbodyModel() for m in models)
        self.params = params
        self.step_s = step_s
        self.step = params.seconds_to_nd(step_s)
        lu, tu = params.l_star, params.time_unit_s
        self._args = [m.kernel_args(lu, tu) for m in self.models]
        self._cache = {}

    def _stage(self, t0, dt):
        # truth, filter and every Monte Carlo run revisit the same intervals
        key = (t0, dt)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        n = n_substeps(dt, self.step)
        if not n:
            return 0, 0.0, None, None
        h = dt / n
        tu = self.params.time_unit_s
        moon, sun = self.models[0].stage_positions(t0 * tu, h * tu, n, self.params.l_star)
        if len(self._cache) < self.cache_size:
            self._cache[key] = (n, h, moon, sun)
        return n, h, moon, sun

    def __call__(self, x12, t0, t1):
        n, h, moon, sun = self._stage(t0, t1 - t0)
        phi = np.eye(12)
        out = np.array(x12, dtype=float)
        if n:
            for j, i in enumerate((0, 6)):
                y = rk4_nbody(np.concatenate([x12[i : i + 6], _EYE6]), h, n, *self._args[j], moon, sun)
                out[i : i + 6] = y[:6]
                phi[i : i + 6, i : i + 6] = y[6:].reshape(6, 6)
        if not np.all(np.isfinite(out)):
            raise IntegrationError(f"non-finite state propagating to t={t1}")
        return out, phi

    def trajectory(self, x12, times, cfg=None):
        times = np.asarray(times, dtype=float)
        out = np.empty((times.size, 12))
        out[0] = x12
        y = [np.array(x12[:6], dtype=float), np.array(x12[6:], dtype=float)]
        for k in range(1, times.size):
            n, h, moon, sun = self._stage(times[k - 1], times[k] - times[k - 1])
            if n:
                y = [rk4_nbody(y[j], h, n, *self._args[j], moon, sun) for j in (0, 1)]
            out[k, :6], out[k, 6:] = y
        return out
