"""Filter orchestration: alternate time and measurement updates over a pass."""

from dataclasses import dataclass

import numpy as np

from .filtering import (
    ConsiderConfig,
    ProcessNoiseConfig,
    build_process_noise,
    check_health,
    consider_measurement_update,
    measurement_update,
    time_update,
)
from .radiometrics import RANGE, measurement_partials, observe


@dataclass
class FilterRun:
    """Per-measurement record of a filter pass (all in filter units).

    ``errors`` (truth minus estimate) is only filled when truth was supplied.
    ``pos_trace_pre`` / ``pos_trace_post`` hold the per-spacecraft position
    covariance traces before and after each update.
    """

    epochs: np.ndarray
    x_hat: np.ndarray
    sigma: np.ndarray
    residuals: np.ndarray
    pos_trace_pre: np.ndarray
    pos_trace_post: np.ndarray
    errors: np.ndarray = None
    final_state: object = None
    diverged: bool = False
    max_joseph_rel_diff: float = 0.0

    @property
    def n(self):
        return self.epochs.size


def predicted_observable(x, kind, n_aug, dt):
    value = observe(x[:12], kind)
    if n_aug >= 1:
        value += x[12]
    if n_aug == 2:
        value += x[13] * dt
    return value


def run_filter(
    f0,
    measurements,
    flow,
    process_noise=None,
    consider=None,
    truth=None,
    health_checks=False,
    divergence_limit=None,
):
    """Process time-ordered measurements one at a time.

    Parameters
    ----------
    f0 : JointFilterState
        Initial estimate at (or before) the first measurement epoch.
    measurements : sequence of MeasurementSample
        Values and sigmas in filter units.
    flow : callable
        ``flow(x12, t0, t1) -> (x12, stm)``.
    truth : ndarray, optional
        True 12-states at the measurement epochs, used for error bookkeeping
        and divergence detection.
    health_checks : bool
        Check covariance PSD and the Joseph-form equivalence at every update.
    divergence_limit : float, optional
        Abort (flagging ``diverged``) once either spacecraft's position error
        exceeds this value.
    """
    process_noise = process_noise or ProcessNoiseConfig()
    if f0.mode == "consider" and consider is None:
        consider = ConsiderConfig()
    m = len(measurements)
    dim = f0.dim
    epochs = np.array([s.epoch for s in measurements], dtype=float)
    if np.any(np.diff(epochs) < 0):
        raise ValueError("measurements must be time-ordered")
    x_hat = np.full((m, dim), np.nan)
    sigma = np.full((m, dim), np.nan)
    resid = np.full(m, np.nan)
    tr_pre = np.full((m, 2), np.nan)
    tr_post = np.full((m, 2), np.nan)
    errors = None if truth is None else np.full((m, 12), np.nan)
    t_start = f0.epoch
    f = f0
    diverged = False
    max_joseph = 0.0
    q_cache = {}

    for k, meas in enumerate(measurements):
        dt = meas.epoch - f.epoch
        if dt not in q_cache:
            q_cache[dt] = build_process_noise(process_noise, abs(dt))
        f = time_update(f, flow, meas.epoch, q_cache[dt])
        tr_pre[k] = np.trace(f.P[0:3, 0:3]), np.trace(f.P[6:9, 6:9])
        elapsed = meas.epoch - t_start
        H = measurement_partials(f.x[:12], meas.kind, f.n_aug, elapsed)
        pred = predicted_observable(f.x, meas.kind, f.n_aug, elapsed)
        W = meas.sigma**2
        if f.mode == "consider":
            f, info = consider_measurement_update(f, meas.value, pred, H[:12], np.ones((1, consider.q)), consider, W)
        else:
            f, info = measurement_update(f, meas.value, pred, H, W, joseph_check=health_checks)
            if health_checks:
                max_joseph = max(max_joseph, info.joseph_rel_diff)
        if health_checks:
            check_health(f.P)
        resid[k] = info.innovation[0]
        x_hat[k] = f.x
        sigma[k] = np.sqrt(np.clip(np.diag(f.P), 0.0, None))
        tr_post[k] = np.trace(f.P[0:3, 0:3]), np.trace(f.P[6:9, 6:9])
        if truth is not None:
            errors[k] = truth[k] - f.x[:12]
            if divergence_limit is not None and max(
                np.linalg.norm(errors[k, 0:3]), np.linalg.norm(errors[k, 6:9])
            ) > divergence_limit:
                diverged = True
                break

    return FilterRun(epochs, x_hat, sigma, resid, tr_pre, tr_post, errors, f, diverged, max_joseph)
