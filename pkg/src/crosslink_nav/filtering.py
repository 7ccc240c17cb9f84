"""Sequential estimation of the joint two-spacecraft state.

Implements the extended Kalman filter with state-noise compensation, optional
bias / clock-drift augmentation and the sequential (Schmidt) consider filter.
The functions here are purely functional: every update returns a new
:class:`JointFilterState`.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import FilterDivergenceError
from .validation import check_covariance, is_psd, symmetrize

MODES = ("neglect", "estimate", "consider")
Q_FORMS = ("quartic", "snc")


@dataclass(frozen=True)
class ProcessNoiseConfig:
    sigma: tuple = (2e-5, 2e-5)  # per spacecraft, non-dimensional acceleration
    form: str = "quartic"

    def __post_init__(self):
        if len(self.sigma) != 2 or any(s < 0 for s in self.sigma):
            raise ValueError("sigma needs two non-negative entries")
        if self.form not in Q_FORMS:
            raise ValueError(f"form must be one of {Q_FORMS}")


def process_noise_block(sigma, dt, form="quartic"):
    """6x6 state-noise-compensation block for one spacecraft.

    ``form="quartic"`` uses the dt^4/3, dt^3/2, dt^2 pattern; ``"snc"`` the
    continuous white-acceleration pattern dt^3/3, dt^2/2, dt.
    """
    s2 = sigma * sigma
    if form == "quartic":
        pp, pv, vv = dt**4 / 3.0, dt**3 / 2.0, dt**2
    elif form == "snc":
        pp, pv, vv = dt**3 / 3.0, dt**2 / 2.0, dt
    else:
        raise ValueError(f"form must be one of {Q_FORMS}")
    eye = np.eye(3)
    return s2 * np.block([[pp * eye, pv * eye], [pv * eye, vv * eye]])


def build_process_noise(cfg, dt):
    """Block-diagonal 12x12 process noise over the two spacecraft."""
    q = np.zeros((12, 12))
    q[:6, :6] = process_noise_block(cfg.sigma[0], dt, cfg.form)
    q[6:, 6:] = process_noise_block(cfg.sigma[1], dt, cfg.form)
    return q


@dataclass(frozen=True)
class ConsiderConfig:
    b0: np.ndarray = field(default_factory=lambda: np.zeros(1))
    B0: np.ndarray = field(default_factory=lambda: np.zeros((1, 1)))

    def __post_init__(self):
        b0 = np.atleast_1d(np.asarray(self.b0, dtype=float))
        B0 = check_covariance(np.atleast_2d(np.asarray(self.B0, dtype=float)), b0.size, "B0")
        object.__setattr__(self, "b0", b0)
        object.__setattr__(self, "B0", B0)

    @property
    def q(self):
        return self.b0.size


@dataclass(frozen=True)
class JointFilterState:
    """Estimate, covariance and (consider mode) state/bias cross-covariance.

    ``n_aug`` counts augmented measurement parameters appended after the 12
    dynamical states: 1 for a bias, 2 for bias plus clock drift.
    """

    epoch: float
    x: np.ndarray
    P: np.ndarray
    mode: str = "neglect"
    n_aug: int = 0
    C: np.ndarray = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        n = 12 + self.n_aug
        if self.x.shape != (n,) or self.P.shape != (n, n):
            raise ValueError(f"state/covariance must have dimension {n}")
        if self.mode == "consider" and (self.C is None or self.C.shape[0] != n):
            raise ValueError("consider mode needs a cross-covariance with one row per state")

    @property
    def dim(self):
        return self.x.shape[0]


def initial_state(x0, P0, epoch=0.0, mode="neglect", consider=None):
    x0 = np.asarray(x0, dtype=float).copy()
    P0 = check_covariance(P0, x0.size, "P0")
    C = None
    if mode == "consider":
        consider = consider or ConsiderConfig()
        C = np.zeros((x0.size, consider.q))
    return JointFilterState(epoch, x0, P0.copy(), mode, 0, C)


def _augment(f, prior_var, initial=0.0):
    n = f.dim
    x = np.append(f.x, initial)
    P = np.zeros((n + 1, n + 1))
    P[:n, :n] = f.P
    P[n, n] = prior_var
    C = None if f.C is None else np.vstack([f.C, np.zeros((1, f.C.shape[1]))])
    return replace(f, x=x, P=P, n_aug=f.n_aug + 1, C=C)


def augment_bias(f, prior_sigma, initial=0.0):
    """Append a constant measurement-bias state."""
    if f.n_aug != 0:
        raise ValueError("state is already augmented with a bias")
    if f.mode == "consider":
        raise ValueError("a considered bias cannot also be estimated")
    return _augment(f, prior_sigma**2, initial)


def augment_clock_drift(f, prior_sigma, initial=0.0):
    """Append a clock-drift state; its measurement partial is the elapsed time."""
    if f.n_aug == 0:
        raise ValueError("augment the bias before the clock drift")
    if f.n_aug >= 2:
        raise ValueError("state is already augmented with a clock drift")
    return _augment(f, prior_sigma**2, initial)


def extend_stm(phi, n_aug):
    """Pad a dynamical STM with identity rows/columns for augmented parameters."""
    if n_aug == 0:
        return phi
    n = phi.shape[0]
    out = np.eye(n + n_aug)
    out[:n, :n] = phi
    return out


def time_update(f, flow, t1, Q=None):
    """Propagate estimate and covariance to ``t1``.

    ``flow(x12, t0, t1)`` must return the propagated 12-state and its 12x12
    state transition matrix.
    """
    x12, phi = flow(f.x[:12], f.epoch, t1)
    phi = extend_stm(phi, f.n_aug)
    x = f.x.copy()
    x[:12] = x12
    P = phi @ f.P @ phi.T
    if Q is not None:
        P[:12, :12] += Q
    C = None if f.C is None else phi @ f.C
    return replace(f, epoch=t1, x=x, P=symmetrize(P), C=C)


@dataclass(frozen=True)
class UpdateInfo:
    gain: np.ndarray
    innovation: np.ndarray
    innovation_cov: np.ndarray
    joseph_rel_diff: float = float("nan")


def _as_meas(y, pred, H, W):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    pred = np.atleast_1d(np.asarray(pred, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if not (y.shape == pred.shape and H.shape[0] == y.size and W.shape == (y.size, y.size)):
        raise ValueError("inconsistent measurement dimensions")
    return y, pred, H, W


def _gain(PHt, S, epoch):
    """Kalman gain ``PHt S^-1`` with a positivity check on ``S``."""
    if S.shape == (1, 1):
        if not S[0, 0] > 0:
            raise FilterDivergenceError(f"innovation covariance is not positive at epoch {epoch}")
        return PHt / S[0, 0]
    if np.any(np.linalg.eigvalsh(symmetrize(S)) <= 0):
        raise FilterDivergenceError(f"innovation covariance is not positive at epoch {epoch}")
    return np.linalg.solve(S, PHt.T).T


def joseph_covariance(P_bar, K, H, W):
    ikh = np.eye(P_bar.shape[0]) - K @ H
    return ikh @ P_bar @ ikh.T + K @ W @ K.T


def measurement_update(f, y, pred, H, W, joseph_check=False):
    """EKF correction with observation ``y`` and predicted observable ``pred``.

    Returns ``(new_state, UpdateInfo)``. The covariance follows
    ``P = (I - K H) P_bar`` and is re-symmetrized afterwards.
    """
    y, pred, H, W = _as_meas(y, pred, H, W)
    P_bar = f.P
    PHt = P_bar @ H.T
    S = H @ PHt + W
    K = _gain(PHt, S, f.epoch)
    innovation = y - pred
    x = f.x + K @ innovation
    P = symmetrize((np.eye(f.dim) - K @ H) @ P_bar)
    rel = float("nan")
    if joseph_check:
        Pj = joseph_covariance(P_bar, K, H, W)
        rel = float(np.max(np.abs(P - Pj)) / np.max(np.abs(Pj)))
    return replace(f, x=x, P=P), UpdateInfo(K, innovation, S, rel)


def consider_measurement_update(f, y, pred, H, N, cfg, W):
    """Schmidt consider update.

    ``pred`` is the observable evaluated at the predicted state without the
    bias; the a-priori bias ``cfg.b0`` enters through ``N``. The covariance
    correction uses ``K N C_bar^T`` so that all terms conform for any number
    of considered parameters.
    """
    y, pred, H, W = _as_meas(y, pred, H, W)
    N = np.atleast_2d(np.asarray(N, dtype=float))
    if N.shape != (y.size, cfg.q):
        raise ValueError("N must have shape (m, q)")
    P_bar, C_bar, B0 = f.P, f.C, cfg.B0
    PHt = P_bar @ H.T
    HC = H @ C_bar
    # same operation order as the EKF so that B0 = 0, C = 0 reproduces it exactly
    omega = H @ PHt + (N @ HC.T + HC @ N.T + N @ B0 @ N.T) + W
    K = _gain(PHt + C_bar @ N.T, omega, f.epoch)
    innovation = y - pred - N @ cfg.b0
    x = f.x + K @ innovation
    P = symmetrize((np.eye(f.dim) - K @ H) @ P_bar - K @ N @ C_bar.T)
    C = C_bar - K @ (HC + N @ B0)
    return replace(f, x=x, P=P, C=C), UpdateInfo(K, innovation, omega)


def check_health(P, tol=1e-10):
    if not np.array_equal(P, P.T):
        raise FilterDivergenceError("covariance lost symmetry")
    if not is_psd(P, tol):
        raise FilterDivergenceError("covariance lost positive semidefiniteness")


def consider_time_update(C, phi):
    """Map the state/bias cross-covariance through the (extended) STM."""
    return phi @ C
