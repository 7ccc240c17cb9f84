"""Earth-Moon CRTBP dynamics, variational equations and frame conversions.

All quantities are non-dimensional unless stated otherwise: lengths in units
of the Earth-Moon distance, time in units of ``t_star`` (so the rotating
frame turns at unit rate), velocities in ``l_star / t_star``.
"""

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from . import constants as const
from .exceptions import IntegrationError, SingularityError
from .integrators import IntegratorConfig, integrate, n_substeps
from .validation import check_vector


@dataclass(frozen=True)
class CrtbpParams:
    mu: float = const.MU_EARTH_MOON
    t_star: float = const.T_STAR_DAYS  # days
    l_star: float = const.L_STAR_KM  # km

    def __post_init__(self):
        if not 0.0 < self.mu < 0.5:
            raise ValueError(f"mu must lie in (0, 0.5), got {self.mu}")
        if not (self.t_star > 0 and self.l_star > 0):
            raise ValueError("t_star and l_star must be positive")

    @property
    def time_unit_s(self):
        return self.t_star * const.SECONDS_PER_DAY

    @property
    def velocity_unit_kms(self):
        return self.l_star / self.time_unit_s

    @property
    def accel_unit_kms2(self):
        return self.l_star / self.time_unit_s**2

    def seconds_to_nd(self, seconds):
        return seconds / self.time_unit_s

    def nd_to_seconds(self, t):
        return t * self.time_unit_s


EARTH_MOON = CrtbpParams()


def _vec3(v, name):
    return check_vector(v, 3, name)


@dataclass(frozen=True)
class RotatingState:
    """Barycentric rotating-frame state (non-dimensional)."""

    epoch: float
    pos: np.ndarray
    vel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pos", _vec3(self.pos, "pos"))
        object.__setattr__(self, "vel", _vec3(self.vel, "vel"))

    @classmethod
    def from_array(cls, x, epoch=0.0):
        x = check_vector(x, 6, "state")
        return cls(epoch, x[:3], x[3:])

    def as_array(self):
        return np.concatenate([self.pos, self.vel])


@dataclass(frozen=True)
class InertialState:
    """Barycentric inertial state; axes coincide with the rotating frame at t = 0."""

    epoch: float
    pos: np.ndarray
    vel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pos", _vec3(self.pos, "pos"))
        object.__setattr__(self, "vel", _vec3(self.vel, "vel"))

    @classmethod
    def from_array(cls, x, epoch=0.0):
        x = check_vector(x, 6, "state")
        return cls(epoch, x[:3], x[3:])

    def as_array(self):
        return np.concatenate([self.pos, self.vel])


@dataclass(frozen=True)
class KeplerianElements:
    """Classical elements; angles in degrees, ``sma`` in km."""

    sma: float
    ecc: float
    inc: float
    raan: float
    argp: float
    true_anomaly: float
    central_gm: float = const.GM_MOON

    def __post_init__(self):
        if not 0.0 <= self.ecc < 1.0:
            raise ValueError(f"only elliptical orbits are supported (ecc={self.ecc})")
        if self.central_gm <= 0:
            raise ValueError("central_gm must be positive")
        if self.sma * (1.0 - self.ecc) <= 0:
            raise ValueError("periapsis radius must be positive")


@dataclass(frozen=True)
class StmState:
    state: RotatingState
    stm: np.ndarray = field(default=None)


def _as_array(s):
    if isinstance(s, (RotatingState, InertialState)):
        return s.as_array()
    return check_vector(s, 6, "state")


def _epoch(s, default=0.0):
    return s.epoch if isinstance(s, (RotatingState, InertialState)) else default


def primary_distances(x, mu):
    r1 = math.sqrt((x[0] + mu) ** 2 + x[1] ** 2 + x[2] ** 2)
    r2 = math.sqrt((x[0] - 1.0 + mu) ** 2 + x[1] ** 2 + x[2] ** 2)
    return r1, r2


def _check_singularity(x, mu):
    r1, r2 = primary_distances(x, mu)
    if r1 < const.SINGULARITY_RADIUS or r2 < const.SINGULARITY_RADIUS:
        raise SingularityError(f"state within {const.SINGULARITY_RADIUS} of a primary (r1={r1}, r2={r2})")
    return r1, r2


# --- numba kernels -----------------------------------------------------------


@nb.njit(cache=True)
def _crtbp_accel(x, y, z, vx, vy, mu):
    r1 = math.sqrt((x + mu) ** 2 + y * y + z * z)
    r2 = math.sqrt((x - 1.0 + mu) ** 2 + y * y + z * z)
    r13 = r1 * r1 * r1
    r23 = r2 * r2 * r2
    ax = 2.0 * vy + x - (1.0 - mu) * (x + mu) / r13 - mu * (x + mu - 1.0) / r23
    ay = -2.0 * vx + (1.0 - (1.0 - mu) / r13 - mu / r23) * y
    az = ((mu - 1.0) / r13 - mu / r23) * z
    return ax, ay, az


@nb.njit(cache=True)
def _crtbp_gravity_gradient(x, y, z, mu):
    # Hessian of the effective potential (centrifugal term included)
    dx1 = x + mu
    dx2 = x - 1.0 + mu
    r1 = math.sqrt(dx1 * dx1 + y * y + z * z)
    r2 = math.sqrt(dx2 * dx2 + y * y + z * z)
    a = (1.0 - mu) / r1**3
    b = mu / r2**3
    a5 = 3.0 * (1.0 - mu) / r1**5
    b5 = 3.0 * mu / r2**5
    g = np.empty((3, 3))
    g[0, 0] = 1.0 - a - b + a5 * dx1 * dx1 + b5 * dx2 * dx2
    g[1, 1] = 1.0 - a - b + (a5 + b5) * y * y
    g[2, 2] = -a - b + (a5 + b5) * z * z
    g[0, 1] = g[1, 0] = (a5 * dx1 + b5 * dx2) * y
    g[0, 2] = g[2, 0] = (a5 * dx1 + b5 * dx2) * z
    g[1, 2] = g[2, 1] = (a5 + b5) * y * z
    return g


@nb.njit(cache=True)
def _crtbp_jac(s, mu):
    a = np.zeros((6, 6))
    a[0, 3] = 1.0
    a[1, 4] = 1.0
    a[2, 5] = 1.0
    a[3:, :3] = _crtbp_gravity_gradient(s[0], s[1], s[2], mu)
    a[3, 4] = 2.0
    a[4, 3] = -2.0
    return a


@nb.njit(cache=True)
def crtbp_rhs(y, mu):
    """Right-hand side for a 6-state or a 42-state (state + row-major STM)."""
    out = np.empty_like(y)
    out[0] = y[3]
    out[1] = y[4]
    out[2] = y[5]
    ax, ay, az = _crtbp_accel(y[0], y[1], y[2], y[3], y[4], mu)
    out[3] = ax
    out[4] = ay
    out[5] = az
    if y.shape[0] == 42:
        a = _crtbp_jac(y[:6], mu)
        phi = y[6:].reshape((6, 6))
        out[6:] = (a @ phi).ravel()
    return out


@nb.njit(cache=True)
def rk4_crtbp(y, mu, h, n):
    """``n`` fixed RK4 steps of size ``h`` on a 6- or 42-state."""
    for _ in range(n):
        k1 = crtbp_rhs(y, mu)
        k2 = crtbp_rhs(y + 0.5 * h * k1, mu)
        k3 = crtbp_rhs(y + 0.5 * h * k2, mu)
        k4 = crtbp_rhs(y + h * k3, mu)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


# --- public operations ------------------------------------------------------


def crtbp_derivative(s, params=EARTH_MOON):
    """Time derivative ``(xdot, ydot, zdot, xddot, yddot, zddot)`` of a rotating state."""
    x = _as_array(s)
    _check_singularity(x, params.mu)
    return crtbp_rhs(x, params.mu)


def crtbp_jacobian(s, params=EARTH_MOON):
    """6x6 partial derivative of :func:`crtbp_derivative` with respect to the state."""
    x = _as_array(s)
    _check_singularity(x, params.mu)
    return _crtbp_jac(x, params.mu)


def jacobi_constant(s, params=EARTH_MOON):
    """``C = x^2 + y^2 + 2(1-mu)/r1 + 2 mu/r2 - v^2``."""
    x = _as_array(s)
    mu = params.mu
    r1, r2 = _check_singularity(x, mu)
    v2 = x[3] ** 2 + x[4] ** 2 + x[5] ** 2
    return x[0] ** 2 + x[1] ** 2 + 2.0 * (1.0 - mu) / r1 + 2.0 * mu / r2 - v2


def collinear_point(which, params=EARTH_MOON):
    """x-coordinate of L1, L2 or L3 by root-finding the x-axis acceleration."""
    from scipy.optimize import brentq

    mu = params.mu

    def ax(x):
        return _crtbp_accel(x, 0.0, 0.0, 0.0, 0.0, mu)[0]

    eps = 1e-6
    brackets = {"L1": (-mu + eps, 1 - mu - eps), "L2": (1 - mu + eps, 2.0), "L3": (-2.0, -mu - eps)}
    return brentq(ax, *brackets[which], xtol=1e-15, rtol=4 * np.finfo(float).eps)


def propagate(s0, t_span, cfg=None, params=EARTH_MOON, with_stm=False):
    """Propagate a rotating state through the node times ``t_span``.

    Parameters
    ----------
    s0 : RotatingState or array_like
        Initial state; its epoch is taken as ``t_span[0]`` when ``s0`` is a raw array.
    t_span : sequence of float
        Output node times, starting at the initial epoch.
    cfg : IntegratorConfig, optional
    with_stm : bool
        Also integrate the variational equations; ``stm`` at each node maps
        deviations from ``t_span[0]``.

    Returns
    -------
    list of StmState
    """
    cfg = cfg or IntegratorConfig()
    times = np.atleast_1d(np.asarray(t_span, dtype=float))
    x0 = _as_array(s0)
    _check_singularity(x0, params.mu)
    mu = params.mu
    y0 = np.concatenate([x0, np.eye(6).ravel()]) if with_stm else x0.copy()

    if cfg.method == "rk4":
        ys = np.empty((times.size, y0.size))
        ys[0] = y0
        y = y0
        for i in range(1, times.size):
            dt = times[i] - times[i - 1]
            n = n_substeps(dt, cfg.fixed_step)
            if n:
                y = rk4_crtbp(y, mu, dt / n, n)
            ys[i] = y
    else:
        ys = integrate(lambda t, y: crtbp_rhs(y, mu), y0, times, cfg)
    if not np.all(np.isfinite(ys)):
        raise IntegrationError("non-finite state encountered (near-collision with a primary?)")

    out = []
    for t, y in zip(times, ys):
        stm = y[6:].reshape(6, 6).copy() if with_stm else None
        out.append(StmState(RotatingState(t, y[:3], y[3:6]), stm))
    return out


# --- frames -----------------------------------------------------------------


def rotation_matrices(t):
    """``L(t)`` and its time derivative for a unit-rate rotation about z."""
    c, s = math.cos(t), math.sin(t)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    # (3,3) entry of the derivative is zero: z does not rotate
    rot_dot = np.array([[-s, -c, 0.0], [c, -s, 0.0], [0.0, 0.0, 0.0]])
    return rot, rot_dot


def rotating_to_inertial_matrix(t):
    rot, rot_dot = rotation_matrices(t)
    out = np.zeros((6, 6))
    out[:3, :3] = rot
    out[3:, :3] = rot_dot
    out[3:, 3:] = rot
    return out


def rot_to_inertial(s):
    """Rotating -> barycentric inertial, evaluated at the state's epoch."""
    t = _epoch(s)
    x = _as_array(s)
    xi = rotating_to_inertial_matrix(t) @ x
    return InertialState(t, xi[:3], xi[3:])


def inertial_to_rot(s):
    t = _epoch(s)
    x = _as_array(s)
    rot, rot_dot = rotation_matrices(t)
    r = rot.T @ x[:3]
    v = rot.T @ (x[3:] - rot_dot @ r)
    return RotatingState(t, r, v)


_CENTERS = ("barycenter", "moon", "earth")


def primary_position(center, params=EARTH_MOON):
    if center == "barycenter":
        return np.zeros(3)
    if center == "moon":
        return np.array([1.0 - params.mu, 0.0, 0.0])
    if center == "earth":
        return np.array([-params.mu, 0.0, 0.0])
    raise ValueError(f"center must be one of {_CENTERS}, got {center!r}")


def shift_frame(s, center, direction="to", params=EARTH_MOON):
    """Translate a rotating state between the barycenter and a primary.

    ``direction="to"`` maps barycentric coordinates to ``center``-centered
    ones; ``"from"`` is the inverse. Velocities are unchanged because both
    primaries are at rest in the rotating frame.
    """
    if direction not in ("to", "from"):
        raise ValueError("direction must be 'to' or 'from'")
    x = _as_array(s).copy()
    offset = primary_position(center, params)
    x[:3] = x[:3] - offset if direction == "to" else x[:3] + offset
    return RotatingState(_epoch(s), x[:3], x[3:])


def kepler_to_cartesian(k):
    """Elements -> position (km) and velocity (km/s) in the central body's inertial frame."""
    inc, raan, argp, nu = np.radians([k.inc, k.raan, k.argp, k.true_anomaly])
    p = k.sma * (1.0 - k.ecc**2)
    r = p / (1.0 + k.ecc * math.cos(nu))
    r_pf = np.array([r * math.cos(nu), r * math.sin(nu), 0.0])
    v_pf = math.sqrt(k.central_gm / p) * np.array([-math.sin(nu), k.ecc + math.cos(nu), 0.0])
    rot = perifocal_to_inertial(raan, inc, argp)
    return rot @ r_pf, rot @ v_pf


def perifocal_to_inertial(raan, inc, argp):
    cO, sO = math.cos(raan), math.sin(raan)
    ci, si = math.cos(inc), math.sin(inc)
    cw, sw = math.cos(argp), math.sin(argp)
    return np.array(
        [
            [cO * cw - sO * sw * ci, -cO * sw - sO * cw * ci, sO * si],
            [sO * cw + cO * sw * ci, -sO * sw + cO * cw * ci, -cO * si],
            [sw * si, cw * si, ci],
        ]
    )


def cartesian_to_kepler(pos, vel, central_gm):
    """Inverse of :func:`kepler_to_cartesian` for non-degenerate elliptical orbits."""
    r = np.asarray(pos, dtype=float)
    v = np.asarray(vel, dtype=float)
    rn = np.linalg.norm(r)
    h = np.cross(r, v)
    hn = np.linalg.norm(h)
    e_vec = np.cross(v, h) / central_gm - r / rn
    ecc = np.linalg.norm(e_vec)
    energy = 0.5 * v @ v - central_gm / rn
    if energy >= 0:
        raise ValueError("orbit is not elliptical")
    sma = -central_gm / (2.0 * energy)
    inc = math.acos(np.clip(h[2] / hn, -1.0, 1.0))
    node = np.cross([0.0, 0.0, 1.0], h)
    nn = np.linalg.norm(node)
    raan = math.atan2(node[1], node[0]) % (2 * math.pi)
    argp = math.atan2(np.cross(node, e_vec) @ h / hn, node @ e_vec) % (2 * math.pi)
    nu = math.atan2(np.cross(e_vec, r) @ h / hn, e_vec @ r) % (2 * math.pi)
    if nn < 1e-12 or ecc < 1e-12:
        raise ValueError("elements are singular for equatorial or circular orbits")
    return KeplerianElements(sma, ecc, *np.degrees([inc, raan, argp, nu]), central_gm=central_gm)


def mci_to_barycentric(pos_km, vel_kms, epoch=0.0, params=EARTH_MOON):
    """Moon-centered inertial state (km, km/s) -> barycentric rotating state.

    Steps: non-dimensionalize, rotate inertial -> rotating at ``epoch``, then
    move the origin from the Moon to the barycenter.
    """
    x = np.concatenate(
        [_vec3(pos_km, "pos_km") / params.l_star, _vec3(vel_kms, "vel_kms") / params.velocity_unit_kms]
    )
    moon_rot = inertial_to_rot(InertialState(epoch, x[:3], x[3:]))
    return shift_frame(moon_rot, "moon", "from", params)


def barycentric_to_mci(s, params=EARTH_MOON):
    """Inverse of :func:`mci_to_barycentric`; returns (pos_km, vel_kms)."""
    moon_rot = shift_frame(s, "moon", "to", params)
    xi = rot_to_inertial(moon_rot)
    return xi.pos * params.l_star, xi.vel * params.velocity_unit_kms
