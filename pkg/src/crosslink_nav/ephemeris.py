"""Point-mass Earth/Moon/Sun dynamics with spherical solar radiation pressure.

Body positions come from an :class:`EphemerisProvider`: anything with
``state(body, epoch_s) -> (pos_km, vel_kms)`` in an Earth-centered inertial
frame, ``epoch_s`` counted from scenario start. Two providers ship here:

* :class:`AnalyticEphemeris` -- Keplerian lunar orbit plus a circular
  heliocentric Earth orbit, tilted by the obliquity.
* :class:`TabulatedEphemeris` -- cubic-spline interpolation of a CSV table
  with columns ``epoch_s, body, x_km, y_km, z_km``.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba as nb
import numpy as np
from scipy.interpolate import CubicSpline

from . import constants as const
from .dynamics import EARTH_MOON, RotatingState, barycentric_to_mci, mci_to_barycentric
from .exceptions import IntegrationError, SingularityError
from .integrators import IntegratorConfig, integrate, n_substeps
from .validation import check_vector

BODIES = ("earth", "moon", "sun")


def _rot_x(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rot_z(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _solve_kepler(mean_anomaly, ecc):
    ea = mean_anomaly + ecc * np.sin(mean_anomaly)
    for _ in range(30):
        f = ea - ecc * np.sin(ea) - mean_anomaly
        step = f / (1.0 - ecc * np.cos(ea))
        ea = ea - step
        if np.all(np.abs(step) < 1e-15):
            break
    return ea


@dataclass(frozen=True)
class AnalyticEphemeris:
    """Low-fidelity analytic Moon and Sun.

    Lunar mean elements are referred to the ecliptic; the default phase
    angles roughly match a mid-April 2024 start but are not meant to agree
    with a DE-series ephemeris.
    """

    moon_sma_km: float = 384399.0
    moon_ecc: float = 0.0549
    moon_inc_deg: float = 5.145
    moon_raan_deg: float = 0.0
    moon_argp_deg: float = 0.0
    moon_mean_anomaly_deg: float = 170.0
    sun_longitude_deg: float = 28.6
    obliquity_deg: float = 23.439
    earth_moon_gm: float = const.GM_EARTH + const.GM_MOON
    sun_gm: float = const.GM_SUN + const.GM_EARTH + const.GM_MOON
    au_km: float = const.AU_KM

    def _moon(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        n = math.sqrt(self.earth_moon_gm / self.moon_sma_km**3)
        m = math.radians(self.moon_mean_anomaly_deg) + n * t
        e = self.moon_ecc
        ea = _solve_kepler(m, e)
        a = self.moon_sma_km
        b = a * math.sqrt(1.0 - e * e)
        cos_e, sin_e = np.cos(ea), np.sin(ea)
        r = a * (1.0 - e * cos_e)
        pos_pf = np.stack([a * (cos_e - e), b * sin_e, np.zeros_like(t)], axis=-1)
        edot = n * a / r
        vel_pf = np.stack([-a * sin_e * edot, b * cos_e * edot, np.zeros_like(t)], axis=-1)
        rot = (
            _rot_x(math.radians(self.obliquity_deg))
            @ _rot_z(math.radians(self.moon_raan_deg))
            @ _rot_x(math.radians(self.moon_inc_deg))
            @ _rot_z(math.radians(self.moon_argp_deg))
        )
        return pos_pf @ rot.T, vel_pf @ rot.T

    def _sun(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        n = math.sqrt(self.sun_gm / self.au_km**3)
        lon = math.radians(self.sun_longitude_deg) + n * t
        pos = self.au_km * np.stack([np.cos(lon), np.sin(lon), np.zeros_like(t)], axis=-1)
        vel = self.au_km * n * np.stack([-np.sin(lon), np.cos(lon), np.zeros_like(t)], axis=-1)
        rot = _rot_x(math.radians(self.obliquity_deg))
        return pos @ rot.T, vel @ rot.T

    def states(self, body, epochs_s):
        """Vectorized (pos, vel) arrays of shape (n, 3)."""
        if body == "earth":
            t = np.atleast_1d(np.asarray(epochs_s, dtype=float))
            return np.zeros((t.size, 3)), np.zeros((t.size, 3))
        if body == "moon":
            return self._moon(epochs_s)
        if body == "sun":
            return self._sun(epochs_s)
        raise ValueError(f"unknown body {body!r}")

    def state(self, body, epoch_s):
        pos, vel = self.states(body, [epoch_s])
        return pos[0], vel[0]

    def position(self, body, epoch_s):
        return self.state(body, epoch_s)[0]

    def positions(self, body, epochs_s):
        return self.states(body, epochs_s)[0]


@dataclass(frozen=True)
class TabulatedEphemeris:
    """Ephemeris interpolated from externally generated state tables."""

    splines: dict = field(repr=False)

    @classmethod
    def from_records(cls, records):
        by_body = {}
        for epoch, body, x, y, z in records:
            by_body.setdefault(body, []).append((float(epoch), float(x), float(y), float(z)))
        splines = {}
        for body, rows in by_body.items():
            if body not in BODIES:
                raise ValueError(f"unknown body {body!r} in ephemeris table")
            rows.sort()
            arr = np.array(rows)
            if arr.shape[0] < 4:
                raise ValueError(f"need at least 4 samples for body {body!r}")
            if np.any(np.diff(arr[:, 0]) <= 0):
                raise ValueError(f"duplicate epochs for body {body!r}")
            splines[body] = CubicSpline(arr[:, 0], arr[:, 1:], axis=0)
        return cls(splines)

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            expected = ["epoch_s", "body", "x_km", "y_km", "z_km"]
            if reader.fieldnames != expected:
                raise ValueError(f"{path}: expected header {expected}, got {reader.fieldnames}")
            records = [(r["epoch_s"], r["body"].strip().lower(), r["x_km"], r["y_km"], r["z_km"]) for r in reader]
        return cls.from_records(records)

    @classmethod
    def sample(cls, provider, epochs_s, bodies=("moon", "sun")):
        """Tabulate another provider (handy for writing CSV files)."""
        records = []
        for body in bodies:
            for t, p in zip(epochs_s, provider.positions(body, epochs_s)):
                records.append((t, body, *p))
        return cls.from_records(records)

    def states(self, body, epochs_s):
        t = np.atleast_1d(np.asarray(epochs_s, dtype=float))
        if body == "earth" and body not in self.splines:
            return np.zeros((t.size, 3)), np.zeros((t.size, 3))
        spline = self.splines[body]
        return spline(t), spline(t, 1)

    def state(self, body, epoch_s):
        pos, vel = self.states(body, [epoch_s])
        return pos[0], vel[0]

    def position(self, body, epoch_s):
        return self.state(body, epoch_s)[0]

    def positions(self, body, epochs_s):
        return self.states(body, epochs_s)[0]


def write_ephemeris_csv(path, provider, epochs_s, bodies=("moon", "sun")):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch_s", "body", "x_km", "y_km", "z_km"])
        for body in bodies:
            for t, p in zip(epochs_s, provider.positions(body, epochs_s)):
                w.writerow([repr(float(t)), body, *(repr(float(c)) for c in p)])


@dataclass(frozen=True)
class SrpConfig:
    area: float  # m^2
    reflectivity: float
    mass: float  # kg
    solar_flux_1au: float = const.SOLAR_FLUX_1AU
    au: float = const.AU_KM

    def __post_init__(self):
        if self.area < 0 or self.mass <= 0:
            raise ValueError("SRP area must be >= 0 and mass > 0")
        if not 1.0 <= self.reflectivity <= 2.0:
            raise ValueError("reflectivity must lie in [1, 2]")

    @property
    def coefficient(self):
        """``k`` in ``a = k * d / |d|^3`` (km^3/s^2), ``d`` = Sun -> spacecraft in km."""
        pressure = self.solar_flux_1au / const.SPEED_OF_LIGHT  # N/m^2
        return self.reflectivity * pressure * self.area / self.mass * 1e-3 * self.au**2


@dataclass(frozen=True)
class NbodyState:
    epoch: float  # s
    pos: np.ndarray  # km
    vel: np.ndarray  # km/s

    def __post_init__(self):
        object.__setattr__(self, "pos", check_vector(self.pos, 3, "pos"))
        object.__setattr__(self, "vel", check_vector(self.vel, 3, "vel"))

    def as_array(self):
        return np.concatenate([self.pos, self.vel])


DEFAULT_GM = {"earth": const.GM_EARTH, "moon": const.GM_MOON, "sun": const.GM_SUN}


def third_body_accel(r, r_body, gm):
    """Differential (tidal) acceleration of a third body on an Earth-centered state."""
    d = r_body - r
    return gm * (d / np.linalg.norm(d) ** 3 - r_body / np.linalg.norm(r_body) ** 3)


def point_mass_accel(s, eph, gm=None):
    """Earth central term plus Moon and Sun third-body terms (km/s^2)."""
    gm = DEFAULT_GM if gm is None else gm
    r = s.pos
    rn = np.linalg.norm(r)
    acc = np.zeros(3)
    if gm.get("earth", 0.0):
        if rn < 1e-6:
            raise SingularityError("spacecraft at the Earth's center")
        acc -= gm["earth"] * r / rn**3
    for body in ("moon", "sun"):
        g = gm.get(body, 0.0)
        if not g:
            continue
        rb = eph.position(body, s.epoch)
        if np.linalg.norm(rb - r) < 1e-6:
            raise SingularityError(f"spacecraft at the center of the {body}")
        acc += third_body_accel(r, rb, g)
    return acc


def srp_accel(s, eph, cfg):
    """Cannonball SRP (km/s^2), directed from the Sun to the spacecraft, no shadow."""
    d = s.pos - eph.position("sun", s.epoch)
    dn = np.linalg.norm(d)
    if dn == 0.0:
        raise SingularityError("spacecraft at the Sun's position")
    return cfg.coefficient * d / dn**3


@dataclass(frozen=True)
class NbodyModel:
    eph: object = field(default_factory=AnalyticEphemeris)
    gm: dict = field(default_factory=lambda: dict(DEFAULT_GM))
    srp: SrpConfig = None

    def accel(self, t, r):
        s = NbodyState(t, r, np.zeros(3))
        acc = point_mass_accel(s, self.eph, self.gm)
        if self.srp is not None and self.srp.area > 0:
            acc = acc + srp_accel(s, self.eph, self.srp)
        return acc

    def rhs(self, t, y):
        return np.concatenate([y[3:6], self.accel(t, y[:3])])

    def kernel_args(self, length_unit=1.0, time_unit=1.0):
        """Gravitational and SRP constants scaled to the given units."""
        scale = time_unit**2 / length_unit**3
        k_srp = 0.0 if self.srp is None else self.srp.coefficient * scale
        return (
            self.gm.get("earth", 0.0) * scale,
            self.gm.get("moon", 0.0) * scale,
            self.gm.get("sun", 0.0) * scale,
            k_srp,
        )

    def stage_positions(self, t0, h, n, length_unit=1.0):
        """Moon/Sun positions at every RK4 stage time of ``n`` steps of ``h`` seconds."""
        times = t0 + 0.5 * h * np.arange(2 * n + 1)
        moon = self.eph.positions("moon", times) / length_unit
        sun = self.eph.positions("sun", times) / length_unit
        return moon, sun


@nb.njit(cache=True)
def _nbody_rhs(y, gm_e, gm_m, gm_s, k_srp, r_moon, r_sun):
    n = y.shape[0]
    out = np.empty(n)
    r = y[:3]
    out[:3] = y[3:6]
    acc = np.zeros(3)
    grad = np.zeros((3, 3))
    eye = np.eye(3)
    if gm_e != 0.0:
        rn = math.sqrt(r @ r)
        acc -= gm_e * r / rn**3
        grad += -gm_e * (eye / rn**3 - 3.0 * np.outer(r, r) / rn**5)
    if gm_m != 0.0:
        d = r_moon - r
        dn = math.sqrt(d @ d)
        bn = math.sqrt(r_moon @ r_moon)
        acc += gm_m * (d / dn**3 - r_moon / bn**3)
        grad += -gm_m * (eye / dn**3 - 3.0 * np.outer(d, d) / dn**5)
    if gm_s != 0.0:
        d = r_sun - r
        dn = math.sqrt(d @ d)
        bn = math.sqrt(r_sun @ r_sun)
        acc += gm_s * (d / dn**3 - r_sun / bn**3)
        grad += -gm_s * (eye / dn**3 - 3.0 * np.outer(d, d) / dn**5)
    if k_srp != 0.0:
        d = r - r_sun
        dn = math.sqrt(d @ d)
        acc += k_srp * d / dn**3
        grad += k_srp * (eye / dn**3 - 3.0 * np.outer(d, d) / dn**5)
    out[3:6] = acc
    if n == 42:
        a = np.zeros((6, 6))
        a[0, 3] = 1.0
        a[1, 4] = 1.0
        a[2, 5] = 1.0
        a[3:, :3] = grad
        out[6:] = (a @ y[6:].reshape((6, 6))).ravel()
    return out


@nb.njit(cache=True)
def rk4_nbody(y, h, n, gm_e, gm_m, gm_s, k_srp, moon, sun):
    """``n`` RK4 steps; ``moon``/``sun`` hold body positions at the 2n+1 half-step nodes."""
    for j in range(n):
        i = 2 * j
        k1 = _nbody_rhs(y, gm_e, gm_m, gm_s, k_srp, moon[i], sun[i])
        k2 = _nbody_rhs(y + 0.5 * h * k1, gm_e, gm_m, gm_s, k_srp, moon[i + 1], sun[i + 1])
        k3 = _nbody_rhs(y + 0.5 * h * k2, gm_e, gm_m, gm_s, k_srp, moon[i + 1], sun[i + 1])
        k4 = _nbody_rhs(y + h * k3, gm_e, gm_m, gm_s, k_srp, moon[i + 2], sun[i + 2])
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def _variational_rhs(model):
    def fun(t, y):
        moon = model.eph.position("moon", t)
        sun = model.eph.position("sun", t)
        return _nbody_rhs(y, *model.kernel_args(), moon, sun)

    return fun


def propagate_nbody(s0, times_s, cfg=None, model=None, with_stm=False):
    """Propagate an Earth-centered inertial state through ``times_s`` (seconds).

    Returns a list of ``(NbodyState, stm)`` pairs; ``stm`` is ``None`` unless
    ``with_stm`` is set.
    """
    cfg = cfg or IntegratorConfig()
    model = model or NbodyModel()
    times = np.atleast_1d(np.asarray(times_s, dtype=float))
    x0 = s0.as_array() if isinstance(s0, NbodyState) else check_vector(s0, 6, "state")
    y0 = np.concatenate([x0, np.eye(6).ravel()]) if with_stm else x0
    args = model.kernel_args()

    if cfg.method == "rk4":
        ys = np.empty((times.size, y0.size))
        ys[0] = y0
        y = y0
        for i in range(1, times.size):
            dt = times[i] - times[i - 1]
            n = n_substeps(dt, cfg.fixed_step)
            if n:
                h = dt / n
                moon, sun = model.stage_positions(times[i - 1], h, n)
                y = rk4_nbody(y, h, n, *args, moon, sun)
            ys[i] = y
    else:
        ys = integrate(_variational_rhs(model), y0, times, cfg)
    if not np.all(np.isfinite(ys)):
        raise IntegrationError("non-finite N-body state")
    return [
        (NbodyState(t, y[:3], y[3:6]), y[6:].reshape(6, 6).copy() if with_stm else None)
        for t, y in zip(times, ys)
    ]


def _instantaneous_frame(eph, epoch_s):
    """Rotation rotating->ECI built from the Earth-Moon geometry, plus its angular rate."""
    rm, vm = eph.state("moon", epoch_s)
    h = np.cross(rm, vm)
    xh = rm / np.linalg.norm(rm)
    zh = h / np.linalg.norm(h)
    yh = np.cross(zh, xh)
    omega = np.linalg.norm(h) / (rm @ rm)
    return np.column_stack([xh, yh, zh]), omega, rm, vm


def rotating_to_eci(s, epoch_s, eph, params=EARTH_MOON):
    """Map a barycentric rotating state onto the ephemeris geometry at ``epoch_s``.

    The state is taken relative to the Moon (dimensionalized with the CRTBP
    units), re-oriented along the instantaneous Earth-Moon line and orbital
    pole, and added to the Moon's ECI state.
    """
    x = s.as_array() if isinstance(s, RotatingState) else check_vector(s, 6, "state")
    rel = RotatingState(0.0, x[:3], x[3:])
    r_rel, v_rel_inertial = barycentric_to_mci(rel, params)
    rot, omega, rm, vm = _instantaneous_frame(eph, epoch_s)
    # barycentric_to_mci used the unit CRTBP rate; swap in the true one
    v_rot = v_rel_inertial - np.cross([0.0, 0.0, 1.0 / params.time_unit_s], r_rel)
    v_rel = v_rot + np.cross([0.0, 0.0, omega], r_rel)
    return NbodyState(epoch_s, rm + rot @ r_rel, vm + rot @ v_rel)


def eci_to_rotating(s, eph, params=EARTH_MOON):
    """Inverse of :func:`rotating_to_eci` at the state's epoch."""
    rot, omega, rm, vm = _instantaneous_frame(eph, s.epoch)
    r_rel = rot.T @ (s.pos - rm)
    v_rot = rot.T @ (s.vel - vm) - np.cross([0.0, 0.0, omega], r_rel)
    v_rel_inertial = v_rot + np.cross([0.0, 0.0, 1.0 / params.time_unit_s], r_rel)
    out = mci_to_barycentric(r_rel, v_rel_inertial, 0.0, params)
    return RotatingState(params.seconds_to_nd(s.epoch), out.pos, out.vel)
