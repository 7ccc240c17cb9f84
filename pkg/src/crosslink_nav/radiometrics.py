"""Inter-satellite radiometric error budgets, observation models and synthesis.

Error-budget formulas take SI inputs and return meters or m/s. Observation
models (:func:`geometric_range`, :func:`range_rate`, partials) are unit
agnostic: feed them km or non-dimensional lengths and get the same units back.
"""

import math
from dataclasses import dataclass

import numpy as np

from .constants import SPEED_OF_LIGHT
from .validation import check_positive, check_vector

RANGE = "range"
RANGE_RATE = "range_rate"
KINDS = (RANGE, RANGE_RATE)


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class PnRangingConfig:
    f_rc: float = 1e6  # Hz
    B_L: float = 1.0  # Hz
    prc_over_n0: float = 25.0  # dB-Hz
    f_chip: float = 2e6  # Hz, square-wave clock -> twice f_rc
    delta_f_chip: float = 100.0  # Hz
    integration_T: float = 0.5  # s

    def __post_init__(self):
        for name in ("f_rc", "f_chip", "integration_T"):
            check_positive(getattr(self, name), name)
        check_positive(self.B_L, "B_L", strict=False)
        check_positive(self.delta_f_chip, "delta_f_chip", strict=False)


@dataclass(frozen=True)
class TimeDerivedConfig:
    symbol_rate_down: float = 4000.0  # symbols/s
    symbol_rate_up: float = 2700.0
    T_l: float = 0.5  # s
    es_over_n0: float = -1.0  # dB

    def __post_init__(self):
        for name in ("symbol_rate_down", "symbol_rate_up", "T_l"):
            check_positive(getattr(self, name), name)


@dataclass(frozen=True)
class DopplerConfig:
    f_c: float = 2200e6  # Hz, downlink carrier
    T: float = 1.0  # s
    rho_l_db: float = 30.76  # downlink carrier loop SNR; inf for an ideal loop
    pc_over_n0: float = 25.0  # dB-Hz
    G: float = 1.0
    B_L: float = 1.0  # Hz
    f_t: float = 2100e6  # Hz
    t_c: float = 0.5  # s
    sigma_phi: float = 0.01  # rad

    def __post_init__(self):
        for name in ("f_c", "T", "G", "f_t", "t_c"):
            check_positive(getattr(self, name), name)
        check_positive(self.B_L, "B_L", strict=False)
        check_positive(self.sigma_phi, "sigma_phi", strict=False)


def pn_range_sigma_oneway(cfg):
    """One-way PN ranging 1-sigma error (m)."""
    return SPEED_OF_LIGHT / (8.0 * cfg.f_rc) * math.sqrt(cfg.B_L / db_to_linear(cfg.prc_over_n0))


def pn_range_bias(cfg):
    """Range bias (m) caused by a chip-rate mismatch over the integration time."""
    return SPEED_OF_LIGHT * cfg.delta_f_chip * cfg.integration_T / (4.0 * cfg.f_chip)


def time_derived_sigma_oneway(cfg, leg):
    """One-way time-derived ranging 1-sigma error (m) for the ``"up"`` or ``"down"`` leg."""
    if leg == "down":
        rate = cfg.symbol_rate_down
    elif leg == "up":
        rate = cfg.symbol_rate_up
    else:
        raise ValueError(f"leg must be 'up' or 'down', got {leg!r}")
    t_sd = 1.0 / rate
    return 4.0 * SPEED_OF_LIGHT * t_sd**2 / (math.pi * cfg.T_l * db_to_linear(cfg.es_over_n0))


def doppler_sigma(cfg):
    """Two-way Doppler thermal-noise velocity error (m/s)."""
    inv_rho = 0.0 if math.isinf(cfg.rho_l_db) else 1.0 / db_to_linear(cfg.rho_l_db)
    loop = inv_rho + cfg.G**2 * cfg.B_L / db_to_linear(cfg.pc_over_n0)
    return SPEED_OF_LIGHT / (2.0 * math.sqrt(2.0) * math.pi * cfg.f_c * cfg.T) * math.sqrt(loop)


def phase_noise_to_range_rate(cfg):
    """Range-rate noise (m/s) equivalent to a carrier phase noise ``sigma_phi``."""
    return math.sqrt(2.0) * SPEED_OF_LIGHT / (2.0 * cfg.G * cfg.f_t * cfg.t_c) * cfg.sigma_phi / (2.0 * math.pi)


COMBINERS = ("rss", "quadratic_mean")


def combine_two_way(sigma_up, sigma_down, mode):
    if sigma_up < 0 or sigma_down < 0:
        raise ValueError("one-way sigmas must be non-negative")
    total = sigma_up**2 + sigma_down**2
    if mode == "rss":
        return math.sqrt(total)
    if mode == "quadratic_mean":
        return math.sqrt(total / 2.0)
    raise ValueError(f"mode must be one of {COMBINERS}, got {mode!r}")


@dataclass(frozen=True)
class LinkBudget:
    """Radio parameters and the two-way combiners used to derive measurement sigmas."""

    pn: PnRangingConfig = PnRangingConfig()
    time_derived: TimeDerivedConfig = TimeDerivedConfig()
    doppler: DopplerConfig = DopplerConfig()
    pn_combiner: str = "rss"
    time_derived_combiner: str = "quadratic_mean"
    range_rate_sigma_mps: float = 0.97e-3

    def pn_sigma(self):
        one_way = pn_range_sigma_oneway(self.pn)
        return combine_two_way(one_way, one_way, self.pn_combiner)

    def time_derived_sigma(self):
        up = time_derived_sigma_oneway(self.time_derived, "up")
        down = time_derived_sigma_oneway(self.time_derived, "down")
        return combine_two_way(up, down, self.time_derived_combiner)

    def sigma_for(self, measurement):
        """1-sigma two-way error in SI units for a scenario measurement type."""
        if measurement == "pn_range":
            return self.pn_sigma()
        if measurement == "time_derived_range":
            return self.time_derived_sigma()
        if measurement == "range_rate":
            return self.range_rate_sigma_mps
        raise ValueError(f"unknown measurement type {measurement!r}")

    def table(self):
        """Rows of (quantity, value, unit) for every error-budget formula."""
        td = self.time_derived
        return [
            ("pn_range_sigma_oneway", pn_range_sigma_oneway(self.pn), "m"),
            ("pn_range_sigma_twoway", self.pn_sigma(), "m"),
            ("pn_range_bias", pn_range_bias(self.pn), "m"),
            ("time_derived_sigma_up", time_derived_sigma_oneway(td, "up"), "m"),
            ("time_derived_sigma_down", time_derived_sigma_oneway(td, "down"), "m"),
            ("time_derived_sigma_twoway", self.time_derived_sigma(), "m"),
            ("doppler_sigma", doppler_sigma(self.doppler), "m/s"),
            ("phase_noise_range_rate_sigma", phase_noise_to_range_rate(self.doppler), "m/s"),
            ("range_rate_sigma_configured", self.range_rate_sigma_mps, "m/s"),
        ]


# --- observation models -------------------------------------------------------


def geometric_range(r1, r2):
    return float(np.linalg.norm(np.asarray(r1, dtype=float) - np.asarray(r2, dtype=float)))


def range_rate_core(x1, x2):
    """Line-of-sight projection of the relative velocity, bias and noise free."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    dr = x1[:3] - x2[:3]
    rho = np.linalg.norm(dr)
    if rho == 0.0:
        raise ValueError("range rate is undefined at zero separation")
    return float(dr @ (x1[3:6] - x2[3:6]) / rho)


def observe(x, kind):
    """Noise-free observable of a joint 12-state ``[r1 v1 r2 v2]``."""
    if kind == RANGE:
        return geometric_range(x[0:3], x[6:9])
    if kind == RANGE_RATE:
        return range_rate_core(x[0:6], x[6:12])
    raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


def observe_many(x1, x2, kind):
    """Vectorized noise-free observables for trajectory arrays of shape (n, 6)."""
    dr = x1[:, :3] - x2[:, :3]
    rho = np.linalg.norm(dr, axis=1)
    if kind == RANGE:
        return rho
    if kind == RANGE_RATE:
        return np.einsum("ij,ij->i", dr, x1[:, 3:6] - x2[:, 3:6]) / rho
    raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


def measurement_partials(x, kind, n_aug=0, dt_since_start=0.0):
    """Row of partials of the observable with respect to the joint state.

    The first 12 entries follow ``[r1 v1 r2 v2]``. With ``n_aug >= 1`` a
    constant-bias column (1) is appended; with ``n_aug == 2`` a clock-drift
    column holding ``dt_since_start`` follows.
    """
    if n_aug not in (0, 1, 2):
        raise ValueError("n_aug must be 0, 1 or 2")
    x = np.asarray(x, dtype=float)
    row = np.zeros(12 + n_aug)
    dr = x[0:3] - x[6:9]
    rho = np.linalg.norm(dr)
    if rho == 0.0:
        raise ValueError("partials are singular at zero separation")
    u = dr / rho
    if kind == RANGE:
        row[0:3] = u
        row[6:9] = -u
    elif kind == RANGE_RATE:
        dv = x[3:6] - x[9:12]
        rdot = u @ dv
        dpos = (dv - rdot * u) / rho
        row[0:3] = dpos
        row[3:6] = u
        row[6:9] = -dpos
        row[9:12] = -u
    else:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if n_aug >= 1:
        row[12] = 1.0
    if n_aug == 2:
        row[13] = dt_since_start
    return row


@dataclass(frozen=True)
class MeasurementSample:
    epoch: float
    kind: str
    value: float
    sigma: float
    bias_truth: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


def pseudo_range(x1, x2, sigma, bias=0.0, rng=None, epoch=0.0):
    """Range plus bias plus Gaussian noise; ``rng=None`` draws no noise."""
    noise = 0.0 if rng is None else rng.normal(0.0, sigma)
    value = geometric_range(np.asarray(x1)[:3], np.asarray(x2)[:3]) + bias + noise
    return MeasurementSample(epoch, RANGE, value, sigma, bias)


def range_rate(x1, x2, sigma, bias=0.0, rng=None, epoch=0.0):
    noise = 0.0 if rng is None else rng.normal(0.0, sigma)
    return MeasurementSample(epoch, RANGE_RATE, range_rate_core(x1, x2) + bias + noise, sigma, bias)


def synthesize(x1, x2, kind, sigma, bias, rng, epochs):
    """Batch of noisy observables along two trajectories (arrays of shape (n, 6))."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    truth = observe_many(x1, x2, kind)
    noise = rng.normal(0.0, sigma, size=truth.shape[0])
    return [
        MeasurementSample(float(t), kind, float(v), sigma, bias)
        for t, v in zip(epochs, truth + bias + noise)
    ]


# --- two-way time transfer ------------------------------------------------------


@dataclass(frozen=True)
class TimestampQuad:
    """Event times of a two-way exchange and the clock offsets read at each event.

    ``t1``: A transmits, ``t2``: B receives, ``t3``: B replies, ``t4``: A
    receives. The recorded stamp of event ``i`` is ``t_i + psi_i``.
    """

    t1: float
    t2: float
    t3: float
    t4: float
    psi1: float = 0.0
    psi2: float = 0.0
    psi3: float = 0.0
    psi4: float = 0.0

    def __post_init__(self):
        if not (self.t1 < self.t2 <= self.t3 < self.t4):
            raise ValueError("time stamps are not causal (need t1 < t2 <= t3 < t4)")

    def stamps(self):
        return (self.t1 + self.psi1, self.t2 + self.psi2, self.t3 + self.psi3, self.t4 + self.psi4)


def time_transfer_range(q):
    """Range (km) and B-minus-A clock offset (s) from four exchanged time stamps."""
    s1, s2, s3, s4 = q.stamps()
    round_trip = (s4 - s1) - (s3 - s2)
    if round_trip <= 0:
        raise ValueError("non-causal time stamps: negative round-trip time")
    offset = ((s2 - s1) - (s4 - s3)) / 2.0
    return SPEED_OF_LIGHT * round_trip / 2.0 * 1e-3, offset
