"""Scenario harness: truth generation, single filter runs and Monte Carlo campaigns.

Everything inside the filter is non-dimensional (CRTBP length and time
units); conversions to km, m and mm/s happen only when results are
summarized or written out.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig
from .dynamics import CrtbpParams, KeplerianElements, RotatingState, kepler_to_cartesian, mci_to_barycentric
from .ephemeris import AnalyticEphemeris, NbodyModel, SrpConfig, TabulatedEphemeris, rotating_to_eci
from .filtering import (
    ConsiderConfig,
    ProcessNoiseConfig,
    augment_bias,
    augment_clock_drift,
    initial_state,
)
from .flows import CrtbpFlow, NbodyFlow
from .navigation import run_filter
from .observability import STATE_LABELS, accumulate_gramian, observation_effectiveness
from .radiometrics import (
    RANGE,
    RANGE_RATE,
    DopplerConfig,
    LinkBudget,
    PnRangingConfig,
    TimeDerivedConfig,
    measurement_partials,
    synthesize,
)

DAY_S = 86400.0
SPLIT_DAY = 6.0
REQUIREMENT_POS_KM = 1.0
REQUIREMENT_VEL_KMS = 1e-5


def link_budget(cfg):
    """:class:`LinkBudget` from the ``link`` section of a scenario."""
    lk = cfg.link
    pn = PnRangingConfig(
        lk.pn.f_rc_hz, lk.pn.loop_bandwidth_hz, lk.pn.prc_over_n0_dbhz,
        lk.pn.f_chip_hz, lk.pn.delta_f_chip_hz, lk.pn.integration_time_s,
    )
    td = TimeDerivedConfig(
        lk.time_derived.symbol_rate_down_sps, lk.time_derived.symbol_rate_up_sps,
        lk.time_derived.correlator_time_s, lk.time_derived.es_over_n0_db,
    )
    d = lk.doppler
    dop = DopplerConfig(
        d.carrier_hz, d.integration_time_s, d.loop_snr_db, d.pc_over_n0_dbhz, d.turnaround_ratio,
        d.loop_bandwidth_hz, d.transmit_hz, d.count_time_s, d.phase_noise_rad,
    )
    return LinkBudget(pn, td, dop, lk.pn_combiner, lk.time_derived_combiner, lk.range_rate_sigma_mps)


@dataclass
class Scenario:
    """A scenario resolved into filter units, ready to simulate."""

    config: ScenarioConfig
    params: CrtbpParams
    flow: object
    x0: np.ndarray  # joint truth state at t=0, filter frame, non-dimensional
    times: np.ndarray  # node times including t=0, non-dimensional
    kind: str
    sigma: float  # measurement 1-sigma, filter units
    bias: float  # truth measurement bias, filter units
    truth: np.ndarray = None

    @property
    def frame(self):
        return self.flow.frame

    @property
    def meas_unit_km(self):
        """km (or km/s) per non-dimensional measurement unit."""
        return self.params.l_star if self.kind == RANGE else self.params.velocity_unit_kms

    @property
    def epochs_s(self):
        return self.params.nd_to_seconds(self.times)

    def ensure_truth(self):
        if self.truth is None:
            self.truth = self.flow.trajectory(self.x0, self.times)
        return self.truth


def _lpf_rotating(sc, params):
    if sc.lpf_initial == "elements":
        el = sc.lpf.elements
        if el is None:
            raise ValueError("lpf_initial='elements' needs spacecraft.lpf.elements")
        k = KeplerianElements(el.sma_km, el.ecc, el.inc_deg, el.raan_deg, el.argp_deg, el.true_anomaly_deg)
        r, v = kepler_to_cartesian(k)
        return mci_to_barycentric(r, v, 0.0, params).as_array()
    if sc.lpf.state is None:
        raise ValueError("spacecraft.lpf.state is missing")
    return np.asarray(sc.lpf.state, dtype=float)


def _ephemeris(dyn):
    if dyn.ephemeris.kind == "csv":
        if not dyn.ephemeris.path:
            raise ValueError("dynamics.ephemeris.path is required for kind='csv'")
        return TabulatedEphemeris.from_csv(dyn.ephemeris.path)
    return AnalyticEphemeris()


def build_scenario(cfg, dynamics=None, fixed_step_s=None):
    """Resolve a :class:`ScenarioConfig` into a :class:`Scenario`.

    ``dynamics`` and ``fixed_step_s`` override the corresponding config fields.
    """
    dyn = cfg.dynamics
    model = dynamics or dyn.model
    step_s = fixed_step_s or dyn.step_s
    params = CrtbpParams(dyn.mu, dyn.t_star_days, dyn.l_star_km)
    if cfg.spacecraft.lumio.state is None:
        raise ValueError("spacecraft.lumio.state is missing")
    rot = [np.asarray(cfg.spacecraft.lumio.state, dtype=float), _lpf_rotating(cfg.spacecraft, params)]

    if model == "crtbp":
        flow = CrtbpFlow(params, step_s)
        x0 = np.concatenate(rot)
    elif model == "nbody":
        eph = _ephemeris(dyn)
        models = []
        for sc in (cfg.spacecraft.lumio, cfg.spacecraft.lpf):
            srp = SrpConfig(sc.srp_area_m2, sc.reflectivity, sc.mass_kg)
            models.append(NbodyModel(eph=eph, srp=srp))
        flow = NbodyFlow(tuple(models), params, step_s)
        lu, vu = params.l_star, params.velocity_unit_kms
        parts = []
        for x in rot:
            s = rotating_to_eci(x, 0.0, eph, params)
            parts.append(np.concatenate([s.pos / lu, s.vel / vu]))
        x0 = np.concatenate(parts)
    else:
        raise ValueError(f"unknown dynamics model {model!r}")

    lk = cfg.link
    duration = dyn.duration_days * DAY_S
    if lk.cadence_s > duration:
        raise ValueError("measurement cadence exceeds the scenario duration")
    epochs = np.arange(0.0, duration + 1e-6, lk.cadence_s)
    times = params.seconds_to_nd(epochs)
    kind = RANGE_RATE if lk.measurement == "range_rate" else RANGE
    unit = params.l_star if kind == RANGE else params.velocity_unit_kms
    sigma = link_budget(cfg).sigma_for(lk.measurement) * 1e-3 / unit
    bias = lk.bias_truth_m * 1e-3 / unit
    return Scenario(cfg, params, flow, x0, times, kind, sigma, bias)


# --- single runs -----------------------------------------------------------------


def _prior(scn):
    fc = scn.config.filter
    p = (fc.initial_sigma_pos_m * 1e-3 / scn.params.l_star) ** 2
    v = (fc.initial_sigma_vel_mps * 1e-3 / scn.params.velocity_unit_kms) ** 2
    return np.diag(np.tile(np.r_[np.full(3, p), np.full(3, v)], 2))


def _initial_error(scn, rng):
    """Fixed-magnitude initial error along random directions (one per 3-vector)."""
    fc = scn.config.filter
    dirs = rng.normal(size=(4, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    p = fc.initial_error_pos_m * 1e-3 / scn.params.l_star
    v = fc.initial_error_vel_mps * 1e-3 / scn.params.velocity_unit_kms
    return np.concatenate([dirs[0] * p, dirs[1] * v, dirs[2] * p, dirs[3] * v])


def make_filter(scn, x0_hat, bias_mode=None):
    """Initial filter state and consider set-up for a bias-handling mode."""
    fc = scn.config.filter
    mode = bias_mode or fc.bias_mode
    unit = scn.meas_unit_km * 1e3  # m or m/s per filter unit
    prior_sigma = fc.bias_prior_sigma_m / unit
    consider = None
    if mode == "consider":
        consider = ConsiderConfig(b0=[fc.consider_b0_m / unit], B0=[[prior_sigma**2]])
        f0 = initial_state(x0_hat, _prior(scn), 0.0, "consider", consider)
    else:
        f0 = initial_state(x0_hat, _prior(scn), 0.0, mode)
        if mode == "estimate":
            f0 = augment_bias(f0, prior_sigma)
            if fc.estimate_clock_drift:
                drift = fc.drift_prior_sigma_mps / unit * scn.params.time_unit_s
                f0 = augment_clock_drift(f0, drift)
    return f0, consider


def process_noise(scn):
    fc = scn.config.filter
    return ProcessNoiseConfig(tuple(fc.process_noise_sigma), fc.q_form)


def run_seed(seed, index=0):
    """Generator for run ``index`` of a campaign seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(index + 1)[index])


@dataclass
class RunResult:
    run: object  # FilterRun
    measurements: list
    initial_error: np.ndarray
    truth: np.ndarray  # truth at measurement epochs
    bias_mode: str


def simulate_run(scn, rng, bias_mode=None, health_checks=False):
    """Draw one noise realization and initial error, then run the filter."""
    truth = scn.ensure_truth()
    err0 = _initial_error(scn, rng)
    meas = synthesize(truth[1:, :6], truth[1:, 6:], scn.kind, scn.sigma, scn.bias, rng, scn.times[1:])
    f0, consider = make_filter(scn, scn.x0 + err0, bias_mode)
    limit = scn.config.filter.divergence_factor * scn.config.filter.initial_sigma_pos_m * 1e-3 / scn.params.l_star
    run = run_filter(
        f0, meas, scn.flow, process_noise(scn), consider,
        truth=truth[1:], health_checks=health_checks, divergence_limit=limit,
    )
    return RunResult(run, meas, err0, truth[1:], bias_mode or scn.config.filter.bias_mode)


def truth_stms(scn):
    """STMs from t=0 to every node along the truth trajectory."""
    x = scn.x0.copy()
    phi = np.eye(12)
    out = [phi]
    for k in range(1, scn.times.size):
        x, step = scn.flow(x, scn.times[k - 1], scn.times[k])
        phi = step @ phi
        out.append(phi)
    return out


def observability(scn, kind=None, rule="dominant"):
    """Gramian report over the measurement epochs of the truth trajectory."""
    kind = kind or scn.kind
    truth = scn.ensure_truth()
    stms = truth_stms(scn)[1:]
    rows = [measurement_partials(x, kind) for x in truth[1:]]
    return accumulate_gramian(stms, rows, STATE_LABELS, rule)


# --- statistics --------------------------------------------------------------------


def _norms(a, idx):
    return np.sqrt(np.sum(a[:, idx : idx + 3] ** 2, axis=1))


def squared_norms(errors, sigma):
    """Per-epoch squared error and variance norms, columns [pos1 vel1 pos2 vel2]."""
    e2 = np.column_stack([_norms(errors, i) ** 2 for i in (0, 3, 6, 9)])
    s2 = np.column_stack([_norms(sigma, i) ** 2 for i in (0, 3, 6, 9)])
    return e2, s2


def rmse(errors):
    """Root-mean-square across runs of an error array shaped ``(runs, ...)``."""
    e = np.asarray(errors, dtype=float)
    return np.sqrt(np.mean(e**2, axis=0))


def _split_rms(ms, epochs_days):
    """Time-RMS of a mean-square series over the full span and after the split day."""
    post = epochs_days > SPLIT_DAY
    full = float(np.sqrt(np.mean(ms)))
    after = float(np.sqrt(np.mean(ms[post]))) if post.any() else None
    return full, after


def rms_summary(err_ms, sig_ms, epochs_days, params):
    """RMS summary from mean-square series (columns pos1 vel1 pos2 vel2).

    Each entry holds full-span and post-day-6 values, averaged over the two
    spacecraft (arithmetic mean of per-spacecraft RMS values) and per spacecraft.
    """
    scale = {"pos": params.l_star * 1e3, "vel": params.velocity_unit_kms * 1e6}
    out = {}
    for name, ms in (("error", err_ms), ("sigma", sig_ms)):
        for q, cols, unit in (("pos", (0, 2), "m"), ("vel", (1, 3), "mms")):
            per = [_split_rms(ms[:, c], epochs_days) for c in cols]
            per = [(a * scale[q], None if b is None else b * scale[q]) for a, b in per]
            out[f"rms_{name}_{q}_{unit}"] = {
                "full": 0.5 * (per[0][0] + per[1][0]),
                # None when the arc ends before the split day
                "post_day6": None if per[0][1] is None else 0.5 * (per[0][1] + per[1][1]),
                "lumio": {"full": per[0][0], "post_day6": per[0][1]},
                "lpf": {"full": per[1][0], "post_day6": per[1][1]},
            }
    return out


def convergence_epoch(pos_rmse, epochs, threshold):
    """First epoch after which ``pos_rmse`` stays below ``threshold`` (None if never)."""
    above = np.nonzero(np.asarray(pos_rmse) >= threshold)[0]
    if above.size == 0:
        return float(epochs[0])
    if above[-1] + 1 >= len(epochs):
        return None
    return float(epochs[above[-1] + 1])


@dataclass
class RunStats:
    """Per-run scalars retained by a Monte Carlo campaign (SI-ish units)."""

    index: int
    diverged: bool
    post6_pos_rmse_m: tuple
    post6_vel_rmse_mms: tuple
    max3sigma_pos_km: tuple  # after day 6
    max3sigma_vel_kms: tuple
    final_bias_m: float = float("nan")


def run_statistics(scn, res, index=0):
    run = res.run
    days = scn.params.nd_to_seconds(run.epochs) / DAY_S
    post = days > SPLIT_DAY
    lu, vu = scn.params.l_star, scn.params.velocity_unit_kms
    e2, s2 = squared_norms(run.errors, run.sigma[:, :12])
    if run.diverged or not post.any():
        nan2 = (float("nan"), float("nan"))
        return RunStats(index, run.diverged, nan2, nan2, nan2, nan2)
    pos = tuple(float(np.sqrt(np.mean(e2[post, c])) * lu * 1e3) for c in (0, 2))
    vel = tuple(float(np.sqrt(np.mean(e2[post, c])) * vu * 1e6) for c in (1, 3))
    s3p = tuple(float(3 * np.sqrt(np.max(s2[post, c])) * lu) for c in (0, 2))
    s3v = tuple(float(3 * np.sqrt(np.max(s2[post, c])) * vu) for c in (1, 3))
    bias = float("nan")
    if run.final_state.n_aug >= 1:
        bias = float(run.final_state.x[12] * scn.meas_unit_km * 1e3)
    return RunStats(index, False, pos, vel, s3p, s3v, bias)


@dataclass
class MonteCarloResult:
    """Aggregated campaign statistics.

    Per-epoch arrays have columns ``[pos_lumio, vel_lumio, pos_lpf, vel_lpf]``
    in km and km/s.
    """

    epochs_s: np.ndarray
    rmse: np.ndarray
    rms_sigma: np.ndarray
    runs: list
    n_included: int
    n_excluded: int
    convergence_epoch_s: float
    summary: dict = field(default_factory=dict)

    @property
    def epochs_days(self):
        return self.epochs_s / DAY_S


def _mc_worker(args):
    cfg, dynamics, fixed_step, seed, indices, bias_mode = args
    scn = build_scenario(cfg, dynamics, fixed_step)
    out = []
    for i in indices:
        res = simulate_run(scn, run_seed(seed, i), bias_mode)
        stats = run_statistics(scn, res, i)
        e2 = s2 = None
        if not res.run.diverged:
            e2, s2 = squared_norms(res.run.errors, res.run.sigma[:, :12])
        out.append((stats, e2, s2))
    return out


def run_monte_carlo(cfg, runs=None, seed=None, workers=None, bias_mode=None, dynamics=None, fixed_step_s=None):
    """Run a campaign of independent filter runs and aggregate RMSE statistics.

    Each run draws from its own ``SeedSequence`` child, so results do not
    depend on ``workers``. Diverged runs are excluded and counted.
    """
    mc = cfg.montecarlo
    runs = runs or mc.runs
    seed = mc.seed if seed is None else seed
    workers = workers or mc.workers
    if runs < 1:
        raise ValueError("runs must be >= 1")
    chunks = [list(range(runs))[w::workers] for w in range(workers)]
    jobs = [(cfg, dynamics, fixed_step_s, seed, c, bias_mode) for c in chunks if c]
    if len(jobs) == 1:
        parts = [_mc_worker(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            parts = list(pool.map(_mc_worker, jobs))
    results = sorted((r for p in parts for r in p), key=lambda r: r[0].index)

    scn = build_scenario(cfg, dynamics, fixed_step_s)
    epochs_s = scn.epochs_s[1:]
    sum_e2 = np.zeros((epochs_s.size, 4))
    sum_s2 = np.zeros((epochs_s.size, 4))
    n_ok = 0
    for stats, e2, s2 in results:
        if stats.diverged:
            continue
        sum_e2 += e2
        sum_s2 += s2
        n_ok += 1
    units = np.array([scn.params.l_star, scn.params.velocity_unit_kms] * 2)
    if n_ok:
        err_ms, sig_ms = sum_e2 / n_ok, sum_s2 / n_ok
    else:
        err_ms = sig_ms = np.full_like(sum_e2, np.nan)
    rmse_km = np.sqrt(err_ms) * units
    sig_km = np.sqrt(sig_ms) * units
    conv = convergence_epoch(rmse_km[:, 0], epochs_s, REQUIREMENT_POS_KM) if n_ok else None

    res = MonteCarloResult(epochs_s, rmse_km, sig_km, [r[0] for r in results], n_ok, runs - n_ok, conv)
    res.summary = {
        "scenario": cfg.name,
        "dynamics": dynamics or cfg.dynamics.model,
        "measurement": cfg.link.measurement,
        "bias_mode": bias_mode or cfg.filter.bias_mode,
        "runs": runs,
        "seed": seed,
        "included_runs": n_ok,
        "excluded_runs": runs - n_ok,
        "convergence_epoch_days": None if conv is None else conv / DAY_S,
        "rms_summary": rms_summary(err_ms, sig_ms, epochs_s / DAY_S, scn.params) if n_ok else None,
    }
    return res


# --- single simulation ------------------------------------------------------------


@dataclass
class SimulationResult:
    scenario: Scenario
    result: RunResult
    report: object  # ObservabilityReport
    effectiveness: np.ndarray
    summary: dict


def simulate(cfg, seed=None, bias_mode=None, dynamics=None, fixed_step_s=None, health_checks=False):
    """One filter run with observability and effectiveness post-processing.

    Uses the same random stream as run 0 of a campaign with the same seed.
    """
    seed = cfg.montecarlo.seed if seed is None else seed
    scn = build_scenario(cfg, dynamics, fixed_step_s)
    res = simulate_run(scn, run_seed(seed, 0), bias_mode, health_checks)
    report = observability(scn)
    run = res.run
    eff = observation_effectiveness(run.pos_trace_pre, run.pos_trace_post)
    days = scn.params.nd_to_seconds(run.epochs) / DAY_S
    ok = np.all(np.isfinite(run.errors), axis=1)
    e2, s2 = squared_norms(run.errors[ok], run.sigma[ok, :12])
    stats = run_statistics(scn, res)
    summary = {
        "scenario": cfg.name,
        "dynamics": dynamics or cfg.dynamics.model,
        "frame": scn.frame,
        "measurement": cfg.link.measurement,
        "measurement_sigma": scn.sigma * scn.meas_unit_km * 1e3,
        "bias_mode": res.bias_mode,
        "seed": seed,
        "diverged": bool(run.diverged),
        "n_measurements": len(res.measurements),
        "rms_summary": rms_summary(e2, s2, days[ok], scn.params),
        "final_bias_estimate": None if np.isnan(stats.final_bias_m) else stats.final_bias_m,
        "observability": report.to_dict(),
    }
    return SimulationResult(scn, res, report, eff, summary)
