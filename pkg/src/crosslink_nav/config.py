"""Scenario configuration schema and loader.

A scenario is a JSON document with the sections ``dynamics``,
``spacecraft``, ``link``, ``filter`` and ``montecarlo``. Every field has a
default taken from the reference mission set-up, so ``{}`` is a valid (if
terse) scenario. Unknown keys are rejected.
"""

import json
import re
from importlib import resources
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import constants as const
from .exceptions import ConfigError

LUMIO_STATE = (1.1473302, 0.0, -0.15142308, 0.0, -0.21994554, 0.0)
LPF_STATE = (0.98512134, 0.00147649, 0.00492546, -0.87329730, -1.61190048, 0.0)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class EphemerisSection(_Section):
    kind: Literal["analytic", "csv"] = "analytic"
    path: Optional[str] = None


class DynamicsSection(_Section):
    model: Literal["crtbp", "nbody"] = "crtbp"
    duration_days: float = Field(14.0, gt=0)
    step_s: float = Field(10.0, gt=0, description="fixed RK4 step for truth and filter")
    mu: float = Field(const.MU_EARTH_MOON, gt=0, lt=0.5)
    t_star_days: float = Field(const.T_STAR_DAYS, gt=0)
    l_star_km: float = Field(const.L_STAR_KM, gt=0)
    epoch_utc: str = "2024-04-18T21:00:00Z"
    ephemeris: EphemerisSection = EphemerisSection()


class ElementsSection(_Section):
    sma_km: float = Field(5737.4, gt=0)
    ecc: float = Field(0.61, ge=0, lt=1)
    inc_deg: float = 57.83
    raan_deg: float = 61.55
    argp_deg: float = 90.0
    true_anomaly_deg: float = 0.0


class SpacecraftSection(_Section):
    state: Optional[tuple[float, float, float, float, float, float]] = None
    elements: Optional[ElementsSection] = None
    srp_area_m2: float = Field(ge=0)
    reflectivity: float = Field(ge=1, le=2)
    mass_kg: float = Field(gt=0)


class SpacecraftPair(_Section):
    lumio: SpacecraftSection = SpacecraftSection(
        state=LUMIO_STATE, srp_area_m2=0.41, reflectivity=1.08, mass_kg=22.0
    )
    lpf: SpacecraftSection = SpacecraftSection(
        state=LPF_STATE, elements=ElementsSection(), srp_area_m2=3.0, reflectivity=1.8, mass_kg=280.0
    )
    lpf_initial: Literal["state", "elements"] = "state"


class PnSection(_Section):
    f_rc_hz: float = Field(1e6, gt=0)
    loop_bandwidth_hz: float = Field(1.0, ge=0)
    prc_over_n0_dbhz: float = 25.0
    f_chip_hz: float = Field(2e6, gt=0)
    delta_f_chip_hz: float = Field(100.0, ge=0)
    integration_time_s: float = Field(0.5, gt=0)


class TimeDerivedSection(_Section):
    symbol_rate_down_sps: float = Field(4000.0, gt=0)
    symbol_rate_up_sps: float = Field(2700.0, gt=0)
    correlator_time_s: float = Field(0.5, gt=0)
    es_over_n0_db: float = -1.0


class DopplerSection(_Section):
    carrier_hz: float = Field(2200e6, gt=0)
    integration_time_s: float = Field(1.0, gt=0)
    loop_snr_db: float = 30.76
    pc_over_n0_dbhz: float = 25.0
    turnaround_ratio: float = Field(1.0, gt=0)
    loop_bandwidth_hz: float = Field(1.0, ge=0)
    transmit_hz: float = Field(2100e6, gt=0)
    count_time_s: float = Field(0.5, gt=0)
    phase_noise_rad: float = Field(0.01, ge=0)


class LinkSection(_Section):
    measurement: Literal["pn_range", "time_derived_range", "range_rate"] = "pn_range"
    cadence_s: float = Field(60.0, gt=0)
    bias_truth_m: float = 10.0
    pn: PnSection = PnSection()
    time_derived: TimeDerivedSection = TimeDerivedSection()
    doppler: DopplerSection = DopplerSection()
    pn_combiner: Literal["rss", "quadratic_mean"] = "rss"
    time_derived_combiner: Literal["rss", "quadratic_mean"] = "quadratic_mean"
    range_rate_sigma_mps: float = Field(0.97e-3, gt=0)


class FilterSection(_Section):
    bias_mode: Literal["neglect", "estimate", "consider"] = "neglect"
    process_noise_sigma: tuple[float, float] = (2e-5, 2e-5)
    q_form: Literal["quartic", "snc"] = "quartic"
    initial_sigma_pos_m: float = Field(1000.0, gt=0)
    initial_sigma_vel_mps: float = Field(0.01, gt=0)
    initial_error_pos_m: float = Field(500.0, ge=0)
    initial_error_vel_mps: float = Field(0.001, ge=0)
    bias_prior_sigma_m: float = Field(10.0, ge=0)
    consider_b0_m: float = 10.0
    estimate_clock_drift: bool = False
    drift_prior_sigma_mps: float = Field(1e-3, ge=0)
    divergence_factor: float = Field(100.0, gt=0)

    @field_validator("process_noise_sigma")
    @classmethod
    def _non_negative(cls, v):
        if any(s < 0 for s in v):
            raise ValueError("process noise intensities must be non-negative")
        return v


class MonteCarloSection(_Section):
    runs: int = Field(100, ge=1)
    seed: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)


class ScenarioConfig(_Section):
    name: str = "scenario"
    dynamics: DynamicsSection = DynamicsSection()
    spacecraft: SpacecraftPair = SpacecraftPair()
    link: LinkSection = LinkSection()
    filter: FilterSection = FilterSection()
    montecarlo: MonteCarloSection = MonteCarloSection()

    def with_overrides(self, **sections):
        """Copy with per-section field overrides, e.g. ``link={"cadence_s": 120}``."""
        data = self.model_dump()
        for section, values in sections.items():
            if isinstance(data.get(section), dict):
                data[section].update(values)
            else:
                data[section] = values
        return ScenarioConfig.model_validate(data)


def _line_of(text, key):
    m = re.search(r'"%s"\s*:' % re.escape(str(key)), text)
    return None if m is None else text.count("\n", 0, m.start()) + 1


def parse_scenario(text, source="<string>"):
    if not text.strip():
        raise ConfigError(f"{source}: empty scenario file")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{source}:1: scenario must be a JSON object")
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"])
            keys = [p for p in err["loc"] if isinstance(p, str)]
            line = _line_of(text, keys[-1]) if keys else None
            where = f"{source}:{line}" if line else source
            lines.append(f"{where}: {loc}: {err['msg']}")
        raise ConfigError("\n".join(lines)) from None


def load_scenario(path):
    """Read and validate a scenario JSON file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    return parse_scenario(text, str(path))


def bundled_scenarios():
    return sorted(p.name for p in resources.files("crosslink_nav.data").iterdir() if p.name.endswith(".json"))


def bundled_scenario_path(name):
    return Path(str(resources.files("crosslink_nav.data").joinpath(name)))
