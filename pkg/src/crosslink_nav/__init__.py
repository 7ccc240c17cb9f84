"""Crosslink-only autonomous navigation for a cislunar spacecraft pair.

Joint orbit determination of an Earth-Moon L2 halo orbiter (LUMIO) and a
lunar elliptical frozen orbiter (LPF) from inter-satellite range or
range-rate, with CRTBP or point-mass N-body dynamics.
"""

from .config import ScenarioConfig, load_scenario, parse_scenario
from .dynamics import (
    EARTH_MOON,
    CrtbpParams,
    KeplerianElements,
    RotatingState,
    barycentric_to_mci,
    jacobi_constant,
    kepler_to_cartesian,
    mci_to_barycentric,
    propagate,
)
from .ephemeris import AnalyticEphemeris, NbodyModel, SrpConfig, TabulatedEphemeris, propagate_nbody
from .estimator import CrosslinkNavigator
from .exceptions import ConfigError, FilterDivergenceError, IntegrationError, SingularityError
from .filtering import ConsiderConfig, JointFilterState, ProcessNoiseConfig, initial_state
from .flows import CrtbpFlow, NbodyFlow
from .integrators import IntegratorConfig
from .navigation import run_filter
from .observability import ObservabilityReport, accumulate_gramian, observation_effectiveness, svd_metrics
from .radiometrics import LinkBudget, measurement_partials, time_transfer_range
from .scenario import build_scenario, run_monte_carlo, simulate

__version__ = "0.1.0"
