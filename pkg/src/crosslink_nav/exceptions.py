class SingularityError(ValueError):
    """A state sits on (or numerically at) a gravitating body."""


class IntegrationError(RuntimeError):
    """Raised when a numerical integration cannot meet its contract."""


class FilterDivergenceError(RuntimeError):
    """Raised when a filter update produces an unusable covariance."""


class ConfigError(ValueError):
    """Scenario configuration failed validation."""
