"""Exception types shared across the package."""


class HoverctlError(Exception):
    """Base class for all package errors."""


class ConfigError(HoverctlError):
    """Scenario configuration is missing, malformed or inconsistent."""


class KeplerConvergenceError(HoverctlError):
    """The eccentric-anomaly iteration failed to converge."""


class FrameError(HoverctlError):
    """A local orbital frame could not be constructed (degenerate orbit)."""


class InfeasibleControlError(HoverctlError):
    """A control program was invoked with an empty feasible set."""


class SamplingError(HoverctlError):
    """Rejection sampling failed to produce a valid sample."""
