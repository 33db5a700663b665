"""Exception types shared across the toolkit."""


class PlatoonError(Exception):
    """Base class for all toolkit errors."""


class TopologyError(PlatoonError):
    """Invalid topology construction or a failed structural precondition."""


class LeaderUnreachableError(TopologyError):
    """The leader cannot reach every follower; the coupling spectrum may touch zero."""


class RouthMarginalError(PlatoonError):
    """A zero pivot appeared in the Routh array: marginal/indeterminate, not unstable."""


class TheoremNotApplicableError(PlatoonError):
    """The coupling matrix is neither lower triangular nor symmetric, so the
    closed-form stability theorems do not cover it."""


class SimulationBlowUpError(PlatoonError):
    """A state magnitude exceeded the blow-up guard during integration."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ConfigError(PlatoonError):
    """Malformed configuration file or invalid parameter value."""
