"""Error taxonomy. CLI exit codes map onto these classes."""


class StolabError(Exception):
    """Base class for all package errors."""


class ConfigError(StolabError):
    """Invalid configuration or parameters (CLI exit code 1)."""


class SimulationError(StolabError):
    """Time-domain integration failure, e.g. non-finite state (CLI exit code 2)."""


class AnalysisError(StolabError):
    """Post-processing failure, e.g. fit did not converge (CLI exit code 3)."""


class NoSidebandError(AnalysisError):
    """Requested mixing product is indistinguishable from the local noise floor."""
