"""Shared exception types."""


class ColurError(Exception):
    pass


class ConfigError(ColurError):
    """Invalid configuration or hyperparameter value."""


class ShapeError(ColurError):
    """Dimension mismatch between arrays."""


class EvalError(ColurError):
    """Metric requested on a degenerate (e.g. empty) sample set."""
