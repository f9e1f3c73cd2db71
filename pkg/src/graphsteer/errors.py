"""Exception and warning types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid configuration value or malformed config file."""


class NumericalDomainError(ArithmeticError):
    """An input left the numerical domain an operation is defined on."""


class UnsupportedOperationError(TypeError):
    """The requested operation is not available for this object."""


class RewardEvaluationError(RuntimeError):
    """A reward evaluation returned a non-finite value."""


class UndefinedMetricError(ValueError):
    """A metric is undefined for the given inputs (e.g. an empty group)."""


class SamplingError(RuntimeError):
    """A sampling chain failed; the message carries the step index."""


class DegenerateConstraintWarning(UserWarning):
    """A constraint is vacuous for the given inputs (e.g. empty mask)."""
