"""Exception types shared across the package.

Every failure mode raised by the public API is a subclass of CorrloopError,
so callers can catch one type at the CLI boundary.
"""


class CorrloopError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(CorrloopError):
    """Operands disagree on the space dimension."""


class SizeMismatchError(CorrloopError):
    """Operands disagree on the number of points."""


class EmptyOrSingletonError(CorrloopError):
    """An operation needs at least two points."""


class EmptySynthSetError(CorrloopError):
    """Corrected sampling needs a nonempty synthetic set."""


class EmptyInputError(CorrloopError):
    """An aggregate operation received nothing to aggregate."""


class CholeskyFailureError(CorrloopError):
    """Covariance is not positive definite at working precision."""


class EigFailureError(CorrloopError):
    """Eigendecomposition did not converge."""


class InvalidDeltaError(CorrloopError):
    """Confidence level outside the open interval (0, 1)."""


class NonPositiveLogArgumentError(CorrloopError):
    """Error-floor constants give a log argument at or below 1."""


class LoopFailureError(CorrloopError):
    """A numerical failure inside the training loop, tagged with the
    generation index at which it occurred."""

    def __init__(self, generation: int, message: str):
        super().__init__(f"generation {generation}: {message}")
        self.generation = generation


class ConfigError(CorrloopError):
    """Experiment configuration is structurally or semantically invalid."""


class ParseError(ConfigError):
    """Experiment file is not valid TOML (message carries line/column)."""
