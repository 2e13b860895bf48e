"""Exception types shared across the pipeline."""


class FmcodeError(Exception):
    """Base class for all framework errors."""


class MalformedInputError(FmcodeError):
    """Raw trajectory violates its invariants (e.g. non-increasing timestamps)."""


class DegenerateInputError(FmcodeError):
    """Input too small to process (e.g. fewer than 2 trajectory points)."""


class EmptyAfterTrimError(FmcodeError):
    """The whole signal fell below the motion-trim threshold."""


class IncompatibleSignalError(FmcodeError):
    """Axis-count or length mismatch between signals/templates."""


class EmptyRegistrationError(FmcodeError):
    """Template construction called with zero signals."""


class TooShortSignalError(FmcodeError):
    """Signal shorter than the requested window/interpolation size."""


class InsufficientTrainingDataError(FmcodeError):
    """A training class is empty."""


class ConvergenceError(FmcodeError):
    """SMO failed to reach the KKT tolerance within the pass budget."""

    def __init__(self, message: str, iterations: int):
        super().__init__(message)
        self.iterations = iterations


class InsufficientRegistrationError(FmcodeError):
    """Too few registration signals for augmentation (K < 2)."""


class DegenerateTaskError(FmcodeError):
    """CNN training needs at least two classes."""


class TrainingFailureError(FmcodeError):
    """Training diverged (NaN loss)."""


class InsufficientScoresError(FmcodeError):
    """Metric computation needs nonempty genuine and guessing score sets."""


class ValidationError(FmcodeError):
    """Service request failed validation; carries per-item detail."""

    def __init__(self, message: str, details=None):
        super().__init__(message)
        self.details = details or []


class NotFoundError(FmcodeError):
    """Unknown account number or empty store."""
