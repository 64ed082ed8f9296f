"""Exception types shared across the package."""


class MemlenError(Exception):
    """Base class for package errors."""


class OutOfRangeError(MemlenError):
    """An index or length argument falls outside the stored data."""


class UndefinedConditionalError(MemlenError):
    """A conditional probability was requested for a context with zero count."""


class InsufficientRecurrencesError(MemlenError):
    """Fewer block recurrences are available than were requested."""


class InvalidModelError(MemlenError):
    """A process model violates its structural constraints."""


class ImpossiblePastError(MemlenError):
    """The supplied past has probability zero under the model."""
