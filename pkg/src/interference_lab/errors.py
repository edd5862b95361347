"""Exception hierarchy shared by the library and the CLI."""


class InterferenceLabError(Exception):
    """Base class for all library errors."""


class UsageError(InterferenceLabError, ValueError):
    """Caller supplied arguments that can never be valid (CLI exit code 1)."""


class DataError(InterferenceLabError, ValueError):
    """Input data or a model violates an invariant (CLI exit code 2)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class GenerationError(InterferenceLabError, RuntimeError):
    """A randomized generator ran out of retries."""


class DegenerateWeightError(DataError):
    """The unbiased weight has a vanishing denominator."""

    def __init__(self, message, degrees=()):
        super().__init__(message)
        self.degrees = tuple(degrees)


class NotARefinementError(DataError):
    """The fine exposure mapping does not determine the coarse one."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness
