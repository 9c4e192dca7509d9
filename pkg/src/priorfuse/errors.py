"""Exception hierarchy and process exit codes."""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class PriorFuseError(Exception):
    """Base class for all errors raised by this package."""


class InputError(PriorFuseError):
    """Invalid argument values or incompatible shapes."""


class DegenerateDataError(InputError):
    """Input is formally valid but carries no usable signal."""


class ConfigError(PriorFuseError):
    """Invalid experiment configuration; message names the field path."""


class DataError(PriorFuseError):
    """Dataset file or schema problem; message cites column/row."""


class FitError(PriorFuseError):
    """A closed-form fit has no solution (degenerate design)."""


class TrainingError(PriorFuseError):
    """Training diverged or a member failed."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class NumericalError(PriorFuseError):
    """A linear-algebra routine failed beyond recovery."""


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code contract."""
    if isinstance(exc, ConfigError):
        return EXIT_USAGE
    if isinstance(exc, (DataError, InputError)):
        return EXIT_DATA
    if isinstance(exc, (TrainingError, NumericalError, FitError)):
        return EXIT_NUMERIC
    return EXIT_NUMERIC
