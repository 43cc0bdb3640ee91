from __future__ import annotations


class DrgError(Exception):
    """Base class for everything this package raises on purpose."""


class InputValidationError(DrgError, ValueError):
    pass


class ConfigError(InputValidationError):
    pass


class UnsupportedDegreeError(InputValidationError):
    pass


class DegenerateInputError(InputValidationError):
    pass


class NumericalError(DrgError, ArithmeticError):
    pass


class StorageError(DrgError, OSError):
    pass


# CLI exit codes
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3


def exit_code_for(err: BaseException) -> int:
    if isinstance(err, (StorageError, OSError)):
        return EXIT_IO
    if isinstance(err, NumericalError):
        return EXIT_NUMERICAL
    return EXIT_VALIDATION
