"""Exception hierarchy shared by every module of the lab."""

import math

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class TodaLabError(Exception):
    exit_code = EXIT_NUMERICAL
    module = "toda_lab"

    def __init__(self, message, module=None, **details):
        super().__init__(message)
        self.message = message
        if module is not None:
            self.module = module
        self.details = details

    def report(self):
        return {
            "error": {
                "type": type(self).__name__,
                "module": self.module,
                "message": self.message,
                "details": {k: plain_value(v) for k, v in sorted(self.details.items())},
            }
        }


class ConfigError(TodaLabError, ValueError):
    exit_code = EXIT_CONFIG
    module = "config"


class NumericalError(TodaLabError, ArithmeticError):
    exit_code = EXIT_NUMERICAL


class PoleError(NumericalError):
    pass


class InsufficientDecayError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class SingularJacobianError(NumericalError):
    pass


class BranchError(NumericalError):
    pass


class ContourProximityError(NumericalError):
    pass


class CollisionError(NumericalError):
    pass


class ResidueError(NumericalError):
    pass


class SectorError(NumericalError):
    pass


class WindowError(NumericalError):
    pass


def plain_value(value):
    """JSON-ready copy: complex as {"re", "im"}, arrays as lists, non-finite floats as None."""
    if isinstance(value, dict):
        return {str(k): plain_value(v) for k, v in value.items()}
    if isinstance(value, complex):
        return {"re": plain_value(value.real), "im": plain_value(value.imag)}
    if isinstance(value, (list, tuple)):
        return [plain_value(v) for v in value]
    if hasattr(value, "tolist"):
        return plain_value(value.tolist())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (int, float, str, bool)) or value is None:
        return value
    return str(value)


def as_lab_error(error, module="toda_lab"):
    """Lab errors pass through; a bare ValueError from a primitive becomes a ConfigError."""
    if isinstance(error, TodaLabError):
        return error
    return ConfigError(str(error), module=module, origin=type(error).__name__)
