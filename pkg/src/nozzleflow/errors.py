"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class NozzleError(Exception):
    exit_code = 3


class ConfigError(NozzleError):
    exit_code = 1

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DomainError(NozzleError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class VacuumError(DomainError):
    """Zero density where velocity or Riemann invariants are required."""


class GeometryError(NozzleError, ValueError):
    pass


class AdmissibilityError(NozzleError):
    exit_code = 2


class NumericError(NozzleError, ArithmeticError):
    pass


class FloorViolationError(NumericError):
    def __init__(self, message, t=None, node=None):
        self.t = t
        self.node = node
        super().__init__(message)


class BlowUpError(NumericError):
    def __init__(self, message, trace=None):
        self.trace = trace
        super().__init__(message)


class RangeError(NozzleError, ValueError):
    """Requested window or support not covered by a trace."""


class SweepError(NozzleError):
    pass


class VerificationFailure(NozzleError):
    exit_code = 4
