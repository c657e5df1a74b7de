"""Exception and warning types shared by the engine and the command line.

Every error carries the process exit code the CLI should return for it.
"""


class SegmarketError(Exception):
    """Base class for all errors raised by the model pipeline."""

    exit_code = 1

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        """
        Machine-readable form written to standard error by the CLI

        Returns:
            dict: error class name, exit code, message and any details
        """
        payload = {"error": type(self).__name__, "exit_code": self.exit_code, "message": self.message}
        if self.details:
            payload["details"] = self.details
        return payload


# Configuration and validation (exit code 2)

class ValidationError(SegmarketError):
    exit_code = 2


class ParameterError(ValidationError):
    """A model parameter violates its invariant. The message names the field."""

    def __init__(self, field, message=None):
        super().__init__(message or f"{field} out of range", field=field)
        self.field = field


class ConfigError(ValidationError):
    pass


class SchemaError(ValidationError):
    """A panel file does not conform to the record schema."""

    def __init__(self, message, row=None, column=None):
        details = {}
        if row is not None:
            details["row"] = row
        if column is not None:
            details["column"] = column
        super().__init__(message, **details)
        self.row = row
        self.column = column


class InvalidWaveMonths(ValidationError):
    pass


class MissingReferencePeriod(ValidationError):
    pass


class ScenarioMismatch(ValidationError):
    pass


# Numerical failures (exit code 3)

class NumericalError(SegmarketError):
    exit_code = 3


class MaxIterations(NumericalError):
    def __init__(self, message, residual=None, trace=None):
        super().__init__(message, residual=residual)
        self.residual = residual
        self.trace = list(trace) if trace is not None else []


class Divergence(NumericalError):
    pass


class BracketFailure(NumericalError):
    pass


class OscillationDetected(NumericalError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class NonMonotoneValues(NumericalError):
    pass


class InsufficientPoints(NumericalError):
    pass


class UnsolvedEquilibrium(NumericalError):
    pass


class SingularDesign(NumericalError):
    def __init__(self, column):
        super().__init__(f"design matrix is singular: column '{column}' is collinear", column=column)
        self.column = column


class EmptyCluster(NumericalError):
    pass


class ZeroVariance(NumericalError):
    pass


# I/O (exit code 4)

class OutputError(SegmarketError):
    exit_code = 4


# Recoverable conditions

class StationaryNonConvergence(RuntimeWarning):
    """Power iteration did not settle; the average of the last iterates is returned."""


class FewerClustersThanParams(UserWarning):
    """Cluster-robust standard errors rest on fewer clusters than parameters."""
