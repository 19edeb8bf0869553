from typing import Optional


class DpAdmmError(Exception):
    """Base class for every error raised by the dp-admm providers."""

    exit_code = 3


class TopologyError(DpAdmmError):
    """Raised when a graph is too small, asymmetric, has self-loops or is disconnected."""

    def __init__(self, message: str, reason: str = "invalid-topology"):
        super().__init__(message)
        self.reason = reason

    def __reduce__(self):
        return type(self), (str(self), self.reason)


class DatasetParseError(DpAdmmError):
    def __init__(self, message: str, line_number: Optional[int] = None):
        self.raw_message = message
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number

    def __reduce__(self):
        return type(self), (self.raw_message, self.line_number)


class PartitionError(DpAdmmError):
    pass


class ShapeError(DpAdmmError, ValueError):
    pass


class ParameterError(DpAdmmError, ValueError):
    pass


class ProtocolError(DpAdmmError):
    pass


class NonConvergenceError(DpAdmmError):
    def __init__(self, message: str, gradient_norm: float):
        self.raw_message = message
        super().__init__(f"{message} (gradient norm {gradient_norm:.3e})")
        self.gradient_norm = gradient_norm

    def __reduce__(self):
        return type(self), (self.raw_message, self.gradient_norm)


class BudgetExceededError(DpAdmmError):
    exit_code = 4


class ConfigError(DpAdmmError):
    exit_code = 2

    def __init__(self, key: str, message: str):
        self.raw_message = message
        super().__init__(f"config key '{key}': {message}")
        self.key = key

    def __reduce__(self):
        return type(self), (self.key, self.raw_message)


class SweepCellError(DpAdmmError):
    """Wraps the failure of one (epsilon, l, seed) cell so the sweep can report which one died."""

    def __init__(self, cell: str, cause: BaseException):
        super().__init__(f"sweep cell {cell} failed: {cause}")
        self.cell = cell
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", DpAdmmError.exit_code)
