"""
Exception hierarchy for wisdomsim
"""
from typing import Optional


class Error(Exception):
    """Base class for every error raised by wisdomsim"""


class ParameterError(Error, ValueError):
    """Raised when model, population or grid parameters fail validation"""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(message)


class PositivityViolation(Error, ArithmeticError):
    """Raised when an update drives an opinion to zero or below"""

    def __init__(self, step_index: int, agent_index: int, value: float,
                 replicate_index: Optional[int] = None):
        self.step_index = step_index
        self.agent_index = agent_index
        self.replicate_index = replicate_index
        self.value = value
        where = f"agent {agent_index}"
        if replicate_index is not None:
            where += f" of replicate {replicate_index}"
        super().__init__(
            f"opinion of {where} became non-positive ({value!r}) at step {step_index}"
        )


class MetricDomainError(Error, ValueError):
    """Raised when a metric receives non-positive opinions or truth"""


class DegenerateDynamicsError(Error, ValueError):
    """Raised when an oracle is asked for a solution with alpha + beta == 0"""


class ConfigError(Error, ValueError):
    """Raised when a run configuration document is invalid"""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        location = []
        if key is not None:
            location.append(f"key '{key}'")
        if line is not None:
            location.append(f"line {line}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class SweepFailedError(Error):
    """Raised when every cell of a sweep failed"""
