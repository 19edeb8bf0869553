from dataclasses import dataclass

from pydantic import BaseModel

from src.exceptions import ParameterError
from src.model_compat import model_dump


@dataclass(frozen=True)
class PrivacyBudget:
    """Target (epsilon, delta) for a whole run of t outer iterations with l noisy updates each."""

    epsilon: float
    delta: float
    c0: float
    t: int
    l: int
    sigma: float

    @property
    def steps(self) -> int:
        return self.t * self.l


@dataclass(frozen=True)
class SensitivityParams:
    c1: float
    rho: float
    degree: int
    m_i: int
    eta: float

    def __post_init__(self):
        for name in ("c1", "rho", "degree", "m_i", "eta"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"sensitivity parameter {name} must be positive")


class AuditReport(BaseModel):
    epsilon: float
    delta: float
    per_step_epsilon: float
    composed_epsilon: float
    sigma: float
    c0: float
    t: int
    l: int
    steps_executed: int
    per_step_epsilon_ge_1: bool
    slack: float

    def to_text(self) -> str:
        return "".join(f"{key}={value!r}\n" for key, value in model_dump(self).items())
