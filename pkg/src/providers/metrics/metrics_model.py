from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel

RUN_CSV_COLUMNS = ["k", "total_risk", "excess_risk", "feasibility", "consensus_error", "accuracy"]


class RunRecord(BaseModel):
    k: int
    total_risk: float
    excess_risk: float
    feasibility: float
    consensus_error: float
    accuracy: float

    def __str__(self) -> str:
        return (
            f"risk={self.total_risk:.6g} excess={self.excess_risk:.3e} "
            f"feas={self.feasibility:.3e} cons={self.consensus_error:.3e} acc={self.accuracy:.4f}"
        )


@dataclass(frozen=True)
class CentralizedOptimum:
    w_star: np.ndarray
    objective_value: float
    gradient_norm: float
    iterations: int = 0
