from dataclasses import dataclass

from src.exceptions import ParameterError

# ||grad l|| <= ||a|| <= 1 for the logistic loss on unit-ball features.
LOGISTIC_LIPSCHITZ = 1.0


@dataclass(frozen=True)
class ObjectiveSpec:
    """L2-regularized logistic objective split over n nodes.

    Node i minimizes mean loss + (lam / 2n) ||w||^2, so the node terms sum to
    the global objective with regularizer (lam / 2) ||w||^2.
    """

    lam: float
    n: int
    c1: float
    c2: float
    D: float

    def __post_init__(self):
        if self.lam < 0:
            raise ParameterError(f"lambda must be >= 0, got {self.lam}")
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        if self.c1 <= 0 or self.c2 <= 0 or self.D <= 0:
            raise ParameterError(
                f"c1, c2 and D must be positive, got ({self.c1}, {self.c2}, {self.D})"
            )

    @property
    def node_regularizer(self) -> float:
        return self.lam / self.n
