from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.exceptions import ParameterError, ShapeError


@dataclass(frozen=True)
class AdmmConfig:
    rho: float
    t: int
    l: int
    noise_enabled: bool = True
    projection_enabled: bool = True
    minibatch_size: Optional[int] = None

    def __post_init__(self):
        if not self.rho > 0:
            raise ParameterError(f"rho must be positive, got {self.rho}")
        if self.t < 1 or self.l < 1:
            raise ParameterError(f"t and l must be >= 1, got t={self.t}, l={self.l}")
        if self.minibatch_size is not None and self.minibatch_size < 1:
            raise ParameterError(f"minibatch_size must be >= 1, got {self.minibatch_size}")


@dataclass
class NodeState:
    """One node's view of the protocol between two broadcast rounds.

    `w_inner` is the current noisy inner iterate, `w_prev_broadcast` the node's
    own last broadcast and `neighbor_broadcasts` the last broadcasts it received.
    `running_average` is the mean of every inner start point seen so far.
    """

    node_id: int
    neighbors: Tuple[int, ...]
    w_inner: np.ndarray
    w_prev_broadcast: np.ndarray
    dual: np.ndarray
    neighbor_broadcasts: Dict[int, np.ndarray] = field(default_factory=dict)
    inner_history: List[np.ndarray] = field(default_factory=list)
    running_average: Optional[np.ndarray] = None
    average_count: int = 0
    steps: int = 0
    _neighbor_sum: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def initial(cls, node_id: int, neighbors, d: int) -> "NodeState":
        zero = np.zeros(d)
        return cls(
            node_id=node_id,
            neighbors=tuple(neighbors),
            w_inner=zero.copy(),
            w_prev_broadcast=zero.copy(),
            dual=zero.copy(),
            neighbor_broadcasts={j: zero.copy() for j in neighbors},
            running_average=zero.copy(),
        )

    @property
    def dimension(self) -> int:
        return int(self.w_inner.shape[0])

    def check_dimensions(self):
        d = self.dimension
        vectors = [self.w_prev_broadcast, self.dual, *self.neighbor_broadcasts.values()]
        if any(v.shape != (d,) for v in vectors):
            raise ShapeError(f"node {self.node_id} holds vectors of mixed dimension")

    def receive_broadcasts(self, own: np.ndarray, broadcasts: Dict[int, np.ndarray]):
        self.w_prev_broadcast = own
        self.neighbor_broadcasts = {j: broadcasts[j] for j in self.neighbors}
        self._neighbor_sum = None

    def neighbor_sum(self) -> np.ndarray:
        """Sum of received broadcasts, accumulated in ascending neighbor order."""
        if self._neighbor_sum is None:
            total = np.zeros(self.dimension)
            for j in self.neighbors:
                total = total + self.neighbor_broadcasts[j]
            self._neighbor_sum = total
        return self._neighbor_sum

    def accumulate_average(self, w: np.ndarray):
        self.average_count += 1
        self.running_average = self.running_average + (w - self.running_average) / self.average_count


@dataclass
class RunResult:
    records: list
    models: List[np.ndarray]
    broadcasts: List[np.ndarray]
    states: List[NodeState]
    steps_executed: int
    dual_sum_norms: List[float]
    last_k: int = 0
