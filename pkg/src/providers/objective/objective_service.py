from typing import Optional, Sequence, Tuple

import numpy as np
from nest.core import Injectable

from src.exceptions import PartitionError, ShapeError
from src.providers.dataset.dataset_model import NodePartition, Sample
from src.providers.objective.objective_model import LOGISTIC_LIPSCHITZ, ObjectiveSpec


def _check_shapes(features: np.ndarray, w: np.ndarray):
    if features.ndim != 2 or features.shape[1] == 0:
        raise ShapeError(f"features must be a non-empty (m, d) matrix, got {features.shape}")
    if w.shape != (features.shape[1],):
        raise ShapeError(f"model has shape {w.shape}, features have d = {features.shape[1]}")


@Injectable()
class ObjectiveService:
    def logistic_loss(self, sample: Sample, w: np.ndarray) -> float:
        """log(1 + exp(-b w.a)), evaluated as logaddexp(0, -b w.a) so large margins do not overflow."""
        features = np.asarray(sample.features, dtype=float)
        if features.ndim != 1 or features.shape != w.shape or features.size == 0:
            raise ShapeError(f"sample has shape {features.shape}, model has {w.shape}")
        return float(np.logaddexp(0.0, -sample.label * float(features @ w)))

    def batch_loss_gradient(
        self, features: np.ndarray, labels: np.ndarray, w: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Per-sample losses (m,) and gradient coefficients (m,).

        The gradient of sample j's loss is coefficients[j] * features[j].
        """
        _check_shapes(features, w)
        margins = labels * (features @ w)
        losses = np.logaddexp(0.0, -margins)
        # -b / (1 + exp(b w.a)), with 1 / (1 + exp(x)) = exp(-logaddexp(0, x))
        coefficients = -labels * np.exp(-np.logaddexp(0.0, margins))
        return losses, coefficients

    def local_objective(
        self, partition: NodePartition, spec: ObjectiveSpec, w: np.ndarray
    ) -> float:
        if partition.size == 0:
            raise PartitionError(f"node {partition.node_id} holds no samples")
        losses, _ = self.batch_loss_gradient(partition.features, partition.labels, w)
        return float(np.mean(losses)) + 0.5 * spec.node_regularizer * float(w @ w)

    def local_gradient(
        self, partition: NodePartition, spec: ObjectiveSpec, w: np.ndarray
    ) -> np.ndarray:
        if partition.size == 0:
            raise PartitionError(f"node {partition.node_id} holds no samples")
        return self.data_gradient(partition.features, partition.labels, w) + (
            spec.node_regularizer * w
        )

    def data_gradient(
        self, features: np.ndarray, labels: np.ndarray, w: np.ndarray
    ) -> np.ndarray:
        """Mean logistic-loss gradient over the given rows, without the regularizer."""
        _, coefficients = self.batch_loss_gradient(features, labels, w)
        return features.T @ coefficients / features.shape[0]

    def global_objective(
        self, partitions: Sequence[NodePartition], spec: ObjectiveSpec, w: np.ndarray
    ) -> float:
        return float(sum(self.local_objective(p, spec, w) for p in partitions))

    def pooled_value_and_gradient(
        self,
        features: np.ndarray,
        labels: np.ndarray,
        weights: np.ndarray,
        lam: float,
        w: np.ndarray,
    ) -> Tuple[float, np.ndarray]:
        """
        Sum over rows of weights * loss plus (lam / 2) ||w||^2, with its gradient.
        With weights 1/m_i on node i's rows this is the global objective.
        """
        losses, coefficients = self.batch_loss_gradient(features, labels, w)
        value = float(weights @ losses) + 0.5 * lam * float(w @ w)
        return value, features.T @ (weights * coefficients) + lam * w

    def lipschitz_constants(
        self, lam: float, n: int, D: float, c1: float = LOGISTIC_LIPSCHITZ
    ) -> Tuple[float, float]:
        """(c1, c2): loss Lipschitz constant and node-objective Lipschitz constant on the D-ball."""
        return c1, c1 + (lam / n) * (D / 2.0)

    def make_spec(
        self, lam: float, n: int, D: float, c2_override: Optional[float] = None
    ) -> ObjectiveSpec:
        c1, c2 = self.lipschitz_constants(lam, n, D)
        return ObjectiveSpec(
            lam=lam, n=n, c1=c1, c2=c2_override if c2_override is not None else c2, D=D
        )

    def project_to_domain(self, w: np.ndarray, D: float) -> np.ndarray:
        radius = D / 2.0
        norm = float(np.linalg.norm(w))
        if norm <= radius:
            return w
        return w * (radius / norm)
