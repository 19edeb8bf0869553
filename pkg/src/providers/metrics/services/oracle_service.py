import hashlib
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
from nest.core import Injectable

from src.atomic_io import atomic_path
from src.exceptions import NonConvergenceError, ParameterError
from src.providers.config.config_service import ConfigService
from src.providers.dataset.dataset_model import NodePartition
from src.providers.logger.logger_service import Logger
from src.providers.metrics.metrics_model import CentralizedOptimum
from src.providers.objective.objective_model import ObjectiveSpec
from src.providers.objective.objective_service import ObjectiveService


@Injectable()
class OracleService:
    """High-precision minimizer of the global objective, used as w* by the utility metric."""

    MAX_ITERATIONS = 200_000

    def __init__(
        self,
        objective_service: ObjectiveService,
        config_service: ConfigService,
        logger: Logger,
    ):
        self.objective = objective_service
        self.config_service = config_service
        self.logger = logger

    @staticmethod
    def _pool(partitions: Sequence[NodePartition]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        features = np.vstack([p.features for p in partitions])
        labels = np.concatenate([p.labels for p in partitions]).astype(float)
        weights = np.concatenate([np.full(p.size, 1.0 / p.size) for p in partitions])
        return features, labels, weights

    def solve_centralized(
        self,
        partitions: Sequence[NodePartition],
        spec: ObjectiveSpec,
        tol: float = 1e-8,
        start: Optional[np.ndarray] = None,
        max_iterations: Optional[int] = None,
    ) -> CentralizedOptimum:
        """
        Minimizes sum_i L_i(w) by accelerated gradient descent with backtracking
        line search and function-value restarts, stopping once ||grad|| < tol.
        """
        if not spec.lam > 0:
            raise ParameterError("the centralized oracle needs lambda > 0")
        max_iterations = max_iterations or self.MAX_ITERATIONS
        features, labels, weights = self._pool(partitions)

        def value_and_gradient(w):
            return self.objective.pooled_value_and_gradient(
                features, labels, weights, spec.lam, w
            )

        x = np.zeros(features.shape[1]) if start is None else np.array(start, dtype=float)
        f_x, _ = value_and_gradient(x)
        y, theta, lipschitz = x.copy(), 1.0, 1.0
        gradient_norm = np.inf

        for iteration in range(1, max_iterations + 1):
            f_y, g_y = value_and_gradient(y)
            gradient_norm = float(np.linalg.norm(g_y))
            if gradient_norm < tol:
                objective_value = self.objective.global_objective(partitions, spec, y)
                self.logger.info(
                    f"Oracle converged in {iteration} iterations: "
                    f"objective {objective_value:.12g}, gradient norm {gradient_norm:.2e}"
                )
                return CentralizedOptimum(
                    w_star=y,
                    objective_value=objective_value,
                    gradient_norm=gradient_norm,
                    iterations=iteration,
                )

            # slack absorbs rounding once the predicted decrease falls below machine precision
            slack = 1e-14 * max(1.0, abs(f_y))
            while True:
                x_next = y - g_y / lipschitz
                f_next, _ = value_and_gradient(x_next)
                if f_next <= f_y - 0.5 * gradient_norm**2 / lipschitz + slack:
                    break
                lipschitz *= 2.0
                if lipschitz > 1e20:
                    self.logger.error(
                        f"Oracle line search collapsed at gradient norm {gradient_norm:.3e}"
                    )
                    raise NonConvergenceError("oracle line search collapsed", gradient_norm)

            theta_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta**2))
            if f_next > f_x:
                # momentum overshot: restart from the plain gradient step
                theta_next, y = 1.0, x_next
            else:
                y = x_next + ((theta - 1.0) / theta_next) * (x_next - x)
            x, f_x, theta = x_next, f_next, theta_next
            lipschitz *= 0.9

        self.logger.error(
            f"Oracle stopped after {max_iterations} iterations at gradient norm {gradient_norm:.3e}"
        )
        raise NonConvergenceError(
            f"oracle hit {max_iterations} iterations before tol {tol}", gradient_norm
        )

    def cache_key(self, partitions: Sequence[NodePartition], spec: ObjectiveSpec, tol: float) -> str:
        features, labels, weights = self._pool(partitions)
        digest = hashlib.sha256()
        for array in (features, labels, weights):
            digest.update(np.ascontiguousarray(array, dtype=float).tobytes())
        digest.update(repr((spec.lam, spec.n, tol)).encode())
        return digest.hexdigest()

    def solve_cached(
        self,
        partitions: Sequence[NodePartition],
        spec: ObjectiveSpec,
        tol: float = 1e-8,
        cache_dir=None,
    ) -> CentralizedOptimum:
        """solve_centralized, memoized on disk by a content hash of the data, lambda and n."""
        cache_dir = Path(
            cache_dir or self.config_service.get("ORACLE_CACHE_DIR", ".cache/oracle")
        )
        path = cache_dir / f"oracle-{self.cache_key(partitions, spec, tol)}.npz"
        if path.exists():
            with np.load(path) as stored:
                self.logger.info(f"Oracle loaded from cache {path}")
                return CentralizedOptimum(
                    w_star=stored["w_star"],
                    objective_value=float(stored["objective_value"]),
                    gradient_norm=float(stored["gradient_norm"]),
                    iterations=int(stored["iterations"]),
                )

        optimum = self.solve_centralized(partitions, spec, tol)
        with atomic_path(path, suffix=".npz") as tmp:
            np.savez(
                tmp,
                w_star=optimum.w_star,
                objective_value=optimum.objective_value,
                gradient_norm=optimum.gradient_norm,
                iterations=optimum.iterations,
            )
        return optimum
