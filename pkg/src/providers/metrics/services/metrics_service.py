import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from nest.core import Injectable

from src.atomic_io import atomic_path
from src.exceptions import ParameterError
from src.model_compat import model_dump
from src.providers.admm.admm_model import AdmmConfig
from src.providers.dataset.dataset_model import Dataset, NodePartition
from src.providers.logger.logger_service import Logger
from src.providers.metrics.metrics_model import RUN_CSV_COLUMNS, CentralizedOptimum, RunRecord
from src.providers.objective.objective_model import ObjectiveSpec
from src.providers.objective.objective_service import ObjectiveService
from src.providers.privacy.privacy_model import PrivacyBudget
from src.providers.topology.topology_model import Graph


def write_csv_atomic(frame: pd.DataFrame, path, header_comment: Optional[str] = None):
    """Writes `frame` to a sibling temp file, then renames it over `path`."""
    with atomic_path(path) as tmp, tmp.open("w", newline="") as handle:
        if header_comment:
            handle.write(f"# {header_comment}\n")
        frame.to_csv(handle, index=False, float_format="%.15g")


@Injectable()
class MetricsService:
    def __init__(self, objective_service: ObjectiveService, logger: Logger):
        self.objective = objective_service
        self.logger = logger

    def default_beta(self, rho: float, graph: Graph) -> float:
        return rho * graph.max_degree()

    def total_risk(
        self, models: Sequence[np.ndarray], partitions: Sequence[NodePartition], spec: ObjectiveSpec
    ) -> float:
        return float(
            sum(self.objective.local_objective(p, spec, w) for p, w in zip(partitions, models))
        )

    def utility_metric(
        self,
        models: Sequence[np.ndarray],
        w_star: np.ndarray,
        beta: float,
        graph: Graph,
        partitions: Sequence[NodePartition],
        spec: ObjectiveSpec,
    ) -> Tuple[float, float]:
        """(excess risk, feasibility); every undirected edge is counted once per direction."""
        if beta < 0:
            raise ParameterError(f"beta must be >= 0, got {beta}")
        excess = sum(
            self.objective.local_objective(p, spec, w)
            - self.objective.local_objective(p, spec, w_star)
            for p, w in zip(partitions, models)
        )
        feasibility = beta * sum(
            float(np.linalg.norm(models[i] - models[j])) for i, j in graph.directed_edges()
        )
        return float(excess), float(feasibility)

    def consensus_error(self, models: Sequence[np.ndarray]) -> float:
        stacked = np.stack(models)
        return float(np.max(np.linalg.norm(stacked - stacked.mean(axis=0), axis=1)))

    def accuracy(self, models: Sequence[np.ndarray], test: Dataset) -> float:
        """Share of test samples with sign(mean model . a) == b; a zero score counts as wrong."""
        if len(test) == 0:
            raise ParameterError("accuracy needs a non-empty test split")
        scores = test.features @ np.mean(np.stack(models), axis=0)
        return float(np.mean(np.sign(scores) == test.labels))

    def theoretical_bound(
        self,
        graph: Graph,
        partitions: Sequence[NodePartition],
        spec: ObjectiveSpec,
        cfg: AdmmConfig,
        budget: Optional[PrivacyBudget],
        beta: float,
    ) -> float:
        """Right-hand side of the expected excess-risk-plus-feasibility bound for these settings."""
        steps = cfg.t * cfg.l
        total = 0.0
        for node, partition in enumerate(partitions):
            inner = (spec.c2 / spec.n) ** 2
            if budget is not None and cfg.noise_enabled:
                inner += (
                    partition.dimension
                    * budget.c0**2
                    * spec.c1**2
                    * steps
                    * 8.0
                    * math.log(1.25 / budget.delta)
                    / (budget.epsilon**2 * partition.size**2)
                )
            degree = graph.degree(node)
            total += math.sqrt(2.0) * spec.D / math.sqrt(steps) * math.sqrt(inner)
            total += (cfg.rho * degree * spec.D**2 + degree * beta**2 / cfg.rho) / cfg.t
        return total

    def recorder(
        self,
        graph: Graph,
        partitions: Sequence[NodePartition],
        spec: ObjectiveSpec,
        optimum: CentralizedOptimum,
        beta: float,
        test: Optional[Dataset] = None,
        eval_mode: str = "average",
    ):
        """Builds the per-iteration callback the engine uses to emit RunRecords."""
        if eval_mode not in ("average", "last"):
            raise ParameterError(f"unknown eval_mode {eval_mode!r}")

        def record(k: int, averages: List[np.ndarray], broadcasts: List[np.ndarray]) -> RunRecord:
            models = averages if eval_mode == "average" else broadcasts
            excess, feasibility = self.utility_metric(
                models, optimum.w_star, beta, graph, partitions, spec
            )
            return RunRecord(
                k=k,
                total_risk=self.total_risk(models, partitions, spec),
                excess_risk=excess,
                feasibility=feasibility,
                consensus_error=self.consensus_error(models),
                accuracy=self.accuracy(models, test) if test is not None and len(test) else math.nan,
            )

        return record

    def write_run_csv(self, records: Sequence[RunRecord], path, header_comment: Optional[str] = None):
        frame = pd.DataFrame([model_dump(r) for r in records], columns=RUN_CSV_COLUMNS)
        write_csv_atomic(frame, path, header_comment)
        self.logger.info(f"Wrote {len(records)} run records to {path}")
