from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from nest.core import Injectable

from src.exceptions import DpAdmmError, ProtocolError, SweepCellError
from src.providers.admm.admm_model import AdmmConfig, RunResult
from src.providers.admm.services.checkpoint_service import CheckpointService
from src.providers.admm.services.engine_service import AdmmEngineService
from src.providers.config.config_model import ExperimentConfig
from src.providers.config.config_service import ConfigService
from src.providers.dataset.dataset_model import Dataset, NodePartition
from src.providers.dataset.services.adult_service import AdultService
from src.providers.dataset.services.partition_service import PartitionService
from src.providers.dataset.services.synthetic_service import SyntheticService
from src.providers.logger.logger_service import Logger
from src.providers.metrics.metrics_model import CentralizedOptimum
from src.providers.metrics.services.metrics_service import MetricsService, write_csv_atomic
from src.providers.metrics.services.oracle_service import OracleService
from src.providers.objective.objective_model import ObjectiveSpec
from src.providers.objective.objective_service import ObjectiveService
from src.providers.privacy.privacy_model import AuditReport, PrivacyBudget
from src.providers.privacy.privacy_service import PrivacyService
from src.providers.topology.topology_model import Graph
from src.providers.topology.topology_service import TopologyService

AGGREGATE_COLUMNS = [
    "epsilon",
    "l",
    "t",
    "seeds",
    "mean_total_risk",
    "std_total_risk",
    "mean_excess_risk",
    "std_excess_risk",
    "mean_feasibility",
    "std_feasibility",
    "mean_accuracy",
    "std_accuracy",
    "theoretical_bound",
    "max_dual_sum_norm",
]


@dataclass(frozen=True)
class Instance:
    """Everything a sweep shares across cells: network, data split, objective and optimum."""

    graph: Graph
    partitions: List[NodePartition]
    test: Dataset
    spec: ObjectiveSpec
    optimum: CentralizedOptimum
    beta: float


@dataclass(frozen=True)
class CellSummary:
    epsilon: float
    l: int
    seed: int
    total_risk: float
    excess_risk: float
    feasibility: float
    accuracy: float
    theoretical_bound: float
    max_dual_sum_norm: float
    run_csv: str
    audit: Optional[AuditReport]


def cell_name(epsilon: float, l: int, seed: int) -> str:
    return f"eps{epsilon:g}_l{l}_seed{seed}"


@Injectable()
class ExperimentJob:
    def __init__(
        self,
        logger: Logger,
        topology_service: TopologyService,
        adult_service: AdultService,
        synthetic_service: SyntheticService,
        partition_service: PartitionService,
        objective_service: ObjectiveService,
        privacy_service: PrivacyService,
        engine_service: AdmmEngineService,
        oracle_service: OracleService,
        metrics_service: MetricsService,
        checkpoint_service: CheckpointService,
    ):
        self.logger = logger
        self.topology_service = topology_service
        self.adult_service = adult_service
        self.synthetic_service = synthetic_service
        self.partition_service = partition_service
        self.objective_service = objective_service
        self.privacy_service = privacy_service
        self.engine_service = engine_service
        self.oracle_service = oracle_service
        self.metrics_service = metrics_service
        self.checkpoint_service = checkpoint_service

    @classmethod
    def standalone(cls) -> "ExperimentJob":
        """Wires the job by hand, for worker processes and tests that run without the container."""
        logger = Logger(ConfigService())
        objective = ObjectiveService()
        privacy = PrivacyService(logger)
        return cls(
            logger=logger,
            topology_service=TopologyService(logger),
            adult_service=AdultService(logger),
            synthetic_service=SyntheticService(logger),
            partition_service=PartitionService(logger),
            objective_service=objective,
            privacy_service=privacy,
            engine_service=AdmmEngineService(objective, privacy, logger),
            oracle_service=OracleService(objective, logger.config_service, logger),
            metrics_service=MetricsService(objective, logger),
            checkpoint_service=CheckpointService(logger),
        )

    def build_graph(self, cfg: ExperimentConfig) -> Graph:
        if cfg.topology == "complete":
            return self.topology_service.build_complete(cfg.n)
        if cfg.topology == "ring":
            return self.topology_service.build_ring(cfg.n)
        return self.topology_service.load_edge_list(cfg.edge_list_path, n=cfg.n)

    def load_dataset(self, cfg: ExperimentConfig) -> Dataset:
        if cfg.dataset == "adult":
            return self.adult_service.load(cfg.adult_path)
        if cfg.dataset == "cache":
            return self.adult_service.read_cache(cfg.cache_path)
        train_count = cfg.n * cfg.synthetic_samples_per_node
        test_count = int(round(train_count * cfg.test_fraction / (1.0 - cfg.test_fraction)))
        return self.synthetic_service.generate_synthetic(
            train_count + test_count,
            cfg.synthetic_dim,
            seed=cfg.data_seed,
            label_noise=cfg.synthetic_label_noise,
        )

    def prepare(self, cfg: ExperimentConfig) -> Instance:
        graph = self.build_graph(cfg)
        dataset = self.load_dataset(cfg)
        if cfg.dataset == "synthetic":
            test_size = len(dataset) - cfg.n * cfg.synthetic_samples_per_node
        else:
            test_size = cfg.test_fraction
        train, test = self.partition_service.split_train_test(dataset, test_size, cfg.data_seed)
        partitions = self.partition_service.partition_even(train, graph, cfg.data_seed)
        spec = self.objective_service.make_spec(cfg.lam, graph.node_count, cfg.D, cfg.c2)
        optimum = self.oracle_service.solve_cached(partitions, spec, cfg.oracle_tol)
        beta = cfg.beta if cfg.beta is not None else self.metrics_service.default_beta(cfg.rho, graph)
        self.logger.info(
            f"Instance ready: n={graph.node_count} d={train.dimension} train={len(train)} "
            f"test={len(test)} beta={beta:g} oracle objective={optimum.objective_value:.12g}"
        )
        return Instance(graph, partitions, test, spec, optimum, beta)

    def budget(self, cfg: ExperimentConfig, epsilon: float, l: int) -> PrivacyBudget:
        return self.privacy_service.make_budget(epsilon, cfg.delta, cfg.t, l, cfg.c0)

    def admm_config(self, cfg: ExperimentConfig, l: int) -> AdmmConfig:
        return AdmmConfig(
            rho=cfg.rho,
            t=cfg.t,
            l=l,
            noise_enabled=cfg.noise,
            projection_enabled=cfg.projection,
            minibatch_size=cfg.minibatch_size,
        )

    def run_once(
        self,
        cfg: ExperimentConfig,
        instance: Instance,
        epsilon: float,
        l: int,
        seed: int,
        resume: Optional[str] = None,
        stop_at: Optional[int] = None,
    ) -> RunResult:
        start = None
        if resume is not None:
            start = self.checkpoint_service.load_checkpoint(resume, instance.graph)
        recorder = self.metrics_service.recorder(
            instance.graph,
            instance.partitions,
            instance.spec,
            instance.optimum,
            instance.beta,
            instance.test,
            cfg.eval_mode,
        )
        return self.engine_service.run(
            instance.graph,
            instance.partitions,
            instance.spec,
            self.admm_config(cfg, l),
            self.budget(cfg, epsilon, l),
            seed,
            recorder=recorder,
            start=start,
            until=stop_at,
        )

    def run_cell(
        self,
        cfg: ExperimentConfig,
        instance: Instance,
        epsilon: float,
        l: int,
        seed: int,
        checkpoint: Optional[str] = None,
        resume: Optional[str] = None,
        stop_at: Optional[int] = None,
        write_audit: bool = True,
    ) -> CellSummary:
        """One sweep cell: run, audit, write run_<cell>.csv and the audit report.

        `stop_at` ends the run early and `checkpoint` saves the node states
        reached; a later call with `resume` continues from that file. Sweeps
        pass `write_audit=False` and write each (epsilon, l) report once.
        """
        name = cell_name(epsilon, l, seed)
        with self.logger.cell(f"eps={epsilon:g} l={l} seed={seed}"):
            self.logger.info(f"Cell {name} started")
            budget = self.budget(cfg, epsilon, l)
            result = self.run_once(cfg, instance, epsilon, l, seed, resume, stop_at)
            if checkpoint is not None:
                self.checkpoint_service.save_checkpoint(result.states, result.last_k, checkpoint)
            if not result.records:
                raise ProtocolError(f"cell {name} executed no iterations")
            audit = None
            if cfg.noise:
                audit = self.privacy_service.audit_total_budget(budget, result.steps_executed)
            else:
                self.logger.info(f"Cell {name} ran without noise, no privacy audit written")

            out = Path(cfg.output_dir)
            run_csv = out / f"run_{name}.csv"
            self.metrics_service.write_run_csv(
                result.records, run_csv, header_comment=self._header(cfg, epsilon, l, seed)
            )
            if audit is not None and write_audit:
                self.write_audit(audit, out, epsilon, l)

            final = result.records[-1]
            bound = self.metrics_service.theoretical_bound(
                instance.graph,
                instance.partitions,
                instance.spec,
                self.admm_config(cfg, l),
                budget,
                instance.beta,
            )
            self.logger.info(f"Cell {name} finished: {final}")
            return CellSummary(
                epsilon=epsilon,
                l=l,
                seed=seed,
                total_risk=final.total_risk,
                excess_risk=final.excess_risk,
                feasibility=final.feasibility,
                accuracy=final.accuracy,
                theoretical_bound=bound,
                max_dual_sum_norm=max(result.dual_sum_norms, default=0.0),
                run_csv=str(run_csv),
                audit=audit,
            )

    def run_sweep(self, cfg: ExperimentConfig, instance: Optional[Instance] = None) -> List[str]:
        """Runs every (epsilon, l, seed) cell and writes the per-cell files plus aggregate.csv."""
        instance = instance or self.prepare(cfg)
        cells = cfg.cells()
        self.logger.info(f"Sweep of {len(cells)} cells with {cfg.workers} worker(s)")

        summaries: List[CellSummary] = []
        if cfg.workers > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                futures = {
                    cell: pool.submit(_run_cell_in_worker, cfg, instance, *cell) for cell in cells
                }
                for cell, future in futures.items():
                    summaries.append(self._collect(cell, future.result))
        else:
            for cell in cells:
                summaries.append(
                    self._collect(
                        cell,
                        lambda cell=cell: self.run_cell(cfg, instance, *cell, write_audit=False),
                    )
                )

        # every seed of an (epsilon, l) pair executes the same planned steps
        audits = {}
        for summary in summaries:
            if summary.audit is not None:
                audits.setdefault((summary.epsilon, summary.l), summary.audit)
        for (epsilon, l), report in audits.items():
            self.write_audit(report, Path(cfg.output_dir), epsilon, l)

        aggregate = Path(cfg.output_dir) / "aggregate.csv"
        write_csv_atomic(
            self.aggregate(summaries, cfg.t),
            aggregate,
            header_comment=f"t={cfg.t} delta={cfg.delta} n={instance.graph.node_count} "
            f"rho={cfg.rho} lambda={cfg.lam} noise={cfg.noise}",
        )
        self.logger.info(f"Sweep finished, aggregate written to {aggregate}")
        return [s.run_csv for s in summaries] + [str(aggregate)]

    def write_audit(self, report: AuditReport, out: Path, epsilon: float, l: int):
        self.privacy_service.write_report(report, out / f"audit_eps{epsilon:g}_l{l}.txt")

    def _collect(self, cell, produce) -> CellSummary:
        try:
            return produce()
        except (DpAdmmError, OSError, ValueError, ArithmeticError) as e:
            name = cell_name(*cell)
            self.logger.error(f"Sweep cell {name} failed: {e!r}")
            raise SweepCellError(name, e) from e

    @staticmethod
    def aggregate(summaries: Sequence[CellSummary], t: int) -> pd.DataFrame:
        frame = pd.DataFrame(
            [
                {
                    "epsilon": s.epsilon,
                    "l": s.l,
                    "seed": s.seed,
                    "total_risk": s.total_risk,
                    "excess_risk": s.excess_risk,
                    "feasibility": s.feasibility,
                    "accuracy": s.accuracy,
                    "theoretical_bound": s.theoretical_bound,
                    "max_dual_sum_norm": s.max_dual_sum_norm,
                }
                for s in summaries
            ]
        )
        rows = []
        for (epsilon, l), group in frame.groupby(["epsilon", "l"], sort=True):
            row = {"epsilon": epsilon, "l": int(l), "t": t, "seeds": len(group)}
            for metric in ("total_risk", "excess_risk", "feasibility", "accuracy"):
                values = group[metric].to_numpy()
                row[f"mean_{metric}"] = float(np.mean(values))
                row[f"std_{metric}"] = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
            row["theoretical_bound"] = float(group["theoretical_bound"].iloc[0])
            row["max_dual_sum_norm"] = float(group["max_dual_sum_norm"].max())
            rows.append(row)
        return pd.DataFrame(rows, columns=AGGREGATE_COLUMNS)

    def oracle(self, cfg: ExperimentConfig) -> CentralizedOptimum:
        """Solves (or loads from cache) w* for the configured instance and writes oracle.csv."""
        instance = self.prepare(cfg)
        optimum = instance.optimum
        path = Path(cfg.output_dir) / "oracle.csv"
        write_csv_atomic(
            pd.DataFrame({"coordinate": np.arange(optimum.w_star.size), "w_star": optimum.w_star}),
            path,
            header_comment=f"objective={optimum.objective_value:.17g} "
            f"gradient_norm={optimum.gradient_norm:.3e} lambda={cfg.lam:g} n={cfg.n}",
        )
        self.logger.info(f"Oracle written to {path}")
        return optimum

    def audit(self, cfg: ExperimentConfig) -> List[AuditReport]:
        """Privacy reports for every (epsilon, l) pair of a planned sweep, without running it."""
        reports = []
        for epsilon in cfg.epsilon:
            for l in cfg.l:
                report = self.privacy_service.audit_total_budget(self.budget(cfg, epsilon, l))
                self.write_audit(report, Path(cfg.output_dir), epsilon, l)
                reports.append(report)
        return reports

    def preprocess(self, adult_path, cache_path) -> Dataset:
        dataset = self.adult_service.load(adult_path)
        self.adult_service.write_cache(dataset, cache_path)
        return dataset

    @staticmethod
    def _header(cfg: ExperimentConfig, epsilon: float, l: int, seed: int) -> str:
        return (
            f"t={cfg.t} l={l} epsilon={epsilon:g} delta={cfg.delta:g} seed={seed} n={cfg.n} "
            f"rho={cfg.rho:g} lambda={cfg.lam:g} D={cfg.D:g} noise={cfg.noise} eval={cfg.eval_mode}"
        )


def _run_cell_in_worker(
    cfg: ExperimentConfig, instance: Instance, epsilon: float, l: int, seed: int
) -> CellSummary:
    return ExperimentJob.standalone().run_cell(cfg, instance, epsilon, l, seed, write_audit=False)
