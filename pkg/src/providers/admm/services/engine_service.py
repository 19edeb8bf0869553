import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from nest.core import Injectable

from src.exceptions import ParameterError, PartitionError, ProtocolError, ShapeError
from src.providers.admm.admm_model import AdmmConfig, NodeState, RunResult
from src.providers.dataset.dataset_model import NodePartition
from src.providers.logger.logger_service import Logger
from src.providers.objective.objective_model import ObjectiveSpec
from src.providers.objective.objective_service import ObjectiveService
from src.providers.privacy.privacy_model import PrivacyBudget, SensitivityParams
from src.providers.privacy.privacy_service import PrivacyService

# (k, averaged outputs, last broadcasts) -> one metrics row
Recorder = Callable[[int, List[np.ndarray], List[np.ndarray]], object]


@Injectable()
class AdmmEngineService:
    """Synchronous multi-step noisy linearized ADMM over a node graph.

    Each outer iteration k runs l noisy closed-form primal steps per node,
    broadcasts the mean of the l fresh iterates, then updates the duals.
    """

    def __init__(
        self,
        objective_service: ObjectiveService,
        privacy_service: PrivacyService,
        logger: Logger,
    ):
        self.objective = objective_service
        self.privacy = privacy_service
        self.logger = logger

    def eta(
        self,
        k: int,
        r_plus_1: int,
        m_i: int,
        d: int,
        spec: ObjectiveSpec,
        budget: Optional[PrivacyBudget],
    ) -> float:
        """Learning-rate schedule; the noise term is dropped when `budget` is None."""
        if k < 1 or r_plus_1 < 1:
            raise ParameterError(f"eta needs k >= 1 and r+1 >= 1, got ({k}, {r_plus_1})")
        inner = (spec.c2 / spec.n) ** 2
        if budget is not None:
            inner += (
                d
                * budget.c0**2
                * spec.c1**2
                * budget.t
                * budget.l
                * 8.0
                * math.log(1.25 / budget.delta)
                / (budget.epsilon**2 * m_i**2)
            )
        return math.sqrt(2.0 * k * r_plus_1) / spec.D * math.sqrt(inner)

    def minibatch_gradient_variant(
        self,
        partition: NodePartition,
        batch_size: int,
        rng: np.random.Generator,
        w: np.ndarray,
        spec: ObjectiveSpec,
    ) -> np.ndarray:
        """Unbiased gradient from `batch_size` rows drawn with replacement."""
        if not 1 <= batch_size <= partition.size:
            raise ParameterError(
                f"batch size {batch_size} outside [1, {partition.size}] for node {partition.node_id}"
            )
        rows = rng.integers(0, partition.size, size=batch_size)
        gradient = self.objective.data_gradient(
            partition.features[rows], partition.labels[rows], w
        )
        return gradient + spec.node_regularizer * w

    def primal_inner_update(
        self,
        state: NodeState,
        k: int,
        r: int,
        cfg: AdmmConfig,
        budget: Optional[PrivacyBudget],
        partition: NodePartition,
        spec: ObjectiveSpec,
        rng: np.random.Generator,
    ) -> NodeState:
        """Produces w~^{k,r+1} from w~^{k,r} and appends it to the inner history."""
        if partition.dimension != state.dimension:
            raise ShapeError(
                f"node {state.node_id}: data d = {partition.dimension}, state d = {state.dimension}"
            )
        noise_budget = budget if cfg.noise_enabled else None
        eta = self.eta(k, r + 1, partition.size, state.dimension, spec, noise_budget)
        degree = len(state.neighbors)

        if cfg.minibatch_size is not None:
            gradient = self.minibatch_gradient_variant(
                partition, cfg.minibatch_size, rng, state.w_inner, spec
            )
        else:
            gradient = self.objective.local_gradient(partition, spec, state.w_inner)

        numerator = (
            -gradient
            + 2.0 * state.dual
            + cfg.rho * state.neighbor_sum()
            + cfg.rho * degree * state.w_prev_broadcast
            + eta * state.w_inner
        )
        w_next = numerator / (2.0 * cfg.rho * degree + eta)

        if noise_budget is not None:
            s = self.privacy.sensitivity(
                SensitivityParams(
                    c1=spec.c1, rho=cfg.rho, degree=degree, m_i=partition.size, eta=eta
                )
            )
            w_next = self.privacy.gaussian_perturb(w_next, s, noise_budget.sigma, rng)
        if cfg.projection_enabled:
            w_next = self.objective.project_to_domain(w_next, spec.D)

        state.w_inner = w_next
        state.inner_history.append(w_next)
        state.steps += 1
        return state

    def finish_outer_iteration(self, state: NodeState, l: int) -> np.ndarray:
        """Mean of the l fresh inner iterates; w_inner carries over as the next start point."""
        if len(state.inner_history) != l:
            raise ProtocolError(
                f"node {state.node_id} holds {len(state.inner_history)} inner iterates, expected {l}"
            )
        broadcast = np.mean(np.stack(state.inner_history), axis=0)
        state.inner_history = []
        return broadcast

    def dual_update(
        self,
        state: NodeState,
        own_broadcast: np.ndarray,
        neighbor_broadcasts: Dict[int, np.ndarray],
        rho: float,
    ) -> np.ndarray:
        missing = [j for j in state.neighbors if j not in neighbor_broadcasts]
        if missing:
            raise ProtocolError(f"node {state.node_id} is missing broadcasts from {missing}")
        disagreement = np.zeros_like(own_broadcast)
        for j in state.neighbors:
            disagreement = disagreement + (own_broadcast - neighbor_broadcasts[j])
        return state.dual - (rho / 2.0) * disagreement

    def initial_states(self, graph, d: int) -> List[NodeState]:
        return [NodeState.initial(i, graph.neighbors[i], d) for i in range(graph.node_count)]

    def run(
        self,
        graph,
        partitions: Sequence[NodePartition],
        spec: ObjectiveSpec,
        cfg: AdmmConfig,
        budget: Optional[PrivacyBudget],
        seed: int,
        recorder: Optional[Recorder] = None,
        start: Optional[Tuple[int, List[NodeState]]] = None,
        until: Optional[int] = None,
    ) -> RunResult:
        """
        Executes outer iterations start_k+1..until (default t) and returns the
        per-iteration records with the running-average outputs. `start` resumes
        from a checkpoint (k, states); fresh runs start from zero vectors.
        """
        if len(partitions) != graph.node_count:
            raise PartitionError(
                f"{len(partitions)} partitions for a {graph.node_count}-node graph"
            )
        dimensions = {p.dimension for p in partitions}
        if len(dimensions) != 1:
            raise ShapeError(f"partitions disagree on dimension: {sorted(dimensions)}")
        d = dimensions.pop()
        if cfg.noise_enabled and budget is None:
            raise ParameterError("noise is enabled but no privacy budget was given")
        if budget is not None and (budget.t, budget.l) != (cfg.t, cfg.l):
            raise ParameterError(
                f"budget planned for t={budget.t}, l={budget.l} but run uses t={cfg.t}, l={cfg.l}"
            )

        start_k, states = start if start is not None else (0, self.initial_states(graph, d))
        for state in states:
            state.check_dimensions()
        last_k = cfg.t if until is None else until
        if not start_k <= last_k <= cfg.t:
            raise ParameterError(f"cannot run k={start_k + 1}..{last_k} with t={cfg.t}")

        records = []
        dual_sum_norms = []
        self.logger.info(
            f"ADMM run: n={graph.node_count} d={d} t={cfg.t} l={cfg.l} rho={cfg.rho} "
            f"noise={'on' if cfg.noise_enabled else 'off'} from k={start_k + 1}"
        )
        for k in range(start_k + 1, last_k + 1):
            for state, partition in zip(states, partitions):
                for r in range(cfg.l):
                    state.accumulate_average(state.w_inner)
                    rng = self.privacy.noise_generator(seed, state.node_id, k, r)
                    self.primal_inner_update(state, k, r, cfg, budget, partition, spec, rng)

            broadcasts = {
                state.node_id: self.finish_outer_iteration(state, cfg.l) for state in states
            }
            for state in states:
                state.dual = self.dual_update(
                    state, broadcasts[state.node_id], broadcasts, cfg.rho
                )
                state.receive_broadcasts(broadcasts[state.node_id], broadcasts)

            dual_sum_norms.append(float(np.linalg.norm(np.sum([s.dual for s in states], axis=0))))
            if recorder is not None:
                record = recorder(
                    k,
                    [state.running_average for state in states],
                    [broadcasts[i] for i in range(graph.node_count)],
                )
                records.append(record)
                if self.logger.is_debug():
                    self.logger.debug(f"k={k} {record}")

        return RunResult(
            records=records,
            models=[state.running_average.copy() for state in states],
            broadcasts=[state.w_prev_broadcast.copy() for state in states],
            states=states,
            steps_executed=max((state.steps for state in states), default=0),
            dual_sum_norms=dual_sum_norms,
            last_k=last_k,
        )
