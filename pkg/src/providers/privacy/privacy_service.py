import math
from typing import Optional

import numpy as np
from nest.core import Injectable

from src.atomic_io import atomic_path
from src.exceptions import BudgetExceededError, ParameterError
from src.providers.logger.logger_service import Logger
from src.providers.privacy.privacy_model import AuditReport, PrivacyBudget, SensitivityParams

AUDIT_TOLERANCE = 1e-9


@Injectable()
class PrivacyService:
    """Gaussian-mechanism calibration and sqrt(t)-composition accounting."""

    def __init__(self, logger: Logger):
        self.logger = logger

    def default_c0(self, delta: float) -> float:
        """sqrt(ln(1/delta) / ln(1.25/delta)), always below 1."""
        self._check_delta(delta)
        return math.sqrt(math.log(1.0 / delta) / math.log(1.25 / delta))

    def sensitivity(self, p: SensitivityParams) -> float:
        return 2.0 * p.c1 / ((2.0 * p.rho * p.degree + p.eta) * p.m_i)

    def noise_multiplier(
        self, epsilon: float, delta: float, t: int, l: int, c0: float
    ) -> float:
        if not epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {epsilon}")
        self._check_delta(delta)
        if t < 1 or l < 1:
            raise ParameterError(f"t and l must be >= 1, got t={t}, l={l}")
        if not c0 > 0:
            raise ParameterError(f"c0 must be positive, got {c0}")
        return c0 * math.sqrt(t * l * 2.0 * math.log(1.25 / delta)) / epsilon

    def make_budget(
        self, epsilon: float, delta: float, t: int, l: int, c0: Optional[float] = None
    ) -> PrivacyBudget:
        c0 = self.default_c0(delta) if c0 is None else c0
        sigma = self.noise_multiplier(epsilon, delta, t, l, c0)
        return PrivacyBudget(epsilon=epsilon, delta=delta, c0=c0, t=t, l=l, sigma=sigma)

    def noise_generator(self, seed: int, node: int, k: int, r: int) -> np.random.Generator:
        """The disjoint random substream owned by update (node, k, r) of a run seeded with `seed`."""
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(node, k, r)))
        )

    def gaussian_perturb(
        self, w: np.ndarray, s: float, sigma: float, rng: np.random.Generator
    ) -> np.ndarray:
        scale = s * sigma
        if scale == 0.0:
            return w.copy()
        return w + rng.normal(loc=0.0, scale=scale, size=w.shape)

    def composed_epsilon(self, per_step_epsilon: float, steps: int, c0: float) -> float:
        return c0 * math.sqrt(steps) * per_step_epsilon

    def per_step_epsilon(self, budget: PrivacyBudget) -> float:
        return budget.epsilon / (budget.c0 * math.sqrt(budget.steps))

    def audit_total_budget(
        self, budget: PrivacyBudget, steps_executed: Optional[int] = None
    ) -> AuditReport:
        try:
            return self._audit(budget, steps_executed)
        except BudgetExceededError as e:
            self.logger.error(
                f"Privacy audit failed for epsilon={budget.epsilon:g} l={budget.l}: {e}"
            )
            raise

    def _audit(self, budget: PrivacyBudget, steps_executed: Optional[int]) -> AuditReport:
        steps = budget.steps if steps_executed is None else steps_executed
        if steps > budget.steps:
            raise BudgetExceededError(
                f"{steps} noisy updates executed, budget covers t*l = {budget.steps}"
            )
        required_sigma = self.noise_multiplier(
            budget.epsilon, budget.delta, budget.t, budget.l, budget.c0
        )
        if budget.sigma < required_sigma * (1.0 - 1e-12):
            raise BudgetExceededError(
                f"sigma {budget.sigma} is below the calibrated {required_sigma}"
            )

        per_step = self.per_step_epsilon(budget)
        composed = self.composed_epsilon(per_step, steps, budget.c0)
        if composed > budget.epsilon + AUDIT_TOLERANCE:
            raise BudgetExceededError(
                f"composed epsilon {composed} exceeds budget {budget.epsilon}"
            )

        report = AuditReport(
            epsilon=budget.epsilon,
            delta=budget.delta,
            per_step_epsilon=per_step,
            composed_epsilon=composed,
            sigma=budget.sigma,
            c0=budget.c0,
            t=budget.t,
            l=budget.l,
            steps_executed=steps,
            per_step_epsilon_ge_1=per_step >= 1.0,
            slack=budget.epsilon - composed,
        )
        if report.per_step_epsilon_ge_1:
            self.logger.warning(
                f"per-step epsilon {per_step:.4g} >= 1: the Gaussian-mechanism calibration "
                "is applied outside its usual range"
            )
        if steps < budget.steps:
            self.logger.info(
                f"run stopped after {steps}/{budget.steps} updates, epsilon slack {report.slack:.4g}"
            )
        return report

    def write_report(self, report: AuditReport, path):
        with atomic_path(path) as tmp:
            tmp.write_text(report.to_text())

    @staticmethod
    def _check_delta(delta: float):
        if not 0.0 < delta < 1.0:
            raise ParameterError(f"delta must lie in (0, 1), got {delta}")
