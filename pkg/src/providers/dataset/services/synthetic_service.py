import numpy as np
from nest.core import Injectable

from src.exceptions import ParameterError
from src.providers.dataset.dataset_model import Dataset
from src.providers.dataset.services.adult_service import normalize_rows
from src.providers.logger.logger_service import Logger


@Injectable()
class SyntheticService:
    """Desk-scale stand-in for Adult: a random linear separator with optional label flips."""

    def __init__(self, logger: Logger):
        self.logger = logger

    def generate_synthetic(
        self, n_samples: int, d: int, seed: int, label_noise: float = 0.0
    ) -> Dataset:
        if n_samples < 1 or d < 1:
            raise ParameterError(
                f"synthetic data needs n_samples >= 1 and d >= 1, got ({n_samples}, {d})"
            )
        if not 0.0 <= label_noise <= 0.5:
            raise ParameterError(f"label_noise must lie in [0, 0.5], got {label_noise}")

        rng = np.random.default_rng(seed)
        separator = rng.standard_normal(d)
        features = normalize_rows(rng.normal(scale=1.0 / np.sqrt(d), size=(n_samples, d)))
        labels = np.where(features @ separator >= 0.0, 1, -1).astype(np.int64)
        if label_noise > 0.0:
            flips = rng.random(n_samples) < label_noise
            labels[flips] = -labels[flips]

        self.logger.debug(
            f"Generated {n_samples} synthetic samples, d = {d}, label noise {label_noise}"
        )
        return Dataset(features=features, labels=labels, separator=separator)
