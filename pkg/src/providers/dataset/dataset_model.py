from dataclasses import dataclass, field
from typing import Optional

import numpy as np

ADULT_COLUMNS = [
    "age",
    "workclass",
    "fnlwgt",
    "education",
    "education-num",
    "marital-status",
    "occupation",
    "relationship",
    "race",
    "sex",
    "capital-gain",
    "capital-loss",
    "hours-per-week",
    "native-country",
    "income",
]
ADULT_CONTINUOUS = [
    "age",
    "fnlwgt",
    "education-num",
    "capital-gain",
    "capital-loss",
    "hours-per-week",
]
ADULT_CATEGORICAL = [
    "workclass",
    "education",
    "marital-status",
    "occupation",
    "relationship",
    "race",
    "sex",
    "native-country",
]
ADULT_TARGET_DIMENSION = 104
ADULT_MISSING = "?"


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    label: int


@dataclass(frozen=True)
class Dataset:
    """Row-stacked samples: features is (m, d), labels is (m,) with entries in {+1, -1}."""

    features: np.ndarray
    labels: np.ndarray
    separator: Optional[np.ndarray] = field(default=None, compare=False)

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices) -> "Dataset":
        return Dataset(features=self.features[indices], labels=self.labels[indices])


@dataclass(frozen=True)
class NodePartition:
    node_id: int
    features: np.ndarray
    labels: np.ndarray

    @property
    def size(self) -> int:
        return int(self.features.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.features.shape[1])
