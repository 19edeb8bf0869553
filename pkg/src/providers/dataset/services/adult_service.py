from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from nest.core import Injectable
from sklearn.preprocessing import MaxAbsScaler, OneHotEncoder

from src.atomic_io import atomic_path
from src.exceptions import DatasetParseError
from src.providers.dataset.dataset_model import (
    ADULT_CATEGORICAL,
    ADULT_COLUMNS,
    ADULT_CONTINUOUS,
    ADULT_MISSING,
    ADULT_TARGET_DIMENSION,
    Dataset,
)
from src.providers.logger.logger_service import Logger


def normalize_rows(features: np.ndarray) -> np.ndarray:
    """Scale each row by max(1, ||row||) so every row lies in the unit ball."""
    norms = np.linalg.norm(features, axis=1, keepdims=True)
    return features / np.maximum(norms, 1.0)


@Injectable()
class AdultService:
    """UCI Adult ingestion: drop missing rows, one-hot, column max scaling, row scaling."""

    FILES = ("adult.data", "adult.test")

    def __init__(self, logger: Logger):
        self.logger = logger

    def read_raw(self, path) -> Tuple[List[List[str]], List[int]]:
        """
        Reads adult.data and adult.test from a directory (or a single file) and
        returns the merged raw rows plus their source line numbers.
        """
        path = Path(path)
        files = [path / name for name in self.FILES] if path.is_dir() else [path]
        records, line_numbers = [], []
        for file in files:
            if not file.exists():
                self.logger.warning(f"Adult file {file} not found, skipping")
                continue
            for line_number, line in enumerate(file.read_text().splitlines(), start=1):
                line = line.strip()
                # adult.test opens with a "|1x3 Cross validator" banner
                if not line or line.startswith("|"):
                    continue
                records.append(line.split(","))
                line_numbers.append(line_number)
        self.logger.info(f"Read {len(records)} raw Adult rows from {path}")
        return records, line_numbers

    def preprocess_adult(
        self,
        raw_records: Sequence[Sequence[str]],
        line_numbers: Optional[Sequence[int]] = None,
    ) -> Tuple[Dataset, int]:
        if line_numbers is None:
            line_numbers = range(1, len(raw_records) + 1)
        for record, line_number in zip(raw_records, line_numbers):
            if len(record) != len(ADULT_COLUMNS):
                self.logger.error(f"Adult line {line_number} has {len(record)} fields")
                raise DatasetParseError(
                    f"expected {len(ADULT_COLUMNS)} fields, got {len(record)}",
                    line_number=line_number,
                )

        frame = pd.DataFrame(
            [[field.strip() for field in record] for record in raw_records],
            columns=ADULT_COLUMNS,
        )
        frame["line"] = list(line_numbers)
        missing = (frame[ADULT_COLUMNS] == ADULT_MISSING).any(axis=1)
        frame = frame[~missing].reset_index(drop=True)
        self.logger.info(
            f"Dropped {int(missing.sum())} Adult rows with missing values, {len(frame)} remain"
        )

        labels = self._labels(frame)
        continuous = self._continuous(frame)

        if len(frame):
            encoder = OneHotEncoder(sparse_output=False, handle_unknown="ignore")
            categorical = encoder.fit_transform(frame[ADULT_CATEGORICAL])
        else:
            categorical = np.zeros((0, 0))
        features = np.hstack([continuous, categorical]).astype(float)

        if len(frame):
            features = MaxAbsScaler().fit_transform(features)
        features = normalize_rows(features)

        dimension = features.shape[1]
        if dimension != ADULT_TARGET_DIMENSION:
            self.logger.warning(
                f"Adult encoding produced d = {dimension}, expected {ADULT_TARGET_DIMENSION}"
            )
        return Dataset(features=features, labels=labels), dimension

    def load(self, path) -> Dataset:
        records, line_numbers = self.read_raw(path)
        dataset, _ = self.preprocess_adult(records, line_numbers)
        return dataset

    @staticmethod
    def _labels(frame: pd.DataFrame) -> np.ndarray:
        income = frame["income"].str.rstrip(".")
        labels = income.map({">50K": 1, "<=50K": -1})
        unknown = labels.isna()
        if unknown.any():
            row = frame[unknown].iloc[0]
            raise DatasetParseError(
                f"unknown income label {row['income']!r}", line_number=int(row["line"])
            )
        return labels.to_numpy(dtype=np.int64)

    @staticmethod
    def _continuous(frame: pd.DataFrame) -> np.ndarray:
        columns = []
        for column in ADULT_CONTINUOUS:
            values = pd.to_numeric(frame[column], errors="coerce")
            bad = values.isna()
            if bad.any():
                row = frame[bad].iloc[0]
                raise DatasetParseError(
                    f"non-numeric {column} value {row[column]!r}",
                    line_number=int(row["line"]),
                )
            columns.append(values.to_numpy(dtype=float))
        return np.column_stack(columns) if columns else np.zeros((len(frame), 0))

    def write_cache(self, dataset: Dataset, path):
        """Header "d=<int> n=<int>", then one "label f1 ... fd" line per sample."""
        rows = np.column_stack([dataset.labels.astype(float), dataset.features])
        with atomic_path(path) as tmp:
            np.savetxt(
                tmp,
                rows,
                fmt="%.17g",
                header=f"d={dataset.dimension} n={len(dataset)}",
                comments="",
            )
        self.logger.info(f"Wrote {len(dataset)} samples (d = {dataset.dimension}) to {path}")

    def read_cache(self, path) -> Dataset:
        path = Path(path)
        try:
            with path.open() as handle:
                header = handle.readline().split()
        except OSError as e:
            self.logger.error(f"Cannot read dataset cache {path}: {e}")
            raise DatasetParseError(f"cannot read cache {path}: {e.strerror or e}") from e
        try:
            meta = dict(item.split("=", 1) for item in header)
            dimension, count = int(meta["d"]), int(meta["n"])
        except (KeyError, ValueError):
            self.logger.error(f"Dataset cache {path} has a bad header {header!r}")
            raise DatasetParseError(f"bad cache header {header!r}", line_number=1)

        try:
            rows = np.loadtxt(path, skiprows=1, ndmin=2)
        except ValueError as e:
            self.logger.error(f"Dataset cache {path} has a malformed body: {e}")
            raise DatasetParseError(f"malformed cache body in {path}: {e}") from e
        if rows.shape != (count, dimension + 1):
            self.logger.error(f"Dataset cache {path} does not match its header")
            raise DatasetParseError(
                f"cache body has shape {rows.shape}, header promises ({count}, {dimension + 1})"
            )
        return Dataset(features=rows[:, 1:], labels=rows[:, 0].astype(np.int64))
