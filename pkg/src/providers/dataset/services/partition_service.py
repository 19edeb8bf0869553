from typing import List, Tuple, Union

import numpy as np
from nest.core import Injectable
from sklearn.model_selection import train_test_split

from src.exceptions import PartitionError
from src.providers.dataset.dataset_model import Dataset, NodePartition
from src.providers.logger.logger_service import Logger
from src.providers.topology.topology_model import Graph


@Injectable()
class PartitionService:
    def __init__(self, logger: Logger):
        self.logger = logger

    def split_train_test(
        self, dataset: Dataset, test_size: Union[float, int], seed: int
    ) -> Tuple[Dataset, Dataset]:
        """Seeded train/test split; `test_size` is a fraction or a row count, zero keeps everything."""
        if test_size <= 0:
            empty = Dataset(
                features=np.zeros((0, dataset.dimension)),
                labels=np.zeros(0, dtype=np.int64),
            )
            return dataset, empty
        train_idx, test_idx = train_test_split(
            np.arange(len(dataset)), test_size=test_size, random_state=seed
        )
        return dataset.subset(np.sort(train_idx)), dataset.subset(np.sort(test_idx))

    def partition_even(self, dataset: Dataset, g: Graph, seed: int) -> List[NodePartition]:
        """Shuffles by `seed`, then cuts n contiguous blocks whose sizes differ by at most one."""
        n = g.node_count
        if len(dataset) < n:
            raise PartitionError(f"{len(dataset)} samples cannot cover {n} nodes")

        order = np.random.default_rng(seed).permutation(len(dataset))
        blocks = np.array_split(order, n)
        partitions = [
            NodePartition(
                node_id=node,
                features=dataset.features[block],
                labels=dataset.labels[block],
            )
            for node, block in enumerate(blocks)
        ]
        self.logger.debug(
            f"Partitioned {len(dataset)} samples over {n} nodes "
            f"(sizes {partitions[-1].size}..{partitions[0].size})"
        )
        return partitions
