import os

import numpy as np
import pytest

from src.providers.admm.services.checkpoint_service import CheckpointService
from src.providers.admm.services.engine_service import AdmmEngineService
from src.providers.config.config_service import ConfigService
from src.providers.config.experiment_config_service import ExperimentConfigService
from src.providers.dataset.dataset_model import NodePartition
from src.providers.dataset.services.adult_service import AdultService
from src.providers.dataset.services.partition_service import PartitionService
from src.providers.dataset.services.synthetic_service import SyntheticService
from src.providers.logger.logger_service import Logger
from src.providers.metrics.services.metrics_service import MetricsService
from src.providers.metrics.services.oracle_service import OracleService
from src.providers.objective.objective_service import ObjectiveService
from src.providers.privacy.privacy_service import PrivacyService
from src.providers.topology.topology_service import TopologyService


@pytest.fixture(scope="session", autouse=True)
def test_environment(tmp_path_factory):
    root = tmp_path_factory.mktemp("env")
    os.environ["STAGE"] = "test"
    os.environ["LOG_FILE"] = str(root / "logs" / "dp_admm.log")
    os.environ["LOG_LEVEL"] = "INFO"
    os.environ["ORACLE_CACHE_DIR"] = str(root / "oracle")
    yield root


@pytest.fixture
def config_service():
    return ConfigService()


@pytest.fixture
def logger(config_service):
    return Logger(config_service)


@pytest.fixture
def topology_service(logger):
    return TopologyService(logger)


@pytest.fixture
def adult_service(logger):
    return AdultService(logger)


@pytest.fixture
def synthetic_service(logger):
    return SyntheticService(logger)


@pytest.fixture
def partition_service(logger):
    return PartitionService(logger)


@pytest.fixture
def objective_service():
    return ObjectiveService()


@pytest.fixture
def privacy_service(logger):
    return PrivacyService(logger)


@pytest.fixture
def engine_service(objective_service, privacy_service, logger):
    return AdmmEngineService(objective_service, privacy_service, logger)


@pytest.fixture
def checkpoint_service(logger):
    return CheckpointService(logger)


@pytest.fixture
def oracle_service(objective_service, config_service, logger):
    return OracleService(objective_service, config_service, logger)


@pytest.fixture
def metrics_service(objective_service, logger):
    return MetricsService(objective_service, logger)


@pytest.fixture
def experiment_config_service(logger):
    return ExperimentConfigService(logger)


@pytest.fixture
def small_instance(topology_service, synthetic_service, partition_service, objective_service):
    """Complete graph on 4 nodes, 40 synthetic samples in d = 3."""
    graph = topology_service.build_complete(4)
    dataset = synthetic_service.generate_synthetic(40, 3, seed=11, label_noise=0.1)
    partitions = partition_service.partition_even(dataset, graph, seed=11)
    spec = objective_service.make_spec(lam=0.01, n=graph.node_count, D=2.0)
    return graph, partitions, spec


def make_partition(features, labels, node_id=0) -> NodePartition:
    return NodePartition(
        node_id=node_id,
        features=np.atleast_2d(np.asarray(features, dtype=float)),
        labels=np.asarray(labels, dtype=np.int64),
    )
