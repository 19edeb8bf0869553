from functools import lru_cache

from nest.core import Module, PyNestFactory

from src.app_service import AppService
from src.jobs.experiment_job import ExperimentJob
from src.providers.admm.admm_module import AdmmModule
from src.providers.config.config_module import ConfigModule
from src.providers.config.config_service import AppContext
from src.providers.config.experiment_config_service import ExperimentConfigService
from src.providers.dataset.dataset_module import DatasetModule
from src.providers.logger.logger_module import LoggerModule
from src.providers.metrics.metrics_module import MetricsModule
from src.providers.objective.objective_module import ObjectiveModule
from src.providers.privacy.privacy_module import PrivacyModule
from src.providers.topology.topology_module import TopologyModule


@Module(
    imports=[
        ConfigModule,
        LoggerModule,
        TopologyModule,
        DatasetModule,
        ObjectiveModule,
        PrivacyModule,
        AdmmModule,
        MetricsModule,
    ],
    providers=[AppService, ExperimentJob],
)
class AppModule:
    pass


@lru_cache(maxsize=None)
def create_app():
    context = AppContext()
    return PyNestFactory.create(
        AppModule,
        description=context.APP_DESCRIPTION,
        title=context.APP_NAME,
        version=context.APP_VERSION,
    )


def get_experiment_job() -> ExperimentJob:
    return create_app().container.get_instance(ExperimentJob)


def get_experiment_config_service() -> ExperimentConfigService:
    return create_app().container.get_instance(ExperimentConfigService)


def get_app_service() -> AppService:
    return create_app().container.get_instance(AppService)
