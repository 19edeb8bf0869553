from nest.core import Module

from .config_service import ConfigService
from .experiment_config_service import ExperimentConfigService


@Module(
    providers=[ConfigService, ExperimentConfigService],
    exports=[ConfigService, ExperimentConfigService],
)
class ConfigModule: ...
