from nest.core import Module

from src.providers.metrics.services.metrics_service import MetricsService
from src.providers.metrics.services.oracle_service import OracleService


@Module(
    providers=[OracleService, MetricsService],
    exports=[OracleService, MetricsService],
)
class MetricsModule:
    pass
