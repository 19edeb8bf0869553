from nest.core import Module

from src.providers.dataset.services.adult_service import AdultService
from src.providers.dataset.services.partition_service import PartitionService
from src.providers.dataset.services.synthetic_service import SyntheticService


@Module(
    providers=[AdultService, SyntheticService, PartitionService],
    exports=[AdultService, SyntheticService, PartitionService],
)
class DatasetModule:
    pass
