from nest.core import Module

from src.providers.admm.services.checkpoint_service import CheckpointService
from src.providers.admm.services.engine_service import AdmmEngineService


@Module(
    providers=[AdmmEngineService, CheckpointService],
    exports=[AdmmEngineService, CheckpointService],
)
class AdmmModule:
    pass
