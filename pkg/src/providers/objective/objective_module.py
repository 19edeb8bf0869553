from nest.core import Module

from .objective_service import ObjectiveService


@Module(providers=[ObjectiveService], exports=[ObjectiveService])
class ObjectiveModule:
    pass
