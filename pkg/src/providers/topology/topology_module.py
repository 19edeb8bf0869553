from nest.core import Module

from .topology_service import TopologyService


@Module(providers=[TopologyService], exports=[TopologyService])
class TopologyModule:
    pass
