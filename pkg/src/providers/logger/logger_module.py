from nest.core import Module

from src.providers.logger.logger_service import Logger


@Module(providers=[Logger], exports=[Logger])
class LoggerModule:
    pass
