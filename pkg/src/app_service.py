from nest.core import Injectable

from src.providers.config.config_service import ConfigService


@Injectable()
class AppService:
    def __init__(self, config_service: ConfigService):
        self.app_context = config_service.app_context

    def get_app_info(self):
        return {
            "app_name": self.app_context.APP_NAME,
            "app_version": self.app_context.APP_VERSION,
            "description": self.app_context.APP_DESCRIPTION,
        }
