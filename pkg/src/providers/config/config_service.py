import os
from typing import Any, Dict

from dotenv import load_dotenv
from nest.core import Injectable
from pydantic import BaseModel, Field

from src.model_compat import model_dump


def _env(key: str, default: Any):
    return Field(default_factory=lambda: os.environ.get(key, default))


class AppContext(BaseModel):
    STAGE: str = _env("STAGE", "local")
    APP_NAME: str = _env("APP_NAME", "dp-admm")
    APP_VERSION: str = _env("APP_VERSION", "0.1.0")
    APP_DESCRIPTION: str = _env(
        "APP_DESCRIPTION",
        "Differentially private multi-step ADMM over a simulated node network",
    )


class DynamicConfig:
    def __init__(self, app_context: AppContext):
        self.app_context = app_context
        self._environment_map: Dict[str, Any] = {}
        self.load_configs()

    def load_configs(self):
        if self.app_context.STAGE == "local":
            load_dotenv()
        for key, value in os.environ.items():
            self._environment_map[key] = value
        for key, value in model_dump(self.app_context).items():
            self._environment_map[key] = value

    def get(self, key: str, default=None):
        return self._environment_map.get(key, default)


@Injectable()
class ConfigService:
    """Process-level settings: logging targets, cache directories, app identity."""

    def __init__(self):
        self._app_context = AppContext()
        self._config = DynamicConfig(app_context=self._app_context)

    @property
    def app_context(self) -> AppContext:
        return self._app_context

    @property
    def config(self) -> DynamicConfig:
        return self._config

    def get(self, key: str, default_value=None):
        return self.config.get(key, default_value)
