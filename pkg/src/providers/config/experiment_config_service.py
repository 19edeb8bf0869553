from pathlib import Path
from typing import Dict, Optional

from nest.core import Injectable
from pydantic import ValidationError

from src.exceptions import ConfigError
from src.model_compat import model_dump, model_fields, model_replace
from src.providers.config.config_model import KEY_ALIASES, LIST_KEYS, ExperimentConfig
from src.providers.logger.logger_service import Logger


@Injectable()
class ExperimentConfigService:
    """Reads the flat `key = value` experiment files."""

    def __init__(self, logger: Logger):
        self.logger = logger

    def parse_config(self, path) -> ExperimentConfig:
        path = Path(path)
        try:
            if not path.is_file():
                raise ConfigError("config", f"file not found: {path}")
            raw = self._read_pairs(path.read_text())
            return self.from_mapping(raw, source=str(path))
        except ConfigError as e:
            self.logger.error(f"Rejected experiment file {path}: {e}")
            raise

    def from_mapping(self, raw: Dict[str, str], source: str = "<mapping>") -> ExperimentConfig:
        fields = model_fields(ExperimentConfig)
        values = {}
        for key, value in raw.items():
            field = KEY_ALIASES.get(key, key)
            if field not in fields:
                raise ConfigError(key, "unknown key")
            if isinstance(value, str) and field in LIST_KEYS:
                value = [item.strip() for item in value.split(",") if item.strip()]
            values[field] = value

        try:
            cfg = ExperimentConfig(**values)
        except ValidationError as e:
            error = e.errors()[0]
            field = str(error["loc"][0])
            key = {v: k for k, v in KEY_ALIASES.items()}.get(field, field)
            raise ConfigError(key, error["msg"]) from e

        self._check_consistency(cfg)

        for field in fields:
            if field not in values:
                self.logger.info(f"config default {field} = {getattr(cfg, field)!r}")
        self.logger.info(f"config loaded from {source}: {model_dump(cfg)}")
        return cfg

    def with_overrides(
        self,
        cfg: ExperimentConfig,
        output_dir: Optional[str] = None,
        workers: Optional[int] = None,
        seed_offset: int = 0,
    ) -> ExperimentConfig:
        updates = {}
        if output_dir is not None:
            updates["output_dir"] = output_dir
        if workers is not None:
            if workers < 1:
                raise ConfigError("workers", "must be >= 1")
            updates["workers"] = workers
        if seed_offset:
            updates["seeds"] = [seed + seed_offset for seed in cfg.seeds]
            if any(seed < 0 for seed in updates["seeds"]):
                raise ConfigError("seed-offset", "shifted seeds must be non-negative")
        return model_replace(cfg, **updates) if updates else cfg

    @staticmethod
    def _read_pairs(text: str) -> Dict[str, str]:
        pairs = {}
        for line_number, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(line, f"line {line_number} is not a 'key = value' pair")
            key, value = (part.strip() for part in line.split("=", 1))
            if key in pairs:
                raise ConfigError(key, f"duplicate key on line {line_number}")
            pairs[key] = value
        return pairs

    @staticmethod
    def _check_consistency(cfg: ExperimentConfig):
        if not cfg.seeds:
            raise ConfigError("seeds", "at least one seed is required")
        if any(seed < 0 for seed in cfg.seeds):
            raise ConfigError("seeds", "seeds must be non-negative")
        if not cfg.epsilon:
            raise ConfigError("epsilon", "at least one epsilon is required")
        if not cfg.l:
            raise ConfigError("l", "at least one l is required")
        if cfg.dataset == "adult" and not cfg.adult_path:
            raise ConfigError("adult_path", "required when dataset = adult")
        if cfg.dataset == "cache" and not cfg.cache_path:
            raise ConfigError("cache_path", "required when dataset = cache")
        if cfg.topology == "edges" and not cfg.edge_list_path:
            raise ConfigError("edge_list_path", "required when topology = edges")
        if cfg.topology == "ring" and cfg.n < 3:
            raise ConfigError("n", "a ring needs at least 3 nodes")
