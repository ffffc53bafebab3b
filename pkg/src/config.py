import yaml
import os
from pathlib import Path
from typing import Dict, Any, Optional
from dataclasses import dataclass
from dotenv import load_dotenv


DEFAULT_CONFIG_PATH = str(Path(__file__).resolve().parent.parent / "config" / "config.yaml")
CONFIG_ENV_VAR = "DIVERSE_MATCHING_CONFIG"
LOG_LEVEL_ENV_VAR = "DIVERSE_MATCHING_LOG_LEVEL"


@dataclass
class DefaultsConfig:
    k: int = 10
    restarts: int = 5
    seed: int = 0
    limit: int = 100_000


@dataclass
class SamplingConfig:
    min_burn_in: int = 10_000
    min_thinning: int = 50
    budget_factor: int = 1000
    chains: int = 1
    debug: bool = False


@dataclass
class DiversityConfig:
    local_search_passes: int = 50
    injection_samples: int = 20
    enumeration_fallback_limit: int = 10_000


@dataclass
class AuditConfig:
    trials: int = 20_000


@dataclass
class Settings:
    verbose_logging: bool = False
    log_format: str = "%(asctime)s - %(levelname)s - %(message)s"
    log_level: Optional[str] = None


class ConfigManager:
    def __init__(self, config_path: Optional[str] = None):
        load_dotenv()
        self.config_path = config_path or os.getenv(CONFIG_ENV_VAR) or DEFAULT_CONFIG_PATH
        self._config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        with open(self.config_path, "r", encoding="utf-8") as file:
            config = yaml.safe_load(file) or {}
        if not isinstance(config, dict):
            raise ValueError(f"{self.config_path}: top level must be a mapping, got {type(config).__name__}")
        return config

    def _section(self, name: str) -> Dict[str, Any]:
        return self._config.get(name) or {}

    def get_defaults(self) -> DefaultsConfig:
        return DefaultsConfig(**self._section("defaults"))

    def get_sampling_config(self) -> SamplingConfig:
        return SamplingConfig(**self._section("sampling"))

    def get_diversity_config(self) -> DiversityConfig:
        return DiversityConfig(**self._section("diversity"))

    def get_audit_config(self) -> AuditConfig:
        return AuditConfig(**self._section("audit"))

    def get_settings(self) -> Settings:
        settings = Settings(**self._section("settings"))
        env_level = os.getenv(LOG_LEVEL_ENV_VAR)
        if env_level:
            settings.log_level = env_level.upper()
        return settings
