from functools import lru_cache

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", extra="ignore")

    app_name: str = "Mobile Jammer Secrecy Simulator"
    app_env: str = "dev"
    log_level: str = "INFO"
    log_format: str = "json"
    sweep_workers: int = 1
    default_output_dir: str = "out"

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, value: str) -> str:
        level = (value or "INFO").strip().upper()
        allowed = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        if level not in allowed:
            raise ValueError(f"log_level must be one of {sorted(allowed)}")
        return level

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, value: str) -> str:
        fmt = (value or "json").strip().lower()
        allowed = {"json", "text"}
        if fmt not in allowed:
            raise ValueError(f"log_format must be one of {sorted(allowed)}")
        return fmt

    @field_validator("sweep_workers")
    @classmethod
    def validate_sweep_workers(cls, value: int) -> int:
        return max(1, value)


@lru_cache
def get_settings() -> Settings:
    return Settings()
