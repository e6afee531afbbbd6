from pathlib import Path
from typing import Literal

from pydantic import Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

DEFAULT_PRESETS_PATH = Path(__file__).parent.parent / "resources" / "presets.yaml"


class Settings(BaseSettings):
    """
    Tool settings are loaded from the following sources, in order of precedence:
    1. Environment variables (prefixed with QUICKSIM_, except the OTEL ones).
    2. .env and .env.local files.
    3. Default values defined in this class.
    """

    PROJECT_NAME: str = "quicksim"
    VERSION: str = "0.1.0"
    ENVIRONMENT: str = "development"
    LOG_LEVEL: str = "WARNING"

    # OpenTelemetry settings
    OTEL_ENABLED: bool = Field(False, alias="OTEL_ENABLED")
    OTEL_PROVIDER: Literal["console", "azure"] = Field("console", alias="OTEL_PROVIDER")
    APPLICATIONINSIGHTS_CONNECTION_STRING: str | None = Field(
        None, alias="APPLICATIONINSIGHTS_CONNECTION_STRING"
    )

    DEFAULT_GROUP_SIZE: int = Field(128, ge=16)
    DEFAULT_SEED: int = Field(0, ge=0)
    CONFLICT_METRIC: Literal["bank_sum", "wavefront"] = "bank_sum"
    PRESETS_PATH: Path = DEFAULT_PRESETS_PATH

    @field_validator("LOG_LEVEL")
    @classmethod
    def check_log_level(cls, value: str) -> str:
        level = value.upper()
        if level not in ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG", "NOTSET"):
            raise ValueError(f"unknown log level {value!r}")
        return level

    @model_validator(mode="after")
    def check_azure_conn_str(self) -> "Settings":
        """
        Validate if OTEL_ENABLED is True and provider is azure -
        the Azure conn string must be set
        """
        if self.OTEL_ENABLED and self.OTEL_PROVIDER == "azure":
            if not self.APPLICATIONINSIGHTS_CONNECTION_STRING:
                raise ValueError(
                    "APPLICATIONINSIGHTS_CONNECTION_STRING must be set when OTEL_ENABLED is true and OTEL_PROVIDER is 'azure'"
                )
        return self

    model_config = SettingsConfigDict(
        env_prefix="QUICKSIM_",
        env_file=[".env", ".env.local"],
        env_file_encoding="utf-8",
        populate_by_name=True,
        extra="ignore",  # Ignore extra fields from sources
    )
