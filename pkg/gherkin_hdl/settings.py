"""
Configuration for gherkin-hdl runs and the remote generation provider
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .ai.protocol import GenerationMode, ProviderKind
from .alu import DEFAULT_WIDTH, MAX_WIDTH, MIN_WIDTH
from .exceptions import ConfigurationError
from .prng import MASK64


@dataclass
class ProviderSettings:
    """Remote provider settings; the only values read from the environment"""

    ENDPOINT_VAR = "HWBDD_LLM_ENDPOINT"
    KEY_VAR = "HWBDD_LLM_KEY"
    TIMEOUT_VAR = "HWBDD_LLM_TIMEOUT"

    endpoint: Optional[str] = None
    api_key: Optional[str] = None
    timeout: float = 30.0

    @classmethod
    def from_env(cls, dotenv_path: Optional[Path] = None) -> "ProviderSettings":
        # Load environment variables from .env (if present) without overriding real ones
        try:
            load_dotenv(dotenv_path=dotenv_path)
        except Exception:
            pass
        raw_timeout = os.getenv(cls.TIMEOUT_VAR) or "30"
        try:
            timeout = float(raw_timeout)
        except ValueError:
            raise ConfigurationError(f"{cls.TIMEOUT_VAR} must be a number of seconds, got {raw_timeout!r}") from None
        if not timeout > 0:
            raise ConfigurationError(f"{cls.TIMEOUT_VAR} must be positive, got {raw_timeout!r}")
        return cls(
            endpoint=os.getenv(cls.ENDPOINT_VAR) or None,
            api_key=os.getenv(cls.KEY_VAR) or None,
            timeout=timeout,
        )


class CliConfig(BaseModel):
    """Validated options shared by the CLI commands"""

    width: int = Field(DEFAULT_WIDTH, ge=MIN_WIDTH, le=MAX_WIDTH, description="ALU word width in bits")
    seed: int = Field(0, ge=0, le=MASK64, description="Seed of the example generator")
    mode: GenerationMode = Field(GenerationMode.STRICT, description="Handling of oracle mismatches")
    provider: ProviderKind = Field(ProviderKind.TEMPLATE, description="Scenario generation backend")
    input_path: Optional[Path] = Field(None, description="Feature file to read")
    output_path: Optional[Path] = Field(None, description="File or directory to write")
    responses_dir: Optional[Path] = Field(None, description="Canned provider responses (offline stub)")
    workers: int = Field(1, ge=1, description="Threads used to evaluate cases")

    model_config = ConfigDict(frozen=True, extra="forbid")

    @field_validator("output_path")
    @classmethod
    def validate_output_path(cls, v):
        if v is None:
            return v
        parent = v if v.is_dir() else v.parent
        if parent.exists() and not os.access(parent, os.W_OK):
            raise ValueError(f"output location {parent} is not writable")
        return v
