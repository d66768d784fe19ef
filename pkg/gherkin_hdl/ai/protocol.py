"""
Wire schema spoken with remote scenario-generation providers
"""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator


class ProviderKind(str, Enum):
    TEMPLATE = "Template"
    REMOTE = "Remote"


class GenerationMode(str, Enum):
    """How oracle mismatches in provider output are handled"""

    STRICT = "Strict"
    REPAIR = "Repair"


class GenerationRequest(BaseModel):
    """Request body POSTed to the provider endpoint"""

    prompt: str = Field(..., description="Rendered generation prompt")
    grammar: str = Field(..., description="Step grammar the feature must follow")
    count: int = Field(..., ge=1, description="Number of Examples rows requested")

    @field_validator("prompt")
    @classmethod
    def validate_prompt(cls, v):
        if not v or not v.strip():
            raise ValueError("Prompt cannot be empty")
        return v

    model_config = ConfigDict(
        frozen=True,
        extra="forbid",
        json_schema_extra={
            "example": {
                "prompt": "Create ADD scenario with A = B, 3 examples.",
                "grammar": "Given the operands are A = <lit> and B = <lit> ...",
                "count": 3,
            }
        },
    )


class GenerationResponse(BaseModel):
    """Response body returned by the provider endpoint"""

    feature: str = Field(..., description="Gherkin feature text")

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={"example": {"feature": "Feature: 16-bit ALU ADD operation\n..."}},
    )
