"""
Generation providers used by the scenario forge
"""

from .protocol import GenerationMode, GenerationRequest, GenerationResponse, ProviderKind
from .providers import GenerationProvider, RemoteProvider, StubProvider

__all__ = [
    "GenerationMode",
    "GenerationProvider",
    "GenerationRequest",
    "GenerationResponse",
    "ProviderKind",
    "RemoteProvider",
    "StubProvider",
]
