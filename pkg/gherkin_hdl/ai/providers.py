"""
Generation provider classes: remote HTTP endpoint and offline stub
"""

import hashlib
import json
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import TYPE_CHECKING, Dict, Optional

import httpx
from pydantic import ValidationError

from ..exceptions import ProviderError
from .protocol import GenerationRequest, GenerationResponse, ProviderKind

if TYPE_CHECKING:
    from ..settings import ProviderSettings

logger = logging.getLogger(__name__)


class GenerationProvider(ABC):
    """Abstract base class for anything that turns a generation request into feature text"""

    kind: ProviderKind = ProviderKind.REMOTE

    def __init__(self, name: str):
        self.name = name
        self.request_count = 0
        self.error_count = 0

    @abstractmethod
    def complete(self, request: GenerationRequest) -> GenerationResponse:
        """Answer one request

        Raises:
            ProviderError: If the provider cannot produce a response
        """

    def generate(self, request: GenerationRequest) -> str:
        """Return the feature text for a request, keeping request statistics"""
        self.request_count += 1
        try:
            return self.complete(request).feature
        except ProviderError:
            self.error_count += 1
            raise

    def get_stats(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "kind": self.kind.value,
            "request_count": self.request_count,
            "error_count": self.error_count,
        }


def _decode_response(body: str, source: str) -> GenerationResponse:
    try:
        return GenerationResponse.model_validate_json(body)
    except ValidationError as e:
        raise ProviderError(f"{source} did not return a {{\"feature\": ...}} document: {e.errors()[0]['msg']}")


class RemoteProvider(GenerationProvider):
    """Provider reached over HTTP: POST JSON request, JSON response, no retries"""

    def __init__(
        self,
        endpoint: str,
        api_key: Optional[str] = None,
        timeout: float = 30.0,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        super().__init__(name="remote")
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout
        self.transport = transport

    @classmethod
    def from_settings(cls, settings: "ProviderSettings", transport: Optional[httpx.BaseTransport] = None):
        if not settings.endpoint:
            raise ProviderError(f"No provider endpoint configured: set {settings.ENDPOINT_VAR}")
        return cls(settings.endpoint, api_key=settings.api_key, timeout=settings.timeout, transport=transport)

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        try:
            logger.info(f"Sending generation request to {self.endpoint}")
            with httpx.Client(timeout=self.timeout, transport=self.transport) as client:
                response = client.post(self.endpoint, json=request.model_dump(), headers=headers)
                response.raise_for_status()
        except httpx.TimeoutException as e:
            logger.error(f"Provider timed out after {self.timeout}s: {e}", exc_info=True)
            raise ProviderError(f"Provider request timed out after {self.timeout:g}s")
        except httpx.HTTPError as e:
            logger.error(f"Provider request failed: {e}", exc_info=True)
            raise ProviderError(f"Provider request failed: {e}")

        return _decode_response(response.text, self.endpoint)


class StubProvider(GenerationProvider):
    """Deterministic offline provider

    Canned responses come from an in-memory mapping keyed by prompt text, or
    from ``<directory>/<prompt hash>.json`` files holding a response body.
    """

    def __init__(self, directory: Optional[Path] = None, responses: Optional[Dict[str, str]] = None):
        super().__init__(name="stub")
        self.directory = Path(directory) if directory is not None else None
        self.responses = responses or {}

    @staticmethod
    def prompt_key(prompt: str) -> str:
        return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def response_path(cls, directory: Path, prompt: str) -> Path:
        return Path(directory) / f"{cls.prompt_key(prompt)}.json"

    @classmethod
    def save(cls, directory: Path, request: GenerationRequest, feature: str) -> Path:
        """Store a canned response for ``request`` under ``directory``"""
        path = cls.response_path(directory, request.prompt)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps({"feature": feature}, indent=2) + "\n", encoding="utf-8")
        return path

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        if request.prompt in self.responses:
            return GenerationResponse(feature=self.responses[request.prompt])

        if self.directory is not None:
            path = self.response_path(self.directory, request.prompt)
            if path.exists():
                return _decode_response(path.read_text(encoding="utf-8"), str(path))

        raise ProviderError(f"No canned response for prompt hash {self.prompt_key(request.prompt)}")
