"""Endpoint descriptions and gateway configuration loading (TOML or JSON)."""

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Union
from urllib.parse import urlparse

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - version-dependent import
    import tomli as tomllib

DEFAULT_MAX_OUTPUT_TOKENS = 16_384
DEFAULT_TEMPERATURE = 0.0
DEFAULT_GLOBAL_LIMIT = 8
DEFAULT_PER_ENDPOINT_LIMIT = 4


@dataclass(frozen=True)
class ModelEndpoint:
    """One chat-completions-style endpoint (real https:// or mock://)."""

    name: str
    base_url: str
    api_key_env: str = ""
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    supports_images: bool = True
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self):
        if self.max_output_tokens < 1:
            raise ValueError(
                f"endpoint {self.name!r}: max_output_tokens must be >= 1"
            )
        parsed = urlparse(self.base_url)
        if parsed.scheme not in ("http", "https", "mock") or not (
            parsed.netloc or parsed.path
        ):
            raise ValueError(
                f"endpoint {self.name!r}: malformed base_url {self.base_url!r}"
            )

    @property
    def is_mock(self) -> bool:
        return urlparse(self.base_url).scheme == "mock"

    @property
    def mock_backend(self) -> str:
        parsed = urlparse(self.base_url)
        return parsed.netloc or parsed.path.lstrip("/")


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    provider_id: str
    dim: int
    base_url: Optional[str] = None  # None: served in-process (mock)
    checkpoint: Optional[str] = None


@dataclass
class GatewayConfig:
    endpoints: Dict[str, ModelEndpoint] = field(default_factory=dict)
    embeddings: Dict[str, EmbeddingProviderConfig] = field(default_factory=dict)
    global_limit: int = DEFAULT_GLOBAL_LIMIT
    per_endpoint_limit: int = DEFAULT_PER_ENDPOINT_LIMIT

    def endpoint(self, name: str) -> ModelEndpoint:
        try:
            return self.endpoints[name]
        except KeyError:
            raise KeyError(
                f"endpoint {name!r} not present in gateway config "
                f"(have: {sorted(self.endpoints)})"
            ) from None


# Checkpoints the embedding providers resolve to unless overridden.
DEFAULT_EMBEDDINGS = {
    "siglip2": EmbeddingProviderConfig(
        provider_id="siglip2",
        dim=1152,
        checkpoint="siglip2-so400m-patch14-384",
    ),
    "dinov2": EmbeddingProviderConfig(
        provider_id="dinov2",
        dim=1024,
        checkpoint="dinov2-large",
    ),
    "mock": EmbeddingProviderConfig(provider_id="mock", dim=64),
}


def _parse_endpoint(name: str, table: dict) -> ModelEndpoint:
    return ModelEndpoint(
        name=name,
        base_url=str(table["base_url"]),
        api_key_env=str(table.get("api_key_env", "")),
        max_output_tokens=int(
            table.get("max_output_tokens", DEFAULT_MAX_OUTPUT_TOKENS)
        ),
        supports_images=bool(table.get("supports_images", True)),
        temperature=float(table.get("temperature", DEFAULT_TEMPERATURE)),
    )


def load_gateway_config(path: Union[str, Path]) -> GatewayConfig:
    """Read a TOML (or JSON) gateway config with an `endpoints` table."""
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() == ".json":
        data = json.loads(raw.decode("utf-8"))
    else:
        data = tomllib.loads(raw.decode("utf-8"))

    config = GatewayConfig()
    for name, table in (data.get("endpoints") or {}).items():
        config.endpoints[name] = _parse_endpoint(name, table)

    config.embeddings = dict(DEFAULT_EMBEDDINGS)
    for provider_id, table in (data.get("embeddings") or {}).items():
        base = config.embeddings.get(provider_id)
        config.embeddings[provider_id] = EmbeddingProviderConfig(
            provider_id=provider_id,
            dim=int(table.get("dim", base.dim if base else 0) or 0),
            base_url=table.get("base_url"),
            checkpoint=table.get(
                "checkpoint", base.checkpoint if base else None
            ),
        )

    limits = data.get("limits") or {}
    config.global_limit = int(limits.get("global", DEFAULT_GLOBAL_LIMIT))
    config.per_endpoint_limit = int(
        limits.get("per_endpoint", DEFAULT_PER_ENDPOINT_LIMIT)
    )
    if config.global_limit < 1 or config.per_endpoint_limit < 1:
        raise ValueError("concurrency limits must be >= 1")
    return config
