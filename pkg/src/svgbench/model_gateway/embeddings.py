"""Image-embedding client: wire protocol plus the in-process mock provider.

Providers are registered by id. "mock" runs in-process (pixels hashed into a
seeded unit vector); any provider with a base_url is served over HTTP:
POST {base_url}/embed {"image": <base64 PNG>, "model": <checkpoint>}
-> {"vector": [...], "dim": N}. Returned vectors are L2-normalized, so the
unit-norm postcondition holds exactly.
"""

import base64
import hashlib
from typing import Dict, Optional, Union

import numpy as np

from ..svg_toolkit.document import RenderedImage
from .endpoints import DEFAULT_EMBEDDINGS, EmbeddingProviderConfig

MOCK_DIM = 64


class ProviderUnavailable(RuntimeError):
    def __init__(self, provider_id: str, detail: str = ""):
        suffix = f": {detail}" if detail else ""
        super().__init__(f"embedding provider {provider_id!r} unavailable{suffix}")
        self.provider_id = provider_id


_PROVIDERS: Dict[str, EmbeddingProviderConfig] = dict(DEFAULT_EMBEDDINGS)


def configure_embedding_provider(
    provider_id: str,
    *,
    base_url: Optional[str] = None,
    checkpoint: Optional[str] = None,
    dim: Optional[int] = None,
) -> None:
    current = _PROVIDERS.get(provider_id)
    _PROVIDERS[provider_id] = EmbeddingProviderConfig(
        provider_id=provider_id,
        dim=dim if dim is not None else (current.dim if current else 0),
        base_url=(
            base_url
            if base_url is not None
            else (current.base_url if current else None)
        ),
        checkpoint=(
            checkpoint
            if checkpoint is not None
            else (current.checkpoint if current else None)
        ),
    )


def embedding_dim(provider_id: str) -> int:
    config = _PROVIDERS.get(provider_id)
    if config is None:
        raise ProviderUnavailable(provider_id, "not configured")
    return config.dim


def _image_png(image: Union[RenderedImage, bytes, np.ndarray]) -> bytes:
    if isinstance(image, RenderedImage):
        return image.png_bytes()
    if isinstance(image, np.ndarray):
        from ..svg_toolkit.png import encode_png

        return encode_png(image)
    if isinstance(image, (bytes, bytearray)):
        return bytes(image)
    raise TypeError(f"cannot embed a {type(image).__name__}")


def mock_embedding(png: bytes, dim: int = MOCK_DIM) -> np.ndarray:
    """Deterministic unit vector seeded by the PNG bytes."""
    seed = int.from_bytes(hashlib.sha256(png).digest()[:8], "big")
    rng = np.random.default_rng(seed)
    vector = rng.standard_normal(dim)
    return vector / np.linalg.norm(vector)


def embed_image(
    provider: str, image: Union[RenderedImage, bytes, np.ndarray]
) -> np.ndarray:
    """Unit-norm embedding of `image` under the named provider."""
    config = _PROVIDERS.get(provider)
    if config is None:
        raise ProviderUnavailable(provider, "not configured")
    png = _image_png(image)

    if config.base_url is None:
        if provider == "mock":
            return mock_embedding(png, config.dim or MOCK_DIM)
        raise ProviderUnavailable(provider, "no base_url configured")

    import httpx

    body = {"image": base64.b64encode(png).decode("ascii")}
    if config.checkpoint:
        body["model"] = config.checkpoint
    url = config.base_url.rstrip("/") + "/embed"
    try:
        response = httpx.post(url, json=body, timeout=120.0)
    except httpx.HTTPError as exc:
        raise ProviderUnavailable(provider, str(exc)) from exc
    if response.status_code != 200:
        raise ProviderUnavailable(provider, f"HTTP {response.status_code}")
    payload = response.json()
    vector = np.asarray(payload.get("vector", ()), dtype=np.float64)
    if vector.ndim != 1 or vector.size == 0:
        raise ProviderUnavailable(provider, "malformed vector in reply")
    if config.dim and vector.size != config.dim:
        raise ProviderUnavailable(
            provider,
            f"dim {vector.size} != configured {config.dim}",
        )
    norm = float(np.linalg.norm(vector))
    if norm <= 0 or not np.isfinite(norm):
        raise ProviderUnavailable(provider, "non-normalizable vector")
    return vector / norm
