"""Uniform client layer for vision-language chat endpoints, image-embedding
providers, and the prompt-template registry used by every pipeline."""

from .calls import (
    IMAGE_ROLE_ORIGINAL,
    IMAGE_ROLE_RENDER,
    PromptLog,
    templated_chat,
)
from .client import (
    AuthError,
    ChatTurnResult,
    ModelRefusal,
    RateLimited,
    TransportError,
    chat_complete,
    configure_limits,
    png_payload,
)
from .embeddings import (
    ProviderUnavailable,
    configure_embedding_provider,
    embed_image,
    embedding_dim,
)
from .endpoints import GatewayConfig, ModelEndpoint, load_gateway_config
from .prompts import (
    PromptTemplate,
    UnboundPlaceholder,
    get_template,
    render_prompt,
    template_ids,
)

__all__ = [
    "AuthError",
    "ChatTurnResult",
    "GatewayConfig",
    "IMAGE_ROLE_ORIGINAL",
    "IMAGE_ROLE_RENDER",
    "ModelEndpoint",
    "ModelRefusal",
    "PromptLog",
    "PromptTemplate",
    "ProviderUnavailable",
    "RateLimited",
    "TransportError",
    "UnboundPlaceholder",
    "chat_complete",
    "configure_embedding_provider",
    "configure_limits",
    "embed_image",
    "embedding_dim",
    "get_template",
    "load_gateway_config",
    "png_payload",
    "render_prompt",
    "templated_chat",
    "template_ids",
]
