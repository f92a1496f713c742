"""Chat-completions client: payload shaping, retry policy, concurrency caps.

Retry policy: at most 5 transport attempts per call; only 429, 5xx, and
transport-level failures are retried (exponential backoff with jitter);
401/403 raise AuthError immediately and other 4xx raise TransportError
immediately. A global semaphore and one semaphore per endpoint bound the
number of in-flight requests; callers block while saturated.
"""

import base64
import os
import random
import threading
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..svg_toolkit.document import RenderedImage
from .endpoints import (
    DEFAULT_GLOBAL_LIMIT,
    DEFAULT_PER_ENDPOINT_LIMIT,
    ModelEndpoint,
)

MAX_ATTEMPTS = 5


class AuthError(RuntimeError):
    """Endpoint rejected credentials (401/403) or the key env var is unset."""


class RateLimited(RuntimeError):
    """Still throttled (429) after exhausting all retry attempts."""


class TransportError(RuntimeError):
    """Network failure, 5xx after retries, or a malformed/other-4xx reply."""


class ModelRefusal(RuntimeError):
    """A model declined the task in prose.

    Never raised by chat_complete itself — refusal text is passed through to
    the caller like any other completion, and downstream extraction decides
    what to do with it. Defined here so pipelines share one vocabulary.
    """


@dataclass(frozen=True)
class ChatTurnResult:
    text: str
    prompt_tokens: int
    completion_tokens: int
    latency_ms: int
    attempt: int  # 1-based; >1 means transient failures were retried


# one user-message part: raw text, PNG bytes, or a rendered raster
UserPart = Union[str, bytes, RenderedImage]


# --- concurrency limits ----------------------------------------------------

_limits_lock = threading.Lock()
_global_limit = DEFAULT_GLOBAL_LIMIT
_per_endpoint_limit = DEFAULT_PER_ENDPOINT_LIMIT
_global_sem = threading.BoundedSemaphore(DEFAULT_GLOBAL_LIMIT)
_endpoint_sems: Dict[str, threading.BoundedSemaphore] = {}


def configure_limits(global_limit: int = DEFAULT_GLOBAL_LIMIT,
                     per_endpoint: int = DEFAULT_PER_ENDPOINT_LIMIT) -> None:
    """Set in-flight request caps. Call before issuing requests."""
    global _global_limit, _per_endpoint_limit, _global_sem
    if global_limit < 1 or per_endpoint < 1:
        raise ValueError("concurrency limits must be >= 1")
    with _limits_lock:
        _global_limit = global_limit
        _per_endpoint_limit = per_endpoint
        _global_sem = threading.BoundedSemaphore(global_limit)
        _endpoint_sems.clear()


def _endpoint_sem(name: str) -> threading.BoundedSemaphore:
    with _limits_lock:
        sem = _endpoint_sems.get(name)
        if sem is None:
            sem = threading.BoundedSemaphore(_per_endpoint_limit)
            _endpoint_sems[name] = sem
        return sem


# --- payload shaping -------------------------------------------------------


def png_payload(part: UserPart) -> bytes:
    """Normalize an image part (RenderedImage, array, or bytes) to PNG bytes."""
    if isinstance(part, RenderedImage):
        return part.png_bytes()
    if isinstance(part, np.ndarray):
        from ..svg_toolkit.png import encode_png

        return encode_png(part)
    if isinstance(part, (bytes, bytearray)):
        return bytes(part)
    raise TypeError(f"cannot treat {type(part).__name__} as an image part")


def _as_data_uri(png: bytes) -> str:
    return "data:image/png;base64," + base64.b64encode(png).decode("ascii")


def build_user_content(parts: Sequence[UserPart],
                       supports_images: bool) -> List[dict]:
    content: List[dict] = []
    for part in parts:
        if isinstance(part, str):
            content.append({"type": "text", "text": part})
        else:
            if not supports_images:
                raise ValueError("endpoint does not accept image parts")
            content.append(
                {
                    "type": "image_url",
                    "image_url": {"url": _as_data_uri(png_payload(part))},
                }
            )
    return content


# --- transports ------------------------------------------------------------


def _send_mock(ep: ModelEndpoint, payload: dict) -> Tuple[int, dict]:
    from . import mocks

    handler = mocks.resolve_backend(ep.mock_backend)
    return handler(payload)


def _send_http(ep: ModelEndpoint, payload: dict,
               timeout: float) -> Tuple[int, dict]:
    import httpx

    headers = {"Content-Type": "application/json"}
    if ep.api_key_env:
        key = os.environ.get(ep.api_key_env)
        if not key:
            raise AuthError(
                f"endpoint {ep.name!r}: environment variable "
                f"{ep.api_key_env} is not set"
            )
        headers["Authorization"] = f"Bearer {key}"
    url = ep.base_url.rstrip("/") + "/chat/completions"
    try:
        response = httpx.post(url, json=payload, headers=headers,
                              timeout=timeout)
    except httpx.HTTPError as exc:
        raise ConnectionError(str(exc)) from exc
    try:
        body = response.json()
    except ValueError:
        body = {}
    return response.status_code, body


# --- main entry ------------------------------------------------------------


def chat_complete(
    ep: ModelEndpoint,
    system: Optional[str],
    user_parts: Sequence[UserPart],
    budget: Optional[int] = None,
    *,
    timeout: float = 180.0,
    backoff_base: float = 0.5,
    rng: Optional[random.Random] = None,
) -> ChatTurnResult:
    """One chat call against `ep`; returns the first choice's text.

    `budget` caps completion tokens and must not exceed the endpoint's
    max_output_tokens (that is a caller error, not a transport condition).
    """
    if budget is None:
        budget = ep.max_output_tokens
    if budget < 1 or budget > ep.max_output_tokens:
        raise ValueError(
            f"budget {budget} outside [1, {ep.max_output_tokens}] "
            f"for endpoint {ep.name!r}"
        )

    messages: List[dict] = []
    if system:
        messages.append({"role": "system", "content": system})
    messages.append(
        {
            "role": "user",
            "content": build_user_content(user_parts, ep.supports_images),
        }
    )
    payload = {
        "model": ep.name,
        "messages": messages,
        "temperature": ep.temperature,
        "max_tokens": budget,
    }

    jitter = rng if rng is not None else random
    started = time.monotonic()
    last_error = "unknown"
    with _global_sem, _endpoint_sem(ep.name):
        for attempt in range(1, MAX_ATTEMPTS + 1):
            try:
                if ep.is_mock:
                    status, body = _send_mock(ep, payload)
                else:
                    status, body = _send_http(ep, payload, timeout)
            except (ConnectionError, TimeoutError, OSError) as exc:
                last_error = f"transport: {exc}"
                status, body = None, {}
            else:
                if status == 200:
                    return _parse_completion(body, started, attempt)
                if status in (401, 403):
                    raise AuthError(
                        f"endpoint {ep.name!r} returned HTTP {status}"
                    )
                if status == 429:
                    last_error = "HTTP 429"
                elif status >= 500:
                    last_error = f"HTTP {status}"
                else:  # other 4xx: never retried
                    raise TransportError(
                        f"endpoint {ep.name!r} returned HTTP {status}: "
                        f"{_error_detail(body)}"
                    )
            if attempt < MAX_ATTEMPTS and backoff_base > 0:
                delay = backoff_base * (2.0 ** (attempt - 1))
                time.sleep(delay + jitter.uniform(0.0, delay / 2.0))

    if last_error == "HTTP 429":
        raise RateLimited(
            f"endpoint {ep.name!r} still throttled after "
            f"{MAX_ATTEMPTS} attempts"
        )
    raise TransportError(
        f"endpoint {ep.name!r} failed after {MAX_ATTEMPTS} attempts "
        f"({last_error})"
    )


def _error_detail(body: dict) -> str:
    err = body.get("error")
    if isinstance(err, dict):
        return str(err.get("message", err))
    return str(err) if err else "no error detail"


def _parse_completion(body: dict, started: float, attempt: int) -> ChatTurnResult:
    try:
        choice = body["choices"][0]
        message = choice["message"]
        text = message.get("content") or ""
    except (KeyError, IndexError, TypeError):
        raise TransportError(
            "malformed completion response: missing choices[0].message"
        ) from None
    usage = body.get("usage") or {}
    return ChatTurnResult(
        text=text,
        prompt_tokens=int(usage.get("prompt_tokens", 0) or 0),
        completion_tokens=int(usage.get("completion_tokens", 0) or 0),
        latency_ms=int((time.monotonic() - started) * 1000),
        attempt=attempt,
    )
