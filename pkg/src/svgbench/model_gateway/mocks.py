"""In-process mock chat backends for deterministic runs and tests.

An endpoint whose base_url is "mock://<name>" routes to the handler
registered under <name>. A handler receives the full request payload (the
same JSON an HTTP endpoint would see) and returns (status_code, body) in
chat-completions shape, so retry behavior and parsing are exercised
identically to real transports.
"""

import hashlib
import json
import re
import threading
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .endpoints import ModelEndpoint

Handler = Callable[[dict], Tuple[int, dict]]

_REGISTRY: Dict[str, Handler] = {}
_registry_lock = threading.Lock()


def register_mock_backend(name: str, handler: Handler) -> None:
    with _registry_lock:
        _REGISTRY[name] = handler


def unregister_mock_backend(name: str) -> None:
    with _registry_lock:
        _REGISTRY.pop(name, None)


def clear_mock_backends() -> None:
    with _registry_lock:
        _REGISTRY.clear()


def resolve_backend(name: str) -> Handler:
    with _registry_lock:
        handler = _REGISTRY.get(name)
    if handler is None:
        raise LookupError(
            f"no mock backend registered under {name!r}; "
            f"registered: {sorted(_REGISTRY)}"
        )
    return handler


def mock_endpoint(name: str, **overrides) -> ModelEndpoint:
    """Endpoint addressing the mock backend registered under `name`."""
    fields = {
        "name": name,
        "base_url": f"mock://{name}",
        "supports_images": True,
    }
    fields.update(overrides)
    return ModelEndpoint(**fields)


# --- payload introspection helpers ------------------------------------------


def completion_body(
    text: str, prompt_tokens: int = 0, completion_tokens: int = 0
) -> dict:
    return {
        "choices": [{"message": {"role": "assistant", "content": text}}],
        "usage": {
            "prompt_tokens": prompt_tokens,
            "completion_tokens": completion_tokens,
        },
    }


def user_texts(payload: dict) -> List[str]:
    """All text parts of the user message, in order."""
    texts: List[str] = []
    for message in payload.get("messages", []):
        if message.get("role") != "user":
            continue
        content = message.get("content")
        if isinstance(content, str):
            texts.append(content)
            continue
        for part in content or []:
            if part.get("type") == "text":
                texts.append(part.get("text", ""))
    return texts


def image_parts(payload: dict) -> List[str]:
    """All image data URIs of the user message, in order."""
    uris: List[str] = []
    for message in payload.get("messages", []):
        if message.get("role") != "user":
            continue
        content = message.get("content")
        if isinstance(content, str):
            continue
        for part in content or []:
            if part.get("type") == "image_url":
                uris.append(part.get("image_url", {}).get("url", ""))
    return uris


def image_hashes(payload: dict) -> List[str]:
    """sha256 hex of each image part's data URI (stable raster identity)."""
    return [
        hashlib.sha256(uri.encode("ascii")).hexdigest()
        for uri in image_parts(payload)
    ]


# --- canned handler factories ------------------------------------------------


def fixed_text(text: str) -> Handler:
    """Always replies with `text`."""

    def handler(payload: dict) -> Tuple[int, dict]:
        return 200, completion_body(text)

    return handler


def sequence(replies: Sequence[str], repeat_last: bool = True) -> Handler:
    """Replies with each string in turn (thread-safe); then repeats or 500s."""
    state = {"i": 0}
    lock = threading.Lock()

    def handler(payload: dict) -> Tuple[int, dict]:
        with lock:
            i = state["i"]
            state["i"] += 1
        if i >= len(replies):
            if repeat_last and replies:
                return 200, completion_body(replies[-1])
            return 500, {"error": {"message": "scripted replies exhausted"}}
        return 200, completion_body(replies[i])

    return handler


def flaky(statuses: Sequence[int], then: Handler) -> Handler:
    """Fails with each listed HTTP status first, then delegates to `then`."""
    state = {"i": 0}
    lock = threading.Lock()

    def handler(payload: dict) -> Tuple[int, dict]:
        with lock:
            i = state["i"]
            state["i"] += 1
        if i < len(statuses):
            return statuses[i], {"error": {"message": "scripted failure"}}
        return then(payload)

    return handler


def keyed_on_prompt(
    rules: Sequence[Tuple[str, str]], default: Optional[str] = None
) -> Handler:
    """First rule whose substring (or regex `re:` prefix) matches any user
    text decides the reply; falls back to `default` or HTTP 500."""

    def handler(payload: dict) -> Tuple[int, dict]:
        joined = "\n".join(user_texts(payload))
        for needle, reply in rules:
            if needle.startswith("re:"):
                if re.search(needle[3:], joined):
                    return 200, completion_body(reply)
            elif needle in joined:
                return 200, completion_body(reply)
        if default is not None:
            return 200, completion_body(default)
        return 500, {"error": {"message": "no prompt rule matched"}}

    return handler


def keyed_on_image(
    mapping: Dict[str, str], default: Optional[str] = None
) -> Handler:
    """Reply chosen by sha256 of the FIRST image part's data URI."""

    def handler(payload: dict) -> Tuple[int, dict]:
        hashes = image_hashes(payload)
        key = hashes[0] if hashes else ""
        if key in mapping:
            return 200, completion_body(mapping[key])
        if default is not None:
            return 200, completion_body(default)
        return 500, {"error": {"message": f"no reply for image {key[:12]}"}}

    return handler


def scripted_judge(score_by_answer: Dict[str, float],
                   default: float = 0.0) -> Handler:
    """Judge that looks the candidate answer up in the prompt text."""

    def handler(payload: dict) -> Tuple[int, dict]:
        joined = "\n".join(user_texts(payload))
        match = re.search(r"Candidate answer: (.*)", joined)
        answer = match.group(1).strip() if match else ""
        score = score_by_answer.get(answer, default)
        return 200, completion_body(f"{score:g}")

    return handler


def recording(inner: Handler, log: List[dict]) -> Handler:
    """Wraps `inner`, appending a deep copy of every payload to `log`."""

    def handler(payload: dict) -> Tuple[int, dict]:
        log.append(json.loads(json.dumps(payload)))
        return inner(payload)

    return handler
