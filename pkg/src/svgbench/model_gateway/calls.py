"""Templated chat calls with structured prompt records.

Every model interaction in the benchmark goes through
:func:`templated_chat`: the prompt text is always produced by a registered
template plus explicit bindings, and (when a :class:`PromptLog` is supplied)
a structured record of exactly what was sent — template id, bindings, and
the ordered image parts by role and content hash — is appended. A run's
``prompts.jsonl`` is the serialized log; any prompt can be reconstructed
byte-for-byte from its record, which is what the replay audit checks (e.g.
that an answering policy was never shown the original image).
"""

import hashlib
import threading
from dataclasses import dataclass, field
from typing import Iterable, List, Mapping, Optional, Tuple

from .client import ChatTurnResult, UserPart, chat_complete, png_payload
from .endpoints import ModelEndpoint
from .prompts import get_template, render_prompt

# Image roles a prompt part may carry. "original" marks the benchmark input
# image; "render" marks a raster produced from generated code.
IMAGE_ROLE_ORIGINAL = "original"
IMAGE_ROLE_RENDER = "render"


@dataclass
class PromptLog:
    """Append-only, thread-safe list of prompt records."""

    records: List[dict] = field(default_factory=list)
    _lock: threading.Lock = field(
        default_factory=threading.Lock, repr=False, compare=False
    )

    def record(self, rec: dict) -> None:
        with self._lock:
            self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(list(self.records))


def templated_chat(
    endpoint: ModelEndpoint,
    *,
    template_id: str,
    bindings: Optional[Mapping[str, str]] = None,
    images: Iterable[Tuple[str, UserPart]] = (),
    system_template_id: Optional[str] = None,
    budget: Optional[int] = None,
    log: Optional[PromptLog] = None,
    item_id: Optional[str] = None,
    round_index: Optional[int] = None,
    timeout: float = 180.0,
    backoff_base: float = 0.5,
    rng=None,
) -> ChatTurnResult:
    """Send one chat turn built from a template, recording what was sent.

    ``images`` is an ordered iterable of ``(role, image)`` pairs appended
    after the rendered text part; ``role`` names what the image is
    ("original" or "render"), which the wire format does not carry but the
    record preserves for audits. ``system_template_id`` optionally names a
    zero-placeholder template rendered as the system message.
    """
    bound = dict(bindings or {})
    text = render_prompt(get_template(template_id), bound)
    system = (
        render_prompt(get_template(system_template_id), {})
        if system_template_id
        else None
    )

    parts: List[UserPart] = [text]
    part_meta: List[dict] = [{"kind": "text"}]
    for role, image in images:
        payload = png_payload(image)
        parts.append(payload)
        part_meta.append(
            {
                "kind": "image",
                "role": role,
                "sha256": hashlib.sha256(payload).hexdigest(),
            }
        )

    result = chat_complete(
        endpoint,
        system,
        parts,
        budget,
        timeout=timeout,
        backoff_base=backoff_base,
        rng=rng,
    )

    if log is not None:
        log.record(
            {
                "item_id": item_id,
                "round": round_index,
                "endpoint": endpoint.name,
                "template_id": template_id,
                "bindings": bound,
                "system_template_id": system_template_id,
                "parts": part_meta,
                "response_sha256": hashlib.sha256(
                    result.text.encode("utf-8")
                ).hexdigest(),
                "prompt_tokens": result.prompt_tokens,
                "completion_tokens": result.completion_tokens,
            }
        )
    return result
