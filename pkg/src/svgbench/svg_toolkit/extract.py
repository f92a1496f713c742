"""Pull the first complete svg element out of free-form model output.

Models are told "Output only pure SVG code", but in practice wrap documents
in Markdown fences, prepend analysis prose, or emit several attempts. The
extractor scans for the first "<svg" and returns the maximal balanced block
up to its matching "</svg>", which makes fences and surrounding prose
irrelevant. The returned document is the raw substring (no rewriting);
sanitize_svg canonicalizes.
"""

import re
import xml.etree.ElementTree as ET
from typing import Optional, Tuple

from . import tokens
from .document import (
    NoSvgFound,
    NotRepairable,
    SvgDocument,
    UnbalancedTags,
    parse_length,
    parse_view_box,
)

_OPEN = re.compile(r"<svg(?=[\s>/])")
_CLOSE = re.compile(r"</svg\s*>")


def _tag_end(text: str, start: int) -> Tuple[int, bool]:
    """Index just past the '>' closing the tag that starts at `start`, and
    whether the tag is self-closing. Quote-aware."""
    i = start
    quote: Optional[str] = None
    n = len(text)
    while i < n:
        ch = text[i]
        if quote is not None:
            if ch == quote:
                quote = None
        elif ch in ("'", '"'):
            quote = ch
        elif ch == ">":
            return i + 1, text[i - 1] == "/"
        i += 1
    raise UnbalancedTags("svg tag never closed with '>'")


def find_svg_block(model_output: str) -> str:
    """The first maximal '<svg' .. matching '</svg>' substring."""
    first = _OPEN.search(model_output)
    if first is None:
        raise NoSvgFound("no <svg element in model output")
    pos = first.start()
    depth = 0
    cursor = pos
    n = len(model_output)
    while cursor < n:
        open_m = _OPEN.search(model_output, cursor)
        close_m = _CLOSE.search(model_output, cursor)
        if depth == 0:
            # must be sitting on an opener (the first, or a fresh scan)
            if open_m is None or open_m.start() != cursor:
                break
        if open_m is not None and (close_m is None or open_m.start() < close_m.start()):
            end, self_closing = _tag_end(model_output, open_m.start())
            if not self_closing:
                depth += 1
            elif depth == 0:
                return model_output[pos:end]
            cursor = end
        elif close_m is not None:
            depth -= 1
            cursor = close_m.end()
            if depth == 0:
                return model_output[pos : close_m.end()]
            if depth < 0:
                break
        else:
            break
    raise UnbalancedTags("found <svg without a matching </svg>")


def derive_view_box(root: ET.Element) -> Tuple[float, float, float, float]:
    """viewBox attribute, or synthesized 0 0 W H from width/height."""
    vb = root.get("viewBox")
    if vb is not None:
        return parse_view_box(vb)
    width = parse_length(root.get("width"))
    height = parse_length(root.get("height"))
    if width is not None and height is not None:
        return (0.0, 0.0, width, height)
    raise NotRepairable("viewBox missing and not derivable from width/height")


def extract_svg_code(model_output: str, origin: str = "initial") -> SvgDocument:
    """First complete svg block as an SvgDocument.

    Raises NoSvgFound when there is no svg element, UnbalancedTags when an
    opener never closes or the block is not well-formed XML, NotRepairable
    when no viewBox can be established.
    """
    block = find_svg_block(model_output)
    try:
        root = ET.fromstring(block)
    except ET.ParseError as exc:
        raise UnbalancedTags(f"extracted block is not well-formed XML: {exc}") from exc
    local = root.tag.rsplit("}", 1)[-1]
    if local != "svg":
        raise NoSvgFound(f"extracted root element is <{local}>, not <svg>")
    view_box = derive_view_box(root)
    return SvgDocument(
        source=block,
        view_box=view_box,
        token_count=tokens.count_code_tokens(block),
        origin=origin,
    )
