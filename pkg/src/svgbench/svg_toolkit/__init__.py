"""SVG handling: extraction from model output, sanitation, canonical
serialization, deterministic rasterization, and code-token accounting."""

from .document import (
    NoSvgFound,
    NotRepairable,
    RenderedImage,
    RenderFailure,
    SvgDocument,
    UnbalancedTags,
    ViewBox,
    parse_length,
    parse_view_box,
    sha256_text,
)
from .extract import extract_svg_code, find_svg_block
from .outcomes import EmptyInput, compute_success_rate
from .png import decode_png, encode_png
from .render import render_svg
from .sanitize import sanitize_svg
from .tokens import count_code_tokens, encode_text

__all__ = [
    "EmptyInput",
    "NoSvgFound",
    "NotRepairable",
    "RenderFailure",
    "RenderedImage",
    "SvgDocument",
    "UnbalancedTags",
    "ViewBox",
    "compute_success_rate",
    "count_code_tokens",
    "decode_png",
    "encode_png",
    "encode_text",
    "extract_svg_code",
    "find_svg_block",
    "parse_length",
    "parse_view_box",
    "render_svg",
    "sanitize_svg",
    "sha256_text",
]
