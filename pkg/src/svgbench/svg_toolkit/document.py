"""Core SVG value types and toolkit error taxonomy."""

import hashlib
import re
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

ViewBox = Tuple[float, float, float, float]


class NoSvgFound(ValueError):
    """Model output contains no svg element. Counts against success rate."""


class UnbalancedTags(ValueError):
    """An svg opening tag exists but no matching close / malformed XML."""


class NotRepairable(ValueError):
    """Document cannot be normalized into the accepted subset."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class RenderFailure(RuntimeError):
    """Rendering aborted. Counts against success rate."""

    def __init__(self, engine_message: str):
        super().__init__(engine_message)
        self.engine_message = engine_message


_NUMBER = re.compile(r"[-+]?(?:\d*\.\d+|\d+\.?)(?:[eE][-+]?\d+)?")


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def parse_view_box(text: str) -> ViewBox:
    parts = _NUMBER.findall(text)
    if len(parts) != 4:
        raise NotRepairable(f"viewBox needs 4 numbers, got {text!r}")
    x, y, w, h = (float(p) for p in parts)
    if w <= 0 or h <= 0:
        raise NotRepairable(f"viewBox width/height must be positive: {text!r}")
    return (x, y, w, h)


def parse_length(text: Optional[str]) -> Optional[float]:
    """Parse a positive length attribute; 'px' tolerated, percentages and
    other units rejected (None)."""
    if text is None:
        return None
    cleaned = text.strip()
    if cleaned.endswith("px"):
        cleaned = cleaned[:-2].strip()
    m = _NUMBER.fullmatch(cleaned)
    if not m:
        return None
    value = float(cleaned)
    return value if value > 0 else None


@dataclass(frozen=True)
class SvgDocument:
    """A validated SVG source string plus derived bookkeeping.

    origin: "initial", "revision:<t>", or "tool_augmented".
    """

    source: str
    view_box: ViewBox
    token_count: int
    origin: str = "initial"

    @property
    def source_hash(self) -> str:
        return sha256_text(self.source)

    def with_origin(self, origin: str) -> "SvgDocument":
        return SvgDocument(self.source, self.view_box, self.token_count, origin)


@dataclass(frozen=True)
class RenderedImage:
    """Deterministic RGBA8 raster of an SvgDocument.

    Pixels are composited over an opaque white background, so the alpha
    channel is uniformly 255; it is kept so rasters stack without special
    cases. width = round(view_box.width * render_scale), same for height;
    rendering the same document twice yields byte-identical pixels.
    """

    pixels: np.ndarray
    width: int
    height: int
    render_scale: float
    source_hash: str

    def png_bytes(self) -> bytes:
        from .png import encode_png

        return encode_png(self.pixels)

    @classmethod
    def blank_white(cls, width: int, height: Optional[int] = None) -> "RenderedImage":
        """Fallback raster for items whose generation failed outright."""
        h = height if height is not None else width
        pixels = np.full((h, width, 4), 255, dtype=np.uint8)
        return cls(
            pixels=pixels,
            width=width,
            height=h,
            render_scale=1.0,
            source_hash=hashlib.sha256(b"blank-white-fallback").hexdigest(),
        )
