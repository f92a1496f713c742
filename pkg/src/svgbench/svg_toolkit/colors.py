"""Color and paint parsing.

Pillow's ImageColor covers hex/rgb()/hsl()/named CSS colors; this module
layers SVG paint semantics on top: none, currentColor, url(#id) references,
and a deterministic black fallback for unparseable values.
"""

import re
from typing import Optional, Tuple, Union

from PIL import ImageColor

RGBA = Tuple[float, float, float, float]

_URL_REF = re.compile(r"url\(\s*(['\"]?)#([^)'\"]+)\1\s*\)", re.IGNORECASE)

NO_PAINT = "none"


class PaintRef:
    """Reference to a paint server (gradient) by element id."""

    __slots__ = ("ref_id",)

    def __init__(self, ref_id: str):
        self.ref_id = ref_id

    def __repr__(self):
        return f"PaintRef({self.ref_id!r})"


Paint = Union[str, RGBA, PaintRef]  # NO_PAINT | solid color | reference


def parse_color(value: str) -> RGBA:
    """A solid color as (r, g, b, a) floats in 0..1; black on parse failure."""
    text = value.strip()
    if text.lower() == "transparent":
        return (0.0, 0.0, 0.0, 0.0)
    try:
        parsed = ImageColor.getrgb(text)
    except ValueError:
        return (0.0, 0.0, 0.0, 1.0)
    if len(parsed) == 3:
        r, g, b = parsed
        a = 255
    else:
        r, g, b, a = parsed
    return (r / 255.0, g / 255.0, b / 255.0, a / 255.0)


def parse_paint(value: Optional[str], current_color: RGBA) -> Paint:
    """SVG paint value -> NO_PAINT, an RGBA solid, or a PaintRef."""
    if value is None:
        return (0.0, 0.0, 0.0, 1.0)  # initial fill value: black
    text = value.strip()
    if not text or text.lower() == "none":
        return NO_PAINT
    if text.lower() == "currentcolor":
        return current_color
    ref = _URL_REF.match(text)
    if ref:
        return PaintRef(ref.group(2))
    if text.lower().startswith("url("):
        # external or malformed reference: not painted
        return NO_PAINT
    return parse_color(text)
