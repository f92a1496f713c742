"""Whitelist sanitization and canonical serialization.

Enforces the generation contract ("Use only native SVG elements (no external
images or links)"): script/animation/embedding elements are dropped, event
handlers and external references stripped, <a> wrappers unwrapped. <style>
elements are also dropped: stylesheet resolution is out of scope, so keeping
them would misrepresent what the deterministic renderer actually draws.

Canonical form (needed for byte-stable golden files): UTF-8, no XML
declaration, attributes sorted lexicographically, double quotes, whitespace-
only text nodes dropped, children on one line, empty elements self-closed,
root carries xmlns="http://www.w3.org/2000/svg" and a viewBox (synthesized
from width/height when absent). sanitize_svg is idempotent on its output.
"""

import re
import xml.etree.ElementTree as ET
from typing import List, Optional

from . import tokens
from .document import NotRepairable, SvgDocument, parse_length, parse_view_box

SVG_NS = "http://www.w3.org/2000/svg"

# Native SVG elements the toolkit accepts. Renderer support is a subset;
# unsupported-but-harmless elements (e.g. clipPath) pass through and are
# ignored at render time.
ALLOWED_ELEMENTS = frozenset(
    {
        "svg",
        "g",
        "defs",
        "title",
        "desc",
        "metadata",
        "symbol",
        "use",
        "rect",
        "circle",
        "ellipse",
        "line",
        "polyline",
        "polygon",
        "path",
        "text",
        "tspan",
        "linearGradient",
        "radialGradient",
        "stop",
        "clipPath",
        "mask",
        "pattern",
        "marker",
        "switch",
    }
)

# Dropped with their whole subtree.
BANNED_ELEMENTS = frozenset(
    {
        "script",
        "style",
        "image",
        "foreignObject",
        "animate",
        "animateMotion",
        "animateTransform",
        "set",
        "video",
        "audio",
        "iframe",
        "embed",
        "object",
        "filter",
        "feImage",
    }
)

# Unwrapped: element removed, children hoisted in place.
UNWRAP_ELEMENTS = frozenset({"a"})

_URL_REF = re.compile(r"url\(\s*(['\"]?)([^)'\"]*)\1\s*\)", re.IGNORECASE)
_XML_ESCAPES = {"&": "&amp;", "<": "&lt;", ">": "&gt;"}


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _attr_local(name: str) -> str:
    local = name.rsplit("}", 1)[-1]
    # xlink:href and plain href are the same reference mechanism here.
    return "href" if local == "href" else local


def _attr_allowed(name: str, value: str) -> bool:
    if name.startswith("on"):
        return False
    if name in ("xmlns", "version", "baseProfile"):
        return False  # xmlns re-emitted canonically on the root only
    lowered = value.strip().lower()
    if lowered.startswith("javascript:") or lowered.startswith("data:"):
        return False
    if name == "href":
        return value.strip().startswith("#")
    return True


def _scrub_url_refs(value: str) -> str:
    """Replace url(...) references that point outside the document."""

    def check(match: "re.Match[str]") -> str:
        target = match.group(2).strip()
        return match.group(0) if target.startswith("#") else "none"

    if "url(" not in value.lower():
        return value
    return _URL_REF.sub(check, value)


def _clean_element(elem: ET.Element) -> Optional[ET.Element]:
    tag = _local(elem.tag)
    if tag in BANNED_ELEMENTS or tag not in ALLOWED_ELEMENTS | UNWRAP_ELEMENTS:
        return None

    out = ET.Element(tag)
    for raw_name, raw_value in elem.attrib.items():
        name = _attr_local(raw_name)
        if not _attr_allowed(name, raw_value):
            continue
        out.set(name, _scrub_url_refs(raw_value))
    out.text = elem.text

    def flow_text(piece: str) -> None:
        # text from a dropped/unwrapped element joins the surrounding flow
        children = list(out)
        if children:
            children[-1].tail = (children[-1].tail or "") + piece
        else:
            out.text = (out.text or "") + piece

    for child in elem:
        kept = _clean_element(child)
        child_tail = child.tail or ""
        if kept is None:
            if child_tail:
                flow_text(child_tail)
            continue
        if _local(kept.tag) in UNWRAP_ELEMENTS:
            if kept.text:
                flow_text(kept.text)
            for grandchild in list(kept):
                out.append(grandchild)  # recursion already set its tail
            if child_tail:
                flow_text(child_tail)
        else:
            kept.tail = child_tail
            out.append(kept)
    return out


def _escape_text(text: str) -> str:
    return "".join(_XML_ESCAPES.get(ch, ch) for ch in text)


def _escape_attr(value: str) -> str:
    return _escape_text(value).replace('"', "&quot;")


_TEXT_BEARING = frozenset({"text", "tspan", "title", "desc"})


def _serialize(elem: ET.Element, parts: List[str], is_root: bool) -> None:
    tag = _local(elem.tag)
    attrs = dict(elem.attrib)
    if is_root:
        attrs["xmlns"] = SVG_NS
    attr_text = "".join(
        f' {name}="{_escape_attr(attrs[name])}"' for name in sorted(attrs)
    )
    text = elem.text or ""
    if not text.strip():
        text = ""
    children = list(elem)
    if not children and not text:
        parts.append(f"<{tag}{attr_text}/>")
        return
    parts.append(f"<{tag}{attr_text}>")
    if text:
        parts.append(_escape_text(text))
    for child in children:
        _serialize(child, parts, is_root=False)
        tail = child.tail or ""
        if tail.strip():
            parts.append(_escape_text(tail))
    parts.append(f"</{tag}>")


def sanitize_svg(doc: SvgDocument) -> SvgDocument:
    """Sanitized, canonically serialized copy of `doc`.

    Raises NotRepairable when the root is not svg or no viewBox can be
    established from viewBox/width/height.
    """
    try:
        root = ET.fromstring(doc.source)
    except ET.ParseError as exc:
        raise NotRepairable(f"not well-formed XML: {exc}") from exc
    if _local(root.tag) != "svg":
        raise NotRepairable(f"root element is <{_local(root.tag)}>, not <svg>")

    cleaned = _clean_element(root)
    if cleaned is None:
        raise NotRepairable("root element rejected by sanitizer")

    if cleaned.get("viewBox") is None:
        width = parse_length(cleaned.get("width"))
        height = parse_length(cleaned.get("height"))
        if width is None or height is None:
            raise NotRepairable("viewBox missing and not derivable from width/height")
        cleaned.set("viewBox", f"0 0 {width:g} {height:g}")
    view_box = parse_view_box(cleaned.get("viewBox"))

    parts: List[str] = []
    _serialize(cleaned, parts, is_root=True)
    source = "".join(parts)
    return SvgDocument(
        source=source,
        view_box=view_box,
        token_count=tokens.count_code_tokens(source),
        origin=doc.origin,
    )
