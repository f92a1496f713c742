"""Deterministic SVG renderer.

Rasterizes a sanitized SVG document to an RGB8 array composited over white.
The canvas size is derived from the viewBox: scale = max_dim / max(vb_w,
vb_h), width = round(vb_w * scale), height = round(vb_h * scale).

Supported: rect/circle/ellipse/line/polyline/polygon/path geometry with
arbitrary affine transforms, solid and gradient paints (linear and radial,
both gradient unit systems, pad/reflect/repeat spreads), fill rules, stroked
outlines (caps, joins, miter limit), group and element opacity, <use>
references, and single-font text with text-anchor. Clipping, masking,
patterns, markers, and filters are ignored; text always uses the built-in
font regardless of font-family.

Everything renders through the same supersampled coverage engine, with no
wall-clock, environment, or hash-order dependence, so identical input bytes
produce identical output bytes on every run.
"""

import math
import re
import xml.etree.ElementTree as ET
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .colors import NO_PAINT, PaintRef, RGBA, parse_color, parse_paint
from .document import (
    NotRepairable,
    RenderFailure,
    RenderedImage,
    SvgDocument,
    sha256_text,
)
from .extract import derive_view_box
from .path_data import PathDataError, SubPath, flatten_path
from .raster import Window, coverage_window, edges_from_rings

DEFAULT_MAX_DIM = 768

_NUM_RE = re.compile(r"[-+]?(?:\d*\.\d+|\d+\.?)(?:[eE][-+]?\d+)?")
_TRANSFORM_RE = re.compile(
    r"(matrix|translate|scale|rotate|skewX|skewY)\s*\(([^)]*)\)"
)

# Elements that never paint anything when encountered during the tree walk.
_DEFINITION_ELEMENTS = frozenset(
    {
        "defs",
        "title",
        "desc",
        "metadata",
        "symbol",
        "linearGradient",
        "radialGradient",
        "stop",
        "clipPath",
        "mask",
        "pattern",
        "marker",
    }
)

_INHERITED_DEFAULTS = {
    "fill": "black",
    "stroke": "none",
    "color": "black",
    "fill-opacity": "1",
    "stroke-opacity": "1",
    "fill-rule": "nonzero",
    "stroke-width": "1",
    "stroke-linecap": "butt",
    "stroke-linejoin": "miter",
    "stroke-miterlimit": "4",
    "font-size": "16",
    "font-family": "sans-serif",
    "text-anchor": "start",
    "visibility": "visible",
}

Style = Dict[str, str]
Matrix = np.ndarray  # 3x3 affine, user -> device


# ---------------------------------------------------------------------------
# small parsing helpers


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _f(value: Optional[str], default: float) -> float:
    """Leniently parse the first number in `value` ('2px' -> 2.0)."""
    if value is None:
        return default
    m = _NUM_RE.search(value)
    if m is None:
        return default
    try:
        return float(m.group(0))
    except ValueError:
        return default


def _element_props(el: ET.Element) -> Dict[str, str]:
    """Attributes plus inline style declarations (style wins, names local)."""
    props: Dict[str, str] = {}
    for name, value in el.attrib.items():
        props[_local(name)] = value
    style_attr = props.pop("style", None)
    if style_attr:
        for decl in style_attr.split(";"):
            name, sep, value = decl.partition(":")
            if sep and name.strip():
                props[name.strip()] = value.strip()
    return props


def _inherit(parent: Style, props: Dict[str, str]) -> Style:
    child = dict(parent)
    for key in _INHERITED_DEFAULTS:
        value = props.get(key)
        if value is None:
            continue
        value = value.strip()
        if value and value.lower() != "inherit":
            child[key] = value
    return child


# ---------------------------------------------------------------------------
# affine matrices


def _mat(a: float, b: float, c: float, d: float, e: float, f: float) -> Matrix:
    return np.array([[a, c, e], [b, d, f], [0.0, 0.0, 1.0]], dtype=np.float64)


def _translate(tx: float, ty: float) -> Matrix:
    return _mat(1.0, 0.0, 0.0, 1.0, tx, ty)


def parse_transform(text: str) -> Matrix:
    """SVG transform list -> 3x3 matrix; malformed entries are skipped."""
    matrix = np.eye(3)
    for op, raw_args in _TRANSFORM_RE.findall(text or ""):
        try:
            args = [float(v) for v in _NUM_RE.findall(raw_args)]
        except ValueError:
            continue
        if op == "matrix" and len(args) >= 6:
            step = _mat(*args[:6])
        elif op == "translate" and 1 <= len(args):
            step = _translate(args[0], args[1] if len(args) > 1 else 0.0)
        elif op == "scale" and 1 <= len(args):
            sx = args[0]
            sy = args[1] if len(args) > 1 else sx
            step = _mat(sx, 0.0, 0.0, sy, 0.0, 0.0)
        elif op == "rotate" and len(args) in (1, 3):
            a = math.radians(args[0])
            rot = _mat(math.cos(a), math.sin(a), -math.sin(a), math.cos(a), 0, 0)
            if len(args) == 3:
                cx, cy = args[1], args[2]
                step = _translate(cx, cy) @ rot @ _translate(-cx, -cy)
            else:
                step = rot
        elif op == "skewX" and len(args) == 1:
            step = _mat(1.0, 0.0, math.tan(math.radians(args[0])), 1.0, 0, 0)
        elif op == "skewY" and len(args) == 1:
            step = _mat(1.0, math.tan(math.radians(args[0])), 0.0, 1.0, 0, 0)
        else:
            continue
        matrix = matrix @ step
    return matrix


def _apply_matrix(matrix: Matrix, points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    return pts @ matrix[:2, :2].T + matrix[:2, 2]


def _device_scale(matrix: Matrix) -> float:
    return math.sqrt(abs(float(np.linalg.det(matrix[:2, :2]))))


# ---------------------------------------------------------------------------
# compositing layers (straight alpha)


class _Layer:
    __slots__ = ("color", "alpha")

    def __init__(self, height: int, width: int):
        self.color = np.zeros((height, width, 3), dtype=np.float64)
        self.alpha = np.zeros((height, width), dtype=np.float64)


def _composite_coverage(
    layer: _Layer,
    window: Window,
    coverage: np.ndarray,
    rgb,  # (3,) or (h, w, 3)
    alpha,  # scalar or (h, w)
) -> None:
    x0, y0, w, h = window
    a_src = coverage * alpha
    if float(a_src.max(initial=0.0)) <= 0.0:
        return
    c_dst = layer.color[y0 : y0 + h, x0 : x0 + w]
    a_dst = layer.alpha[y0 : y0 + h, x0 : x0 + w]
    out_a = a_src + a_dst * (1.0 - a_src)
    num = np.asarray(rgb, dtype=np.float64) * a_src[..., None] + c_dst * (
        a_dst * (1.0 - a_src)
    )[..., None]
    denom = np.maximum(out_a, 1e-12)[..., None]
    c_out = np.where(out_a[..., None] > 1e-12, num / denom, 0.0)
    layer.color[y0 : y0 + h, x0 : x0 + w] = c_out
    layer.alpha[y0 : y0 + h, x0 : x0 + w] = out_a


def _composite_layer(dst: _Layer, src: _Layer, opacity: float) -> None:
    a_src = src.alpha * opacity
    out_a = a_src + dst.alpha * (1.0 - a_src)
    num = src.color * a_src[..., None] + dst.color * (
        dst.alpha * (1.0 - a_src)
    )[..., None]
    denom = np.maximum(out_a, 1e-12)[..., None]
    dst.color = np.where(out_a[..., None] > 1e-12, num / denom, 0.0)
    dst.alpha = out_a


# ---------------------------------------------------------------------------
# render context


class _Ctx:
    __slots__ = ("width", "height", "view_box", "defs", "use_depth")

    def __init__(
        self,
        width: int,
        height: int,
        view_box: Tuple[float, float, float, float],
        defs: Dict[str, ET.Element],
    ):
        self.width = width
        self.height = height
        self.view_box = view_box
        self.defs = defs
        self.use_depth = 0

    def length_ref(self, axis: str) -> float:
        _, _, vbw, vbh = self.view_box
        if axis == "x":
            return vbw
        if axis == "y":
            return vbh
        return math.sqrt(vbw * vbw + vbh * vbh) / math.sqrt(2.0)


def _length(
    value: Optional[str], default: float, ctx: _Ctx, axis: str
) -> float:
    """Coordinate/length with '%' resolved against the viewport."""
    if value is None:
        return default
    text = value.strip()
    if text.endswith("%"):
        return _f(text[:-1], default * 100.0) / 100.0 * ctx.length_ref(axis)
    return _f(text, default)


# ---------------------------------------------------------------------------
# gradients


def _parse_stops(el: ET.Element) -> List[Tuple[float, RGBA]]:
    stops: List[Tuple[float, RGBA]] = []
    running = 0.0
    for child in el:
        if _local(child.tag) != "stop":
            continue
        props = _element_props(child)
        raw_off = (props.get("offset") or "0").strip()
        if raw_off.endswith("%"):
            off = _f(raw_off[:-1], 0.0) / 100.0
        else:
            off = _f(raw_off, 0.0)
        running = max(running, min(max(off, 0.0), 1.0))
        color = parse_color(props.get("stop-color", "black"))
        opacity = min(max(_f(props.get("stop-opacity"), 1.0), 0.0), 1.0)
        stops.append(
            (running, (color[0], color[1], color[2], color[3] * opacity))
        )
    return stops


def _resolve_gradient(ctx: _Ctx, ref_id: str) -> Optional[dict]:
    """Follow href template chains and merge attributes and stops."""
    chain: List[ET.Element] = []
    seen = set()
    node = ctx.defs.get(ref_id)
    while (
        node is not None
        and _local(node.tag) in ("linearGradient", "radialGradient")
        and id(node) not in seen
    ):
        seen.add(id(node))
        chain.append(node)
        href = (node.get("href") or "").strip()
        node = ctx.defs.get(href[1:]) if href.startswith("#") else None
    if not chain:
        return None

    attrs: Dict[str, str] = {}
    for el in reversed(chain):  # nearest element wins
        attrs.update(_element_props(el))
    stops: List[Tuple[float, RGBA]] = []
    for el in chain:
        stops = _parse_stops(el)
        if stops:
            break
    if not stops:
        return None
    offs = np.array([s[0] for s in stops], dtype=np.float64)
    cols = np.array([s[1][:3] for s in stops], dtype=np.float64)
    alphas = np.array([s[1][3] for s in stops], dtype=np.float64)
    return {
        "kind": _local(chain[0].tag),
        "units": attrs.get("gradientUnits", "objectBoundingBox").strip(),
        "transform": parse_transform(attrs.get("gradientTransform", "")),
        "spread": attrs.get("spreadMethod", "pad").strip().lower(),
        "attrs": attrs,
        "offs": offs,
        "cols": cols,
        "alphas": alphas,
    }


def _grad_len(
    raw: Optional[str],
    default_frac: float,
    object_units: bool,
    ctx: _Ctx,
    axis: str,
) -> float:
    """Gradient coordinate: fraction in bbox units, user units otherwise."""
    if raw is None:
        value, is_pct = default_frac, True
    else:
        text = raw.strip()
        if text.endswith("%"):
            value, is_pct = _f(text[:-1], default_frac * 100.0) / 100.0, True
        else:
            value, is_pct = _f(text, default_frac), False
    if object_units:
        return value
    return value * ctx.length_ref(axis) if is_pct else value


def _gradient_arrays(
    grad: dict,
    window: Window,
    matrix: Matrix,
    bbox_user: Tuple[float, float, float, float],
    ctx: _Ctx,
) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Per-pixel (rgb, alpha) arrays for the paint window, or None."""
    x0, y0, w, h = window
    object_units = grad["units"] != "userSpaceOnUse"
    total = matrix
    if object_units:
        bx, by, bw, bh = bbox_user
        if bw <= 0.0 or bh <= 0.0:
            return None
        total = total @ _mat(bw, 0.0, 0.0, bh, bx, by)
    total = total @ grad["transform"]
    try:
        inv = np.linalg.inv(total)
    except np.linalg.LinAlgError:
        return None

    dev_x = x0 + np.arange(w, dtype=np.float64) + 0.5
    dev_y = y0 + np.arange(h, dtype=np.float64) + 0.5
    gx = inv[0, 0] * dev_x[None, :] + inv[0, 1] * dev_y[:, None] + inv[0, 2]
    gy = inv[1, 0] * dev_x[None, :] + inv[1, 1] * dev_y[:, None] + inv[1, 2]

    attrs = grad["attrs"]
    if grad["kind"] == "linearGradient":
        x1 = _grad_len(attrs.get("x1"), 0.0, object_units, ctx, "x")
        y1 = _grad_len(attrs.get("y1"), 0.0, object_units, ctx, "y")
        x2 = _grad_len(attrs.get("x2"), 1.0, object_units, ctx, "x")
        y2 = _grad_len(attrs.get("y2"), 0.0, object_units, ctx, "y")
        dx, dy = x2 - x1, y2 - y1
        denom = dx * dx + dy * dy
        if denom <= 0.0:
            t = np.zeros((h, w), dtype=np.float64)
        else:
            t = ((gx - x1) * dx + (gy - y1) * dy) / denom
    else:
        cx = _grad_len(attrs.get("cx"), 0.5, object_units, ctx, "x")
        cy = _grad_len(attrs.get("cy"), 0.5, object_units, ctx, "y")
        r = _grad_len(attrs.get("r"), 0.5, object_units, ctx, "other")
        if r <= 0.0:
            return None
        fx = (
            _grad_len(attrs.get("fx"), 0.0, object_units, ctx, "x")
            if attrs.get("fx") is not None
            else cx
        )
        fy = (
            _grad_len(attrs.get("fy"), 0.0, object_units, ctx, "y")
            if attrs.get("fy") is not None
            else cy
        )
        dxp = gx - fx
        dyp = gy - fy
        ex, ey = cx - fx, cy - fy
        a_coef = ex * ex + ey * ey - r * r
        b_half = dxp * ex + dyp * ey
        c2 = dxp * dxp + dyp * dyp
        with np.errstate(divide="ignore", invalid="ignore"):
            if abs(a_coef) < 1e-12:
                t = np.where(np.abs(b_half) > 1e-12, c2 / (2.0 * b_half), 0.0)
            else:
                disc = np.maximum(b_half * b_half - a_coef * c2, 0.0)
                root = np.sqrt(disc)
                t = (
                    (b_half + root) / a_coef
                    if a_coef > 0
                    else (b_half - root) / a_coef
                )
        t = np.nan_to_num(t, nan=0.0, posinf=1.0, neginf=0.0)

    spread = grad["spread"]
    if spread == "repeat":
        t = np.mod(t, 1.0)
    elif spread == "reflect":
        t = 1.0 - np.abs(np.mod(t, 2.0) - 1.0)
    t = np.clip(t, 0.0, 1.0)

    offs, cols, alphas = grad["offs"], grad["cols"], grad["alphas"]
    rgb = np.stack(
        [np.interp(t, offs, cols[:, i]) for i in range(3)], axis=-1
    )
    alpha = np.interp(t, offs, alphas)
    return rgb, alpha


# ---------------------------------------------------------------------------
# stroking


def _ccw_area(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(
        np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)
    )


def _oriented(ring: np.ndarray) -> Optional[np.ndarray]:
    """Normalize ring orientation so nonzero filling unions all pieces."""
    area = _ccw_area(ring)
    if abs(area) < 1e-18:
        return None
    return ring[::-1] if area > 0.0 else ring


def _circle_ring(center: np.ndarray, radius: float, segments: int) -> np.ndarray:
    ang = np.linspace(0.0, 2.0 * math.pi, segments, endpoint=False)
    return np.stack(
        [center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)],
        axis=1,
    )


def _stroke_rings(
    subpaths: Sequence[SubPath],
    half_width: float,
    cap: str,
    join: str,
    miter_limit: float,
    device_scale: float,
) -> List[np.ndarray]:
    """Stroke outline as same-orientation rings (user space, nonzero union)."""
    rings: List[np.ndarray] = []
    circle_n = int(
        np.clip(
            math.ceil(2.0 * math.pi * half_width * max(device_scale, 1e-9) / 2.5),
            8,
            256,
        )
    )

    def add(ring: np.ndarray) -> None:
        oriented = _oriented(ring)
        if oriented is not None:
            rings.append(oriented)

    for sp in subpaths:
        pts = np.asarray(sp.points, dtype=np.float64)
        if len(pts) >= 2:
            keep = np.ones(len(pts), dtype=bool)
            keep[1:] = np.any(np.abs(np.diff(pts, axis=0)) > 1e-12, axis=1)
            pts = pts[keep]
        closed = sp.closed
        if closed and len(pts) >= 2 and np.all(np.abs(pts[0] - pts[-1]) <= 1e-12):
            pts = pts[:-1]
        if len(pts) == 0:
            continue
        if len(pts) == 1:
            if cap == "round":
                add(_circle_ring(pts[0], half_width, circle_n))
            elif cap == "square":
                cx, cy = pts[0]
                hw = half_width
                add(
                    np.array(
                        [
                            [cx - hw, cy - hw],
                            [cx + hw, cy - hw],
                            [cx + hw, cy + hw],
                            [cx - hw, cy + hw],
                        ]
                    )
                )
            continue

        seg_from = pts
        seg_to = np.roll(pts, -1, axis=0) if closed else pts[1:]
        if not closed:
            seg_from = pts[:-1]
        delta = seg_to - seg_from
        lengths = np.hypot(delta[:, 0], delta[:, 1])
        dirs = delta / lengths[:, None]
        normals = np.stack([-dirs[:, 1], dirs[:, 0]], axis=1)

        hw = half_width
        for i in range(len(seg_from)):
            n = normals[i] * hw
            add(
                np.array(
                    [
                        seg_from[i] + n,
                        seg_to[i] + n,
                        seg_to[i] - n,
                        seg_from[i] - n,
                    ]
                )
            )

        # joins at interior vertices (all vertices when closed)
        joint_indices = (
            range(len(pts)) if closed else range(1, len(pts) - 1)
        )
        for v in joint_indices:
            p = pts[v]
            i_in = (v - 1) % len(dirs)
            i_out = v % len(dirs)
            if not closed:
                i_in, i_out = v - 1, v
            d0, d1 = dirs[i_in], dirs[i_out]
            cos_ang = float(np.clip(np.dot(d0, d1), -1.0, 1.0))
            if cos_ang > 1.0 - 1e-12:
                continue  # straight through
            if join == "round":
                add(_circle_ring(p, hw, circle_n))
                continue
            n0, n1 = normals[i_in], normals[i_out]
            add(np.array([p + n0 * hw, p + n1 * hw, p]))
            add(np.array([p - n0 * hw, p - n1 * hw, p]))
            if join == "miter":
                cross = float(d0[0] * d1[1] - d0[1] * d1[0])
                if abs(cross) < 1e-12:
                    continue  # reversal: bevel only
                cos_half = math.sqrt(max((1.0 + cos_ang) / 2.0, 1e-12))
                ratio = 1.0 / cos_half
                if ratio > miter_limit:
                    continue
                sigma = -1.0 if cross > 0.0 else 1.0
                mdir = n0 + n1
                norm = math.hypot(mdir[0], mdir[1])
                if norm < 1e-12:
                    continue
                m = p + sigma * (mdir / norm) * (hw * ratio)
                add(
                    np.array(
                        [p + sigma * n0 * hw, m, p + sigma * n1 * hw, p]
                    )
                )

        if not closed and cap != "butt":
            for endpoint, direction in (
                (pts[0], -dirs[0]),
                (pts[-1], dirs[-1]),
            ):
                if cap == "round":
                    add(_circle_ring(endpoint, hw, circle_n))
                else:  # square
                    n = np.array([-direction[1], direction[0]]) * hw
                    d = direction * hw
                    add(
                        np.array(
                            [
                                endpoint + n,
                                endpoint + n + d,
                                endpoint - n + d,
                                endpoint - n,
                            ]
                        )
                    )
    return rings


# ---------------------------------------------------------------------------
# shape geometry


def _shape_subpaths(
    tag: str, props: Dict[str, str], ctx: _Ctx, flatten_scale: float
) -> List[SubPath]:
    if tag == "path":
        data = props.get("d", "")
        if not data.strip():
            return []
        try:
            return flatten_path(data, scale=flatten_scale)
        except PathDataError:
            return []  # malformed path data: skip just this element

    if tag in ("polygon", "polyline"):
        nums = _NUM_RE.findall(props.get("points", ""))
        coords = [float(v) for v in nums[: len(nums) // 2 * 2]]
        pts = [
            (coords[i], coords[i + 1]) for i in range(0, len(coords), 2)
        ]
        if len(pts) < 2:
            return []
        return [SubPath(points=pts, closed=tag == "polygon")]

    if tag == "line":
        p1 = (
            _length(props.get("x1"), 0.0, ctx, "x"),
            _length(props.get("y1"), 0.0, ctx, "y"),
        )
        p2 = (
            _length(props.get("x2"), 0.0, ctx, "x"),
            _length(props.get("y2"), 0.0, ctx, "y"),
        )
        if p1 == p2:
            return []
        return [SubPath(points=[p1, p2], closed=False)]

    if tag == "rect":
        x = _length(props.get("x"), 0.0, ctx, "x")
        y = _length(props.get("y"), 0.0, ctx, "y")
        w = _length(props.get("width"), 0.0, ctx, "x")
        h = _length(props.get("height"), 0.0, ctx, "y")
        if w <= 0.0 or h <= 0.0:
            return []
        raw_rx, raw_ry = props.get("rx"), props.get("ry")
        rx = _length(raw_rx, 0.0, ctx, "x") if raw_rx not in (None, "auto") else None
        ry = _length(raw_ry, 0.0, ctx, "y") if raw_ry not in (None, "auto") else None
        if rx is None:
            rx = ry if ry is not None else 0.0
        if ry is None:
            ry = rx
        rx = min(max(rx, 0.0), w / 2.0)
        ry = min(max(ry, 0.0), h / 2.0)
        if rx <= 0.0 or ry <= 0.0:
            return [
                SubPath(
                    points=[(x, y), (x + w, y), (x + w, y + h), (x, y + h)],
                    closed=True,
                )
            ]
        d = (
            f"M{x + rx},{y} L{x + w - rx},{y} "
            f"A{rx},{ry} 0 0 1 {x + w},{y + ry} L{x + w},{y + h - ry} "
            f"A{rx},{ry} 0 0 1 {x + w - rx},{y + h} L{x + rx},{y + h} "
            f"A{rx},{ry} 0 0 1 {x},{y + h - ry} L{x},{y + ry} "
            f"A{rx},{ry} 0 0 1 {x + rx},{y} Z"
        )
        return flatten_path(d, scale=flatten_scale)

    if tag in ("circle", "ellipse"):
        cx = _length(props.get("cx"), 0.0, ctx, "x")
        cy = _length(props.get("cy"), 0.0, ctx, "y")
        if tag == "circle":
            rx = ry = _length(props.get("r"), 0.0, ctx, "other")
        else:
            rx = _length(props.get("rx"), 0.0, ctx, "x")
            ry = _length(props.get("ry"), 0.0, ctx, "y")
        if rx <= 0.0 or ry <= 0.0:
            return []
        d = (
            f"M{cx - rx},{cy} "
            f"A{rx},{ry} 0 1 1 {cx + rx},{cy} "
            f"A{rx},{ry} 0 1 1 {cx - rx},{cy} Z"
        )
        return flatten_path(d, scale=flatten_scale)

    return []


# ---------------------------------------------------------------------------
# painting


def _apply_paint(
    layer: _Layer,
    window: Window,
    coverage: np.ndarray,
    paint,
    opacity: float,
    matrix: Matrix,
    bbox_user: Tuple[float, float, float, float],
    ctx: _Ctx,
) -> None:
    opacity = min(max(opacity, 0.0), 1.0)
    if opacity <= 0.0:
        return
    if isinstance(paint, PaintRef):
        grad = _resolve_gradient(ctx, paint.ref_id)
        if grad is None:
            return
        arrays = _gradient_arrays(grad, window, matrix, bbox_user, ctx)
        if arrays is None:
            return
        rgb, alpha = arrays
        _composite_coverage(layer, window, coverage, rgb, alpha * opacity)
    else:
        r, g, b, a = paint
        _composite_coverage(
            layer, window, coverage, np.array([r, g, b]), a * opacity
        )


def _paint_shape(
    subpaths: Sequence[SubPath],
    matrix: Matrix,
    style: Style,
    layer: _Layer,
    ctx: _Ctx,
) -> None:
    if not subpaths:
        return
    device_scale = _device_scale(matrix)
    if device_scale <= 0.0:
        return
    current = parse_color(style["color"])

    all_user = np.concatenate(
        [np.asarray(sp.points, dtype=np.float64) for sp in subpaths]
    )
    bx0, by0 = all_user.min(axis=0)
    bx1, by1 = all_user.max(axis=0)
    bbox_user = (float(bx0), float(by0), float(bx1 - bx0), float(by1 - by0))

    fill_paint = parse_paint(style["fill"], current)
    if fill_paint is not NO_PAINT:
        rings = [
            _apply_matrix(matrix, np.asarray(sp.points, dtype=np.float64))
            for sp in subpaths
            if len(sp.points) >= 3
        ]
        if rings:
            rule = (
                "evenodd"
                if style["fill-rule"].strip().lower() == "evenodd"
                else "nonzero"
            )
            result = coverage_window(
                edges_from_rings(rings), ctx.width, ctx.height, rule
            )
            if result is not None:
                coverage, window = result
                _apply_paint(
                    layer,
                    window,
                    coverage,
                    fill_paint,
                    _f(style["fill-opacity"], 1.0),
                    matrix,
                    bbox_user,
                    ctx,
                )

    stroke_paint = parse_paint(style["stroke"], current)
    stroke_width = _f(style["stroke-width"], 1.0)
    if stroke_paint is not NO_PAINT and stroke_width > 0.0:
        outline = _stroke_rings(
            subpaths,
            stroke_width / 2.0,
            style["stroke-linecap"].strip().lower(),
            style["stroke-linejoin"].strip().lower(),
            max(_f(style["stroke-miterlimit"], 4.0), 1.0),
            device_scale,
        )
        rings = [_apply_matrix(matrix, ring) for ring in outline]
        if rings:
            result = coverage_window(
                edges_from_rings(rings), ctx.width, ctx.height, "nonzero"
            )
            if result is not None:
                coverage, window = result
                _apply_paint(
                    layer,
                    window,
                    coverage,
                    stroke_paint,
                    _f(style["stroke-opacity"], 1.0),
                    matrix,
                    bbox_user,
                    ctx,
                )


# ---------------------------------------------------------------------------
# text


def _font(size: float):
    from PIL import ImageFont

    return ImageFont.load_default(size=size)


_FONT_CACHE: Dict[float, object] = {}


def _font_cached(size: float):
    key = round(size * 4.0) / 4.0  # quarter-pixel buckets
    if key not in _FONT_CACHE:
        _FONT_CACHE[key] = _font(key)
    return _FONT_CACHE[key]


def _draw_text_chunk(
    text: str,
    user_x: float,
    user_y: float,
    style: Style,
    matrix: Matrix,
    layer: _Layer,
    ctx: _Ctx,
) -> float:
    """Paint one positioned run; returns its advance width in user units."""
    from PIL import Image, ImageDraw
    from scipy.ndimage import affine_transform

    device_scale = _device_scale(matrix)
    font_size = _f(style["font-size"], 16.0)
    if device_scale <= 0.0 or font_size <= 0.0:
        return 0.0
    ref_size = min(max(font_size * device_scale, 4.0), 512.0)
    k_eff = ref_size / font_size

    font = _font_cached(ref_size)
    measurer = ImageDraw.Draw(Image.new("L", (1, 1)))
    advance_ref = measurer.textlength(text, font=font)
    advance_user = float(advance_ref) / k_eff

    anchor = style["text-anchor"].strip().lower()
    shift = 0.0
    if anchor == "middle":
        shift = -advance_user / 2.0
    elif anchor == "end":
        shift = -advance_user

    bx0, by0, bx1, by1 = measurer.textbbox((0, 0), text, font=font, anchor="ls")
    if bx1 <= bx0 or by1 <= by0:
        return advance_user
    pad = 2
    mask_w = min(int(bx1 - bx0) + 2 * pad, 8192)
    mask_h = min(int(by1 - by0) + 2 * pad, 2048)
    mask_img = Image.new("L", (mask_w, mask_h), 0)
    origin = (pad - bx0, pad - by0)
    ImageDraw.Draw(mask_img).text(origin, text, fill=255, font=font, anchor="ls")

    q = (
        matrix
        @ _translate(user_x + shift, user_y)
        @ _mat(1.0 / k_eff, 0.0, 0.0, 1.0 / k_eff, 0.0, 0.0)
        @ _translate(-origin[0], -origin[1])
    )
    corners = _apply_matrix(
        q, np.array([[0, 0], [mask_w, 0], [mask_w, mask_h], [0, mask_h]], float)
    )
    wx0 = max(int(math.floor(corners[:, 0].min())) - 1, 0)
    wy0 = max(int(math.floor(corners[:, 1].min())) - 1, 0)
    wx1 = min(int(math.ceil(corners[:, 0].max())) + 1, ctx.width)
    wy1 = min(int(math.ceil(corners[:, 1].max())) + 1, ctx.height)
    if wx1 <= wx0 or wy1 <= wy0:
        return advance_user
    out_w, out_h = wx1 - wx0, wy1 - wy0

    try:
        inv = np.linalg.inv(q)
    except np.linalg.LinAlgError:
        return advance_user
    # scipy affine_transform works in (row, col) index space
    mi = np.array([[inv[1, 1], inv[1, 0]], [inv[0, 1], inv[0, 0]]])
    off_r = inv[1, 0] * (wx0 + 0.5) + inv[1, 1] * (wy0 + 0.5) + inv[1, 2] - 0.5
    off_c = inv[0, 0] * (wx0 + 0.5) + inv[0, 1] * (wy0 + 0.5) + inv[0, 2] - 0.5
    coverage = affine_transform(
        np.asarray(mask_img, dtype=np.float64) / 255.0,
        mi,
        offset=(off_r, off_c),
        output_shape=(out_h, out_w),
        order=1,
        mode="constant",
        cval=0.0,
        prefilter=False,
    )
    coverage = np.clip(coverage, 0.0, 1.0)

    current = parse_color(style["color"])
    fill_paint = parse_paint(style["fill"], current)
    if fill_paint is NO_PAINT:
        return advance_user
    bbox_user = (
        user_x + shift + bx0 / k_eff,
        user_y + by0 / k_eff,
        (bx1 - bx0) / k_eff,
        (by1 - by0) / k_eff,
    )
    _apply_paint(
        layer,
        (wx0, wy0, out_w, out_h),
        coverage,
        fill_paint,
        _f(style["fill-opacity"], 1.0),
        matrix,
        bbox_user,
        ctx,
    )
    return advance_user


def _collapse_ws(raw: Optional[str]) -> str:
    if not raw:
        return ""
    return re.sub(r"\s+", " ", raw)


def _render_text(
    el: ET.Element,
    props: Dict[str, str],
    matrix: Matrix,
    style: Style,
    layer: _Layer,
    ctx: _Ctx,
) -> None:
    pen_x = _length(props.get("x"), 0.0, ctx, "x")
    pen_y = _length(props.get("y"), 0.0, ctx, "y")

    def emit(text: str, run_style: Style) -> None:
        nonlocal pen_x
        if run_style["visibility"].strip().lower() in ("hidden", "collapse"):
            return
        chunk = _collapse_ws(text)
        if not chunk.strip():
            return
        pen_x += _draw_text_chunk(
            chunk, pen_x, pen_y, run_style, matrix, layer, ctx
        )

    emit(el.text or "", style)
    for child in el:
        if _local(child.tag) == "tspan":
            child_props = _element_props(child)
            child_style = _inherit(style, child_props)
            if child_props.get("x") is not None:
                pen_x = _length(child_props.get("x"), pen_x, ctx, "x")
            if child_props.get("y") is not None:
                pen_y = _length(child_props.get("y"), pen_y, ctx, "y")
            pen_x += _f(child_props.get("dx"), 0.0)
            pen_y += _f(child_props.get("dy"), 0.0)
            inner = "".join(child.itertext())
            emit(inner, child_style)
        emit(child.tail or "", style)


# ---------------------------------------------------------------------------
# tree walk


_SHAPE_TAGS = frozenset(
    {"rect", "circle", "ellipse", "line", "polyline", "polygon", "path"}
)


def _render_children(
    el: ET.Element, matrix: Matrix, style: Style, layer: _Layer, ctx: _Ctx
) -> None:
    for child in el:
        _render_element(child, matrix, style, layer, ctx)


def _render_element(
    el: ET.Element, matrix: Matrix, style: Style, layer: _Layer, ctx: _Ctx
) -> None:
    tag = _local(el.tag)
    if tag in _DEFINITION_ELEMENTS:
        return
    props = _element_props(el)
    if props.get("display", "").strip().lower() == "none":
        return
    style = _inherit(style, props)
    transform = props.get("transform")
    if transform:
        matrix = matrix @ parse_transform(transform)
    opacity = min(max(_f(props.get("opacity"), 1.0), 0.0), 1.0)
    if opacity <= 0.0:
        return
    if opacity < 1.0:
        sub = _Layer(ctx.height, ctx.width)
        _render_content(el, tag, props, matrix, style, sub, ctx)
        _composite_layer(layer, sub, opacity)
    else:
        _render_content(el, tag, props, matrix, style, layer, ctx)


def _render_content(
    el: ET.Element,
    tag: str,
    props: Dict[str, str],
    matrix: Matrix,
    style: Style,
    layer: _Layer,
    ctx: _Ctx,
) -> None:
    hidden = style["visibility"].strip().lower() in ("hidden", "collapse")

    if tag in ("g", "a"):
        _render_children(el, matrix, style, layer, ctx)
    elif tag == "svg":  # nested viewport, treated as a positioned group
        offset = _translate(
            _length(props.get("x"), 0.0, ctx, "x"),
            _length(props.get("y"), 0.0, ctx, "y"),
        )
        _render_children(el, matrix @ offset, style, layer, ctx)
    elif tag == "switch":
        for child in el:
            if _local(child.tag) not in _DEFINITION_ELEMENTS:
                _render_element(child, matrix, style, layer, ctx)
                break
    elif tag == "use":
        _render_use(el, props, matrix, style, layer, ctx)
    elif tag == "text":
        if not hidden:
            _render_text(el, props, matrix, style, layer, ctx)
    elif tag in _SHAPE_TAGS:
        if not hidden:
            flatten_scale = _device_scale(matrix)
            subpaths = _shape_subpaths(tag, props, ctx, flatten_scale)
            _paint_shape(subpaths, matrix, style, layer, ctx)


def _render_use(
    el: ET.Element,
    props: Dict[str, str],
    matrix: Matrix,
    style: Style,
    layer: _Layer,
    ctx: _Ctx,
) -> None:
    href = (props.get("href") or "").strip()
    if not href.startswith("#"):
        return
    target = ctx.defs.get(href[1:])
    if target is None:
        return
    if ctx.use_depth >= 32:
        raise RenderFailure("use reference chain exceeds depth 32")
    placed = matrix @ _translate(
        _length(props.get("x"), 0.0, ctx, "x"),
        _length(props.get("y"), 0.0, ctx, "y"),
    )
    ctx.use_depth += 1
    try:
        if _local(target.tag) == "symbol":
            symbol_style = _inherit(style, _element_props(target))
            _render_children(target, placed, symbol_style, layer, ctx)
        else:
            _render_element(target, placed, style, layer, ctx)
    finally:
        ctx.use_depth -= 1


# ---------------------------------------------------------------------------
# entry point


def _collect_ids(root: ET.Element) -> Dict[str, ET.Element]:
    defs: Dict[str, ET.Element] = {}
    for el in root.iter():
        el_id = el.get("id")
        if el_id and el_id not in defs:
            defs[el_id] = el
    return defs


def render_svg(doc, max_dim: int = DEFAULT_MAX_DIM) -> RenderedImage:
    """Rasterize an SvgDocument (or raw SVG string) over a white background.

    The longer viewBox side maps to `max_dim` device pixels. Raises
    RenderFailure for documents that cannot be rendered at all; malformed
    geometry inside an otherwise valid document is skipped element-wise.
    """
    if max_dim < 1:
        raise ValueError("max_dim must be >= 1")
    if isinstance(doc, SvgDocument):
        source = doc.source
        view_box: Optional[Tuple[float, float, float, float]] = doc.view_box
        source_hash = doc.source_hash
    else:
        source = str(doc)
        view_box = None
        source_hash = sha256_text(source)

    try:
        root = ET.fromstring(source)
    except ET.ParseError as exc:
        raise RenderFailure(f"not well-formed XML: {exc}") from exc
    if _local(root.tag) != "svg":
        raise RenderFailure(f"root element is <{_local(root.tag)}>, not <svg>")
    if view_box is None:
        try:
            view_box = derive_view_box(root)
        except NotRepairable as exc:
            raise RenderFailure(str(exc)) from exc

    vx, vy, vbw, vbh = view_box
    scale = max_dim / max(vbw, vbh)
    width = max(1, round(vbw * scale))
    height = max(1, round(vbh * scale))

    try:
        ctx = _Ctx(width, height, view_box, _collect_ids(root))
        layer = _Layer(height, width)
        base_matrix = _mat(scale, 0.0, 0.0, scale, -vx * scale, -vy * scale)
        root_style = _inherit(dict(_INHERITED_DEFAULTS), _element_props(root))
        _render_children(root, base_matrix, root_style, layer, ctx)

        alpha = layer.alpha[..., None]
        rgb = layer.color * alpha + (1.0 - alpha)  # over opaque white
        rgb8 = np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)
        pixels = np.dstack(
            [rgb8, np.full((height, width), 255, dtype=np.uint8)]
        )
    except RenderFailure:
        raise
    except Exception as exc:  # engine bug or pathological input
        raise RenderFailure(f"{type(exc).__name__}: {exc}") from exc

    return RenderedImage(
        pixels=pixels,
        width=width,
        height=height,
        render_scale=scale,
        source_hash=source_hash,
    )
