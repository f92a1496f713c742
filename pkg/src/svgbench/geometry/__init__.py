"""Numerical geometry: binary masks -> adaptively simplified polygons whose
area is nearly preserved, plus quadrilateral handling for text placement.

Hot loops (boundary tracing, vertex decimation) run in a compiled extension
when available; `active_impl_name()` reports which implementation is live.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy import ndimage

from ._dispatch import active_impl_name, kernels
from .masks import decode_rle, encode_rle, load_mask

__all__ = [
    "Polygon",
    "Quad",
    "DegeneratePolygon",
    "DegenerateQuad",
    "CannotSatisfy",
    "EmptyMask",
    "polygon_area",
    "simplify_polygon_adaptive",
    "mask_to_polygons",
    "quad_to_placement",
    "polygon_to_path_data",
    "active_impl_name",
    "load_mask",
    "encode_rle",
    "decode_rle",
]

_AREA_EPS = 1e-9

# Defaults for contour simplification; per-contour vertex budget.
DEFAULT_AREA_TOL = 0.01
DEFAULT_MAX_VERTICES = 64


class DegeneratePolygon(ValueError):
    """Polygon area is zero within epsilon."""


class DegenerateQuad(ValueError):
    """Quad has a zero-length edge."""


class EmptyMask(ValueError):
    """Mask contains no foreground pixels."""


class CannotSatisfy(ValueError):
    """No vertex subset meets both the area tolerance and the budget."""

    def __init__(self, area_tol: float, max_vertices: int):
        super().__init__(
            f"no subset within max_vertices={max_vertices} keeps relative "
            f"area drift <= {area_tol}"
        )
        self.area_tol = area_tol
        self.max_vertices = max_vertices


def _signed_area(vertices: Sequence[Tuple[float, float]]) -> float:
    xs = np.asarray([v[0] for v in vertices], dtype=np.float64)
    ys = np.asarray([v[1] for v in vertices], dtype=np.float64)
    return float(kernels.shoelace_signed(xs, ys))


@dataclass(frozen=True)
class Polygon:
    """Closed polygon; stored counter-clockwise (positive shoelace area).

    Image-space polygons use y-down axes; "counter-clockwise" here means
    positive shoelace under the stored coordinates.
    """

    vertices: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise DegeneratePolygon("polygon needs at least 3 vertices")
        for a, b in zip(self.vertices, self.vertices[1:]):
            if a == b:
                raise DegeneratePolygon("consecutive duplicate vertices")

    @classmethod
    def from_vertices(cls, points: Sequence[Tuple[float, float]]) -> "Polygon":
        """Normalize: drop a closing duplicate, collapse consecutive
        duplicates, enforce positive orientation."""
        pts = [(float(x), float(y)) for x, y in points]
        if len(pts) > 1 and pts[0] == pts[-1]:
            pts = pts[:-1]
        cleaned: List[Tuple[float, float]] = []
        for p in pts:
            if not cleaned or cleaned[-1] != p:
                cleaned.append(p)
        if len(cleaned) > 1 and cleaned[0] == cleaned[-1]:
            cleaned.pop()
        if len(cleaned) < 3:
            raise DegeneratePolygon("fewer than 3 distinct vertices")
        area = _signed_area(cleaned)
        if abs(area) <= _AREA_EPS:
            raise DegeneratePolygon("zero-area polygon")
        if area < 0:
            cleaned.reverse()
        return cls(tuple(cleaned))


@dataclass(frozen=True)
class Quad:
    """Exactly 4 corners in reading order: top-left, top-right,
    bottom-right, bottom-left. Must be simple (non-self-intersecting)."""

    corners: Tuple[
        Tuple[float, float],
        Tuple[float, float],
        Tuple[float, float],
        Tuple[float, float],
    ]

    def __post_init__(self):
        if len(self.corners) != 4:
            raise ValueError("quad needs exactly 4 corners")
        c = self.corners
        if _segments_cross(c[0], c[1], c[2], c[3]) or _segments_cross(
            c[1], c[2], c[3], c[0]
        ):
            raise ValueError("quad is self-intersecting")


def _segments_cross(a, b, c, d) -> bool:
    """Proper intersection of open segments ab and cd."""

    def orient(p, q, r):
        v = (q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1])
        if v > 0:
            return 1
        if v < 0:
            return -1
        return 0

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def polygon_area(p: Polygon) -> float:
    """Shoelace area in px^2; positive by the orientation invariant."""
    area = _signed_area(p.vertices)
    if abs(area) <= _AREA_EPS:
        raise DegeneratePolygon("zero-area polygon")
    return area


def simplify_polygon_adaptive(
    p: Polygon,
    area_tol: float = DEFAULT_AREA_TOL,
    max_vertices: int = DEFAULT_MAX_VERTICES,
) -> Polygon:
    """Reduce vertex count while keeping |area drift| / area <= area_tol.

    Vertices of the output are a subset of the input's; deterministic.
    Raises CannotSatisfy when no subset within the budget meets the
    tolerance.
    """
    if not (0.0 < area_tol <= 0.1):
        raise ValueError(f"area_tol must be in (0, 0.1], got {area_tol}")
    if max_vertices < 3:
        raise ValueError(f"max_vertices must be >= 3, got {max_vertices}")
    area0 = abs(polygon_area(p))
    if len(p.vertices) <= 3:
        return p
    xs = np.asarray([v[0] for v in p.vertices], dtype=np.float64)
    ys = np.asarray([v[1] for v in p.vertices], dtype=np.float64)
    keep, ok = kernels.decimate_ring(xs, ys, area_tol * area0, max_vertices)
    if not ok:
        raise CannotSatisfy(area_tol, max_vertices)
    kept = [p.vertices[i] for i in range(len(p.vertices)) if keep[i]]
    out = Polygon.from_vertices(kept)
    if len(out.vertices) > max_vertices:
        # from_vertices dedup can only shrink; defensive.
        raise CannotSatisfy(area_tol, max_vertices)
    if abs(abs(polygon_area(out)) - area0) > area_tol * area0 + _AREA_EPS:
        raise CannotSatisfy(area_tol, max_vertices)
    return out


_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)
MIN_COMPONENT_AREA_PX = 9


def mask_to_polygons(mask: np.ndarray) -> List[Polygon]:
    """One polygon per 4-connected foreground component with area >= 9 px².

    Contours are traced on the pixel-boundary lattice, so a component's
    polygon area equals its pixel count exactly. Holes are ignored (outer
    contours only); with fill-rule nonzero the rendered polygon fills the
    hole area too.
    """
    grid = np.asarray(mask)
    if grid.ndim != 2:
        raise ValueError("mask must be 2-D")
    binary = grid != 0
    if not binary.any():
        raise EmptyMask("mask has no foreground pixels")
    labels, count = ndimage.label(binary, structure=_FOUR_CONN)
    slices = ndimage.find_objects(labels)
    polygons: List[Polygon] = []
    for idx in range(count):
        sl = slices[idx]
        component = labels[sl] == (idx + 1)
        if int(component.sum()) < MIN_COMPONENT_AREA_PX:
            continue
        padded = np.zeros(
            (component.shape[0] + 2, component.shape[1] + 2), dtype=np.uint8
        )
        padded[1:-1, 1:-1] = component
        first = np.argwhere(component)[0]  # scan order: min row, then col
        ring = kernels.trace_outer_ring(padded, int(first[1]), int(first[0]))
        offset_x = sl[1].start
        offset_y = sl[0].start
        verts = [(float(x) + offset_x, float(y) + offset_y) for x, y in ring]
        polygons.append(Polygon.from_vertices(verts))
    return polygons


def quad_to_placement(q: Quad) -> Dict[str, object]:
    """Text placement for an OCR quad: baseline anchor at the bottom-left
    corner, rotation from the top edge, font size from the mean of the
    left/right edge lengths."""
    tl, tr, br, bl = q.corners
    top = (tr[0] - tl[0], tr[1] - tl[1])
    left = (bl[0] - tl[0], bl[1] - tl[1])
    right = (br[0] - tr[0], br[1] - tr[1])
    for edge in (top, left, right, (br[0] - bl[0], br[1] - bl[1])):
        if math.hypot(edge[0], edge[1]) <= _AREA_EPS:
            raise DegenerateQuad("zero-length edge")
    rotation = math.degrees(math.atan2(top[1], top[0]))
    font_size = (math.hypot(*left) + math.hypot(*right)) / 2.0
    return {
        "anchor": (float(bl[0]), float(bl[1])),
        "rotation_deg": rotation,
        "font_size_px": font_size,
    }


def polygon_to_path_data(p: Polygon, precision: int = 2) -> str:
    """SVG path data for a closed polygon: "M x y L x y ... Z"."""
    fmt = f"{{:.{precision}f}}"

    def num(v: float) -> str:
        text = fmt.format(v)
        if "." in text:
            text = text.rstrip("0").rstrip(".")
        return text if text not in ("-0", "") else "0"

    parts = [f"M {num(p.vertices[0][0])} {num(p.vertices[0][1])}"]
    for x, y in p.vertices[1:]:
        parts.append(f"L {num(x)} {num(y)}")
    parts.append("Z")
    return " ".join(parts)
