"""SVG path-data parsing and deterministic flattening.

Curves are flattened with subdivision counts derived from estimated device
length, clamped to [4, 128] segments, so output geometry is a pure function
of (path data, scale). Malformed data raises PathDataError.
"""

import math
import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

Point = Tuple[float, float]


class PathDataError(ValueError):
    pass


@dataclass
class SubPath:
    points: List[Point]
    closed: bool


_NUMBER = re.compile(r"[-+]?(?:\d*\.\d+|\d+\.?)(?:[eE][-+]?\d+)?")
_SEPARATORS = " \t\r\n,"
_COMMANDS = "MmLlHhVvCcSsQqTtAaZz"


class _Scanner:
    def __init__(self, data: str):
        self.data = data
        self.pos = 0

    def _skip(self) -> None:
        while self.pos < len(self.data) and self.data[self.pos] in _SEPARATORS:
            self.pos += 1

    def at_end(self) -> bool:
        self._skip()
        return self.pos >= len(self.data)

    def peek_command(self) -> Optional[str]:
        self._skip()
        if self.pos < len(self.data) and self.data[self.pos] in _COMMANDS:
            return self.data[self.pos]
        return None

    def take_command(self) -> str:
        cmd = self.peek_command()
        if cmd is None:
            raise PathDataError(
                f"expected command at position {self.pos}: {self.data[self.pos:self.pos+12]!r}"
            )
        self.pos += 1
        return cmd

    def has_number(self) -> bool:
        self._skip()
        m = _NUMBER.match(self.data, self.pos)
        return m is not None and m.group() not in ("", "+", "-")

    def take_number(self) -> float:
        self._skip()
        m = _NUMBER.match(self.data, self.pos)
        if m is None or not m.group():
            raise PathDataError(f"expected number at position {self.pos}")
        self.pos = m.end()
        return float(m.group())

    def take_flag(self) -> int:
        self._skip()
        if self.pos < len(self.data) and self.data[self.pos] in "01":
            flag = int(self.data[self.pos])
            self.pos += 1
            return flag
        raise PathDataError(f"expected arc flag at position {self.pos}")


def _subdivisions(device_length: float) -> int:
    return int(np.clip(math.ceil(device_length / 2.5), 4, 128))


def _cubic_points(p0, p1, p2, p3, scale: float) -> List[Point]:
    hull = (
        math.dist(p0, p1) + math.dist(p1, p2) + math.dist(p2, p3)
    )
    n = _subdivisions(hull * scale)
    t = np.linspace(0.0, 1.0, n + 1)[1:]
    mt = 1.0 - t
    x = (
        mt**3 * p0[0]
        + 3 * mt**2 * t * p1[0]
        + 3 * mt * t**2 * p2[0]
        + t**3 * p3[0]
    )
    y = (
        mt**3 * p0[1]
        + 3 * mt**2 * t * p1[1]
        + 3 * mt * t**2 * p2[1]
        + t**3 * p3[1]
    )
    return list(zip(x.tolist(), y.tolist()))


def _quad_points(p0, p1, p2, scale: float) -> List[Point]:
    hull = math.dist(p0, p1) + math.dist(p1, p2)
    n = _subdivisions(hull * scale)
    t = np.linspace(0.0, 1.0, n + 1)[1:]
    mt = 1.0 - t
    x = mt**2 * p0[0] + 2 * mt * t * p1[0] + t**2 * p2[0]
    y = mt**2 * p0[1] + 2 * mt * t * p1[1] + t**2 * p2[1]
    return list(zip(x.tolist(), y.tolist()))


def arc_points(
    p0: Point,
    rx: float,
    ry: float,
    x_rotation_deg: float,
    large_arc: int,
    sweep: int,
    p1: Point,
    scale: float,
) -> List[Point]:
    """Endpoint-parameterized elliptical arc, flattened. Degenerate radii
    fall back to a straight line per the SVG arc rules."""
    if p0 == p1:
        return []
    rx, ry = abs(rx), abs(ry)
    if rx == 0 or ry == 0:
        return [p1]
    phi = math.radians(x_rotation_deg % 360.0)
    cos_phi, sin_phi = math.cos(phi), math.sin(phi)
    dx2, dy2 = (p0[0] - p1[0]) / 2.0, (p0[1] - p1[1]) / 2.0
    x1p = cos_phi * dx2 + sin_phi * dy2
    y1p = -sin_phi * dx2 + cos_phi * dy2
    lam = (x1p / rx) ** 2 + (y1p / ry) ** 2
    if lam > 1.0:
        s = math.sqrt(lam)
        rx *= s
        ry *= s
    num = rx**2 * ry**2 - rx**2 * y1p**2 - ry**2 * x1p**2
    den = rx**2 * y1p**2 + ry**2 * x1p**2
    coef = math.sqrt(max(0.0, num / den)) if den > 0 else 0.0
    if large_arc == sweep:
        coef = -coef
    cxp = coef * rx * y1p / ry
    cyp = -coef * ry * x1p / rx
    cx = cos_phi * cxp - sin_phi * cyp + (p0[0] + p1[0]) / 2.0
    cy = sin_phi * cxp + cos_phi * cyp + (p0[1] + p1[1]) / 2.0

    def angle(ux, uy, vx, vy):
        dot = ux * vx + uy * vy
        norm = math.hypot(ux, uy) * math.hypot(vx, vy)
        if norm == 0:
            return 0.0
        a = math.acos(max(-1.0, min(1.0, dot / norm)))
        if ux * vy - uy * vx < 0:
            a = -a
        return a

    theta1 = angle(1, 0, (x1p - cxp) / rx, (y1p - cyp) / ry)
    dtheta = angle(
        (x1p - cxp) / rx, (y1p - cyp) / ry, (-x1p - cxp) / rx, (-y1p - cyp) / ry
    )
    if not sweep and dtheta > 0:
        dtheta -= 2 * math.pi
    elif sweep and dtheta < 0:
        dtheta += 2 * math.pi

    n = _subdivisions(abs(dtheta) * max(rx, ry) * scale)
    t = np.linspace(0.0, 1.0, n + 1)[1:]
    theta = theta1 + dtheta * t
    ex = rx * np.cos(theta)
    ey = ry * np.sin(theta)
    x = cos_phi * ex - sin_phi * ey + cx
    y = sin_phi * ex + cos_phi * ey + cy
    return list(zip(x.tolist(), y.tolist()))


def flatten_path(data: str, scale: float = 1.0) -> List[SubPath]:
    """Parse and flatten path data into polyline subpaths (user units)."""
    scanner = _Scanner(data)
    subpaths: List[SubPath] = []
    points: List[Point] = []
    closed = False
    cur: Point = (0.0, 0.0)
    start: Point = (0.0, 0.0)
    prev_cubic_ctrl: Optional[Point] = None
    prev_quad_ctrl: Optional[Point] = None
    command: Optional[str] = None

    def flush():
        nonlocal points, closed
        if len(points) >= 2:
            subpaths.append(SubPath(points=points, closed=closed))
        points = []
        closed = False

    first = scanner.peek_command()
    if not scanner.at_end() and first not in ("M", "m"):
        raise PathDataError("path data must start with a moveto")

    while not scanner.at_end():
        next_cmd = scanner.peek_command()
        if next_cmd is not None:
            command = scanner.take_command()
        elif command is None:
            raise PathDataError("path data must start with a command")
        elif command in "Zz":
            raise PathDataError("numbers after closepath without a command")
        elif command in "Mm":
            # implicit lineto after moveto
            command = "L" if command == "M" else "l"
        rel = command.islower()
        op = command.upper()
        new_cubic = None
        new_quad = None
        if op not in ("Z", "M") and not points:
            points = [cur]  # drawing directly after Z resumes at the start point

        if op == "Z":
            closed = True
            flush()
            cur = start
        elif op == "M":
            x, y = scanner.take_number(), scanner.take_number()
            if rel:
                x, y = cur[0] + x, cur[1] + y
            flush()
            cur = (x, y)
            start = cur
            points = [cur]
        elif op == "L":
            x, y = scanner.take_number(), scanner.take_number()
            if rel:
                x, y = cur[0] + x, cur[1] + y
            cur = (x, y)
            points.append(cur)
        elif op == "H":
            x = scanner.take_number()
            cur = (cur[0] + x if rel else x, cur[1])
            points.append(cur)
        elif op == "V":
            y = scanner.take_number()
            cur = (cur[0], cur[1] + y if rel else y)
            points.append(cur)
        elif op == "C":
            nums = [scanner.take_number() for _ in range(6)]
            if rel:
                nums = [
                    nums[0] + cur[0], nums[1] + cur[1],
                    nums[2] + cur[0], nums[3] + cur[1],
                    nums[4] + cur[0], nums[5] + cur[1],
                ]
            p1, p2, p3 = (nums[0], nums[1]), (nums[2], nums[3]), (nums[4], nums[5])
            points.extend(_cubic_points(cur, p1, p2, p3, scale))
            cur = p3
            new_cubic = p2
        elif op == "S":
            nums = [scanner.take_number() for _ in range(4)]
            if rel:
                nums = [nums[0] + cur[0], nums[1] + cur[1], nums[2] + cur[0], nums[3] + cur[1]]
            if prev_cubic_ctrl is not None:
                p1 = (2 * cur[0] - prev_cubic_ctrl[0], 2 * cur[1] - prev_cubic_ctrl[1])
            else:
                p1 = cur
            p2, p3 = (nums[0], nums[1]), (nums[2], nums[3])
            points.extend(_cubic_points(cur, p1, p2, p3, scale))
            cur = p3
            new_cubic = p2
        elif op == "Q":
            nums = [scanner.take_number() for _ in range(4)]
            if rel:
                nums = [nums[0] + cur[0], nums[1] + cur[1], nums[2] + cur[0], nums[3] + cur[1]]
            p1, p2 = (nums[0], nums[1]), (nums[2], nums[3])
            points.extend(_quad_points(cur, p1, p2, scale))
            cur = p2
            new_quad = p1
        elif op == "T":
            nums = [scanner.take_number() for _ in range(2)]
            if rel:
                nums = [nums[0] + cur[0], nums[1] + cur[1]]
            if prev_quad_ctrl is not None:
                p1 = (2 * cur[0] - prev_quad_ctrl[0], 2 * cur[1] - prev_quad_ctrl[1])
            else:
                p1 = cur
            p2 = (nums[0], nums[1])
            points.extend(_quad_points(cur, p1, p2, scale))
            cur = p2
            new_quad = p1
        elif op == "A":
            rx, ry, rot = (
                scanner.take_number(),
                scanner.take_number(),
                scanner.take_number(),
            )
            large, sweep = scanner.take_flag(), scanner.take_flag()
            x, y = scanner.take_number(), scanner.take_number()
            if rel:
                x, y = cur[0] + x, cur[1] + y
            points.extend(arc_points(cur, rx, ry, rot, large, sweep, (x, y), scale))
            cur = (x, y)
        else:
            raise PathDataError(f"unsupported command {command!r}")

        prev_cubic_ctrl = new_cubic
        prev_quad_ctrl = new_quad

    flush()
    return subpaths


def validate_path_data(data: str) -> None:
    """Raise PathDataError when `data` is not valid path syntax."""
    flatten_path(data, scale=0.0)
