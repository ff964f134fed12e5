"""Word measurement and 2D collision primitives.

A rendered word is approximated by a two-level tree of axis-aligned boxes:
a root box covering the whole word and one child box per character, sized
from a bundled font metrics table (advance widths in 1000 units/em plus a
line-height constant). Intersection tests run at the child level with a
root-level early out; frame containment and separation distances use the
root box only, which is conservative because every child lies inside the
root.

Coordinate conventions: y grows upward, a tree's local origin is the
center of its root box, and a placement position refers to that center.
Box overlap is open (edge contact does not intersect) while frame
containment is closed (edge contact is still inside).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

Box = tuple[float, float, float, float]  # (x0, y0, x1, y1), x0 <= x1, y0 <= y1

HORIZONTAL = "horizontal"
VERTICAL = "vertical"

# Archimedean spiral defaults: radius gain per radian, radians per step.
DEFAULT_SPIRAL_A = 1.5
DEFAULT_SPIRAL_B = 0.35


@dataclass(frozen=True)
class Frame:
    """Axis-aligned layout area centered on the origin."""

    width: float
    height: float

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"frame dimensions must be positive, got {self.width}x{self.height}")

    def contains_box(self, box: Box) -> bool:
        hw, hh = self.width / 2.0, self.height / 2.0
        x0, y0, x1, y1 = box
        return x0 >= -hw and x1 <= hw and y0 >= -hh and y1 <= hh

    def contains_point(self, x: float, y: float) -> bool:
        return abs(x) <= self.width / 2.0 and abs(y) <= self.height / 2.0

    def scaled(self, factor: float) -> "Frame":
        return Frame(self.width * factor, self.height * factor)


class FontMetrics:
    """Per-character advance widths and vertical extents for one bundled face.

    All values are fractions of an em; multiplying by a point size yields
    point dimensions. Characters missing from the table fall back to the
    table's average advance with a full-height extent.
    """

    def __init__(self, family: str, line_height: float, ascent: float, descent: float,
                 x_height: float, advances: dict[str, float],
                 xheight_chars: str, descender_chars: str):
        self.family = family
        self.line_height = line_height
        self.ascent = ascent
        self.descent = descent
        self.x_height = x_height
        self.advances = dict(advances)
        self.xheight_chars = frozenset(xheight_chars)
        self.descender_chars = frozenset(descender_chars)
        self.average_advance = sum(self.advances.values()) / len(self.advances)
        # Pad the line box symmetrically so ascent + descent sit centered in it.
        pad = (line_height - ascent - descent) / 2.0
        self.line_top = ascent + pad
        self.line_bottom = -(descent + pad)

    @classmethod
    def from_json(cls, payload: dict) -> "FontMetrics":
        upm = float(payload["units_per_em"])
        return cls(
            family=payload["family"],
            line_height=payload["line_height"] / upm,
            ascent=payload["ascent"] / upm,
            descent=payload["descent"] / upm,
            x_height=payload["x_height"] / upm,
            advances={ch: adv / upm for ch, adv in payload["advances"].items()},
            xheight_chars=payload["xheight_chars"],
            descender_chars=payload["descender_chars"],
        )

    def advance(self, ch: str) -> float:
        return self.advances.get(ch, self.average_advance)

    def char_extent(self, ch: str) -> tuple[float, float]:
        """Vertical extent (bottom, top) of one glyph box, baseline at 0."""
        bottom = -self.descent if ch in self.descender_chars else 0.0
        top = self.x_height if ch in self.xheight_chars else self.ascent
        return bottom, top


@lru_cache(maxsize=1)
def bundled_metrics() -> FontMetrics:
    payload = json.loads(resources.files("wordstorm.data").joinpath("font_metrics.json").read_text("utf-8"))
    return FontMetrics.from_json(payload)


@dataclass(frozen=True)
class GlyphBoxTree:
    """Root box plus per-character boxes, local origin at the root center."""

    word: str
    size: float
    orientation: str
    root: Box
    children: tuple[Box, ...]

    @property
    def width(self) -> float:
        return self.root[2] - self.root[0]

    @property
    def height(self) -> float:
        return self.root[3] - self.root[1]

    def root_at(self, pos: tuple[float, float]) -> Box:
        x, y = pos
        x0, y0, x1, y1 = self.root
        return (x0 + x, y0 + y, x1 + x, y1 + y)

    def children_at(self, pos: tuple[float, float]) -> list[Box]:
        x, y = pos
        return [(c[0] + x, c[1] + y, c[2] + x, c[3] + y) for c in self.children]


def _rotate_ccw(box: Box) -> Box:
    x0, y0, x1, y1 = box
    return (-y1, x0, -y0, x1)


@lru_cache(maxsize=65536)
def _unit_tree(word: str, orientation: str) -> tuple[Box, tuple[Box, ...]]:
    m = bundled_metrics()
    children = []
    cursor = 0.0
    for ch in word:
        adv = m.advance(ch)
        bottom, top = m.char_extent(ch)
        children.append((cursor, bottom, cursor + adv, top))
        cursor += adv
    width = cursor if cursor > 0 else m.average_advance
    root = (0.0, m.line_bottom, width, m.line_top)
    # Recenter so the root's center is the local origin.
    cx = width / 2.0
    cy = (m.line_top + m.line_bottom) / 2.0
    root = (root[0] - cx, root[1] - cy, root[2] - cx, root[3] - cy)
    children = [(c[0] - cx, c[1] - cy, c[2] - cx, c[3] - cy) for c in children]
    if orientation == VERTICAL:
        root = _rotate_ccw(root)
        children = [_rotate_ccw(c) for c in children]
    return root, tuple(children)


def measure(word: str, size: float, orientation: str = HORIZONTAL) -> GlyphBoxTree:
    """Build the box tree for a word at a font size, in points.

    Characters outside the metrics table fall back to the average advance.
    All dimensions scale linearly with size.
    """
    if size <= 0:
        raise ValueError(f"size must be positive, got {size}")
    if orientation not in (HORIZONTAL, VERTICAL):
        raise ValueError(f"unknown orientation {orientation!r}")
    root, children = _unit_tree(word, orientation)
    s = float(size)

    def scale(b: Box) -> Box:
        return (b[0] * s, b[1] * s, b[2] * s, b[3] * s)

    return GlyphBoxTree(word, s, orientation, scale(root), tuple(scale(c) for c in children))


def boxes_overlap(a: Box, b: Box) -> bool:
    """Open overlap test: boxes sharing only an edge do not overlap."""
    return a[0] < b[2] and b[0] < a[2] and a[1] < b[3] and b[1] < a[3]


def intersects(a: GlyphBoxTree, pos_a: tuple[float, float],
               b: GlyphBoxTree, pos_b: tuple[float, float]) -> bool:
    """True iff some character box of a overlaps some character box of b."""
    dx = pos_b[0] - pos_a[0]
    dy = pos_b[1] - pos_a[1]
    ar = a.root
    br = b.root
    # Root-level early out in a's local frame.
    if not boxes_overlap(ar, (br[0] + dx, br[1] + dy, br[2] + dx, br[3] + dy)):
        return False
    for ca in a.children:
        for cb in b.children:
            if boxes_overlap(ca, (cb[0] + dx, cb[1] + dy, cb[2] + dx, cb[3] + dy)):
                return True
    return False


def within_frame(tree: GlyphBoxTree, pos: tuple[float, float], frame: Frame) -> bool:
    """Closed containment of the root box: touching the frame edge counts."""
    return frame.contains_box(tree.root_at(pos))


def spiral_step(origin: tuple[float, float], k: int,
                params: tuple[float, float] = (DEFAULT_SPIRAL_A, DEFAULT_SPIRAL_B)) -> tuple[float, float]:
    """Point k steps along an Archimedean spiral around origin (k=0 is origin)."""
    if k < 0:
        raise ValueError("step index must be non-negative")
    a, b = params
    theta = b * k
    r = a * theta
    return (origin[0] + r * math.cos(theta), origin[1] + r * math.sin(theta))


def separation_distance(a: GlyphBoxTree, pos_a: tuple[float, float],
                        b: GlyphBoxTree, pos_b: tuple[float, float]) -> float:
    """Minimum translation distance separating the two root boxes (0 if disjoint)."""
    ar = a.root_at(pos_a)
    br = b.root_at(pos_b)
    return box_penetration(ar, br)


def box_penetration(a: Box, b: Box) -> float:
    """min(x-overlap, y-overlap) of two boxes, 0 when they do not overlap."""
    ox = min(a[2], b[2]) - max(a[0], b[0])
    if ox <= 0:
        return 0.0
    oy = min(a[3], b[3]) - max(a[1], b[1])
    if oy <= 0:
        return 0.0
    return min(ox, oy)
