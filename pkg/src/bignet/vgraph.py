"""Document model for curve images: chunks of cubic Bezier segments.

An image is an ordered list of chunks; a chunk is an ordered, endpoint-
continuous run of cubic segments, optionally closed.  Only the absolute
M/L/C/Q/Z SVG path subset is read and written.
"""
from __future__ import annotations

import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace

from .errors import (
    ContractError,
    DegenerateImageError,
    SvgParseError,
    UnsupportedSvgFeatureError,
)

CONTINUITY_TOL = 1e-9   # endpoint agreement required inside a chunk
SNAP_TOL = 1e-6         # inputs off by up to this get snapped, beyond -> rejected

IMPORTANT_CHUNK_COLOR = "#FF0000"
IMPORTANT_CURVE_COLOR = "#0000FF"
DEFAULT_COLOR = "#000000"


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __add__(self, other: "Point") -> "Point":
        return Point(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Point") -> "Point":
        return Point(self.x - other.x, self.y - other.y)

    def scaled(self, s: float) -> "Point":
        return Point(self.x * s, self.y * s)

    def dist(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


def lerp(a: Point, b: Point, t: float) -> Point:
    return Point(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)


@dataclass(frozen=True)
class CubicSegment:
    """One cubic Bezier arc: start, two controls, end."""

    p0: Point
    p1: Point
    p2: Point
    p3: Point

    def points(self) -> tuple[Point, Point, Point, Point]:
        return (self.p0, self.p1, self.p2, self.p3)

    def eval(self, t: float) -> Point:
        u = 1.0 - t
        b0 = u * u * u
        b1 = 3.0 * u * u * t
        b2 = 3.0 * u * t * t
        b3 = t * t * t
        return Point(
            b0 * self.p0.x + b1 * self.p1.x + b2 * self.p2.x + b3 * self.p3.x,
            b0 * self.p0.y + b1 * self.p1.y + b2 * self.p2.y + b3 * self.p3.y,
        )

    def control_polygon_length(self) -> float:
        return (
            self.p0.dist(self.p1) + self.p1.dist(self.p2) + self.p2.dist(self.p3)
        )

    def split(self, t: float = 0.5) -> tuple["CubicSegment", "CubicSegment"]:
        """de Casteljau subdivision; both halves trace the same point set."""
        q0 = lerp(self.p0, self.p1, t)
        q1 = lerp(self.p1, self.p2, t)
        q2 = lerp(self.p2, self.p3, t)
        r0 = lerp(q0, q1, t)
        r1 = lerp(q1, q2, t)
        s = lerp(r0, r1, t)
        return (
            CubicSegment(self.p0, q0, r0, s),
            CubicSegment(s, r1, q2, self.p3),
        )

    def reversed(self) -> "CubicSegment":
        return CubicSegment(self.p3, self.p2, self.p1, self.p0)

    def is_finite(self) -> bool:
        return all(p.is_finite() for p in self.points())


def elevate_line(a: Point, b: Point) -> CubicSegment:
    """Degree-elevate a line to an identical cubic."""
    return CubicSegment(a, lerp(a, b, 1.0 / 3.0), lerp(a, b, 2.0 / 3.0), b)


def elevate_quadratic(a: Point, q: Point, b: Point) -> CubicSegment:
    """Degree-elevate a quadratic (a, q, b) to an identical cubic."""
    c1 = a + (q - a).scaled(2.0 / 3.0)
    c2 = b + (q - b).scaled(2.0 / 3.0)
    return CubicSegment(a, c1, c2, b)


def _axis_extremes(c0: float, c1: float, c2: float, c3: float) -> tuple[float, float]:
    """Exact min/max of one coordinate of a cubic over t in [0, 1].

    Candidates are the endpoints plus real roots in (0, 1) of the derivative,
    which is a quadratic in the forward differences.
    """
    lo = min(c0, c3)
    hi = max(c0, c3)
    d0 = c1 - c0
    d1 = c2 - c1
    d2 = c3 - c2
    a = d0 - 2.0 * d1 + d2
    b = 2.0 * (d1 - d0)
    c = d0
    roots: list[float] = []
    if abs(a) < 1e-14:
        if abs(b) > 1e-14:
            roots.append(-c / b)
    else:
        disc = b * b - 4.0 * a * c
        if disc > 0.0:
            sq = math.sqrt(disc)
            roots.append((-b + sq) / (2.0 * a))
            roots.append((-b - sq) / (2.0 * a))
    for t in roots:
        if 0.0 < t < 1.0:
            u = 1.0 - t
            v = (
                u * u * u * c0
                + 3.0 * u * u * t * c1
                + 3.0 * u * t * t * c2
                + t * t * t * c3
            )
            lo = min(lo, v)
            hi = max(hi, v)
    return lo, hi


def curve_bbox(seg: CubicSegment) -> tuple[float, float, float, float]:
    """Exact bounding box (xmin, ymin, xmax, ymax) of the curve itself."""
    xmin, xmax = _axis_extremes(seg.p0.x, seg.p1.x, seg.p2.x, seg.p3.x)
    ymin, ymax = _axis_extremes(seg.p0.y, seg.p1.y, seg.p2.y, seg.p3.y)
    return xmin, ymin, xmax, ymax


@dataclass(frozen=True)
class Chunk:
    """Endpoint-continuous run of cubic segments with its exact bounding box.

    bbox is stored as (cx, cy, w, h, area) with the center convention used
    throughout the chunk-level features.
    """

    id: int
    segments: tuple[CubicSegment, ...]
    closed: bool
    bbox: tuple[float, float, float, float, float]

    def n_segments(self) -> int:
        return len(self.segments)


def _chunk_bbox(segments: tuple[CubicSegment, ...]) -> tuple[float, float, float, float, float]:
    xmin = math.inf
    ymin = math.inf
    xmax = -math.inf
    ymax = -math.inf
    for seg in segments:
        x0, y0, x1, y1 = curve_bbox(seg)
        xmin = min(xmin, x0)
        ymin = min(ymin, y0)
        xmax = max(xmax, x1)
        ymax = max(ymax, y1)
    w = xmax - xmin
    h = ymax - ymin
    return ((xmin + xmax) / 2.0, (ymin + ymax) / 2.0, w, h, w * h)


def make_chunk(cid: int, segments: list[CubicSegment], closed: bool) -> Chunk:
    """Validate continuity (snapping gaps up to SNAP_TOL) and build a Chunk."""
    if not segments:
        raise ContractError(f"chunk {cid}: needs at least one segment")
    fixed: list[CubicSegment] = []
    prev_end: Point | None = None
    for k, seg in enumerate(segments):
        if not seg.is_finite():
            raise ContractError(f"chunk {cid}: segment {k} has non-finite coordinates")
        if prev_end is not None:
            gap = seg.p0.dist(prev_end)
            if gap > SNAP_TOL:
                raise ContractError(
                    f"chunk {cid}: segment {k} starts {gap:g} away from the previous endpoint"
                )
            if gap > 0.0:
                seg = CubicSegment(prev_end, seg.p1, seg.p2, seg.p3)
        fixed.append(seg)
        prev_end = seg.p3
    if closed:
        start = fixed[0].p0
        last = fixed[-1]
        gap = last.p3.dist(start)
        if gap > SNAP_TOL:
            raise ContractError(f"chunk {cid}: closed chunk ends {gap:g} away from its start")
        if gap > 0.0:
            fixed[-1] = CubicSegment(last.p0, last.p1, last.p2, start)
    segs = tuple(fixed)
    return Chunk(id=cid, segments=segs, closed=closed, bbox=_chunk_bbox(segs))


@dataclass(frozen=True)
class VectorImage:
    chunks: tuple[Chunk, ...]
    label: int | None = None
    source_id: str = ""
    normalized: bool = False

    def n_chunks(self) -> int:
        return len(self.chunks)

    def n_segments(self) -> int:
        return sum(c.n_segments() for c in self.chunks)


def global_bbox(img: VectorImage) -> tuple[float, float, float, float]:
    """(xmin, ymin, xmax, ymax) over all chunks."""
    if not img.chunks:
        raise DegenerateImageError("image has no chunks")
    xmin = min(c.bbox[0] - c.bbox[2] / 2.0 for c in img.chunks)
    xmax = max(c.bbox[0] + c.bbox[2] / 2.0 for c in img.chunks)
    ymin = min(c.bbox[1] - c.bbox[3] / 2.0 for c in img.chunks)
    ymax = max(c.bbox[1] + c.bbox[3] / 2.0 for c in img.chunks)
    return xmin, ymin, xmax, ymax


def _rebuild(img: VectorImage, point_map, normalized: bool) -> VectorImage:
    chunks = []
    for c in img.chunks:
        segs = [
            CubicSegment(*(point_map(p) for p in s.points())) for s in c.segments
        ]
        chunks.append(make_chunk(c.id, segs, c.closed))
    return replace(img, chunks=tuple(chunks), normalized=normalized)


def normalize_height(img: VectorImage) -> VectorImage:
    """Uniformly scale to height 1 and translate the min corner to (0, 0)."""
    xmin, ymin, _, ymax = global_bbox(img)
    height = ymax - ymin
    if height <= 0.0:
        raise DegenerateImageError(f"global bounding-box height is {height:g}")
    s = 1.0 / height
    return _rebuild(
        img,
        lambda p: Point((p.x - xmin) * s, (p.y - ymin) * s),
        normalized=True,
    )


def _resegment_one(seg: CubicSegment, max_len: float, out: list[CubicSegment]) -> None:
    if seg.control_polygon_length() <= max_len:
        out.append(seg)
        return
    left, right = seg.split(0.5)
    _resegment_one(left, max_len, out)
    _resegment_one(right, max_len, out)


def resegment(img: VectorImage, max_len: float = 0.05) -> VectorImage:
    """Subdivide until every control polygon is at most max_len long.

    Pure subdivision: the traced point set is unchanged.  Used to bring every
    image to a uniform curve granularity regardless of how it was authored.
    """
    if max_len <= 0.0:
        raise ContractError("max_len must be positive")
    chunks = []
    for c in img.chunks:
        segs: list[CubicSegment] = []
        for seg in c.segments:
            _resegment_one(seg, max_len, segs)
        chunks.append(make_chunk(c.id, segs, c.closed))
    return replace(img, chunks=tuple(chunks))


# ---------------------------------------------------------------------------
# SVG parsing

_NUMBER_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")
_SUPPORTED = set("MLCQZ")
_UNSUPPORTED_KNOWN = set("AHVSTmlcqzahvst")
_ARG_COUNT = {"M": 2, "L": 2, "C": 6, "Q": 4}


class _PathScanner:
    def __init__(self, d: str):
        self.d = d
        self.pos = 0

    def _skip(self) -> None:
        while self.pos < len(self.d) and self.d[self.pos] in " \t\r\n,":
            self.pos += 1

    def next_token(self) -> tuple[str, str, int] | None:
        """Returns (kind, text, offset) with kind 'cmd' or 'num', or None at end."""
        self._skip()
        if self.pos >= len(self.d):
            return None
        ch = self.d[self.pos]
        if ch.isalpha():
            self.pos += 1
            return ("cmd", ch, self.pos - 1)
        m = _NUMBER_RE.match(self.d, self.pos)
        if not m:
            raise SvgParseError(f"unexpected character {ch!r} in path data", self.pos)
        self.pos = m.end()
        return ("num", m.group(0), m.start())

    def read_number(self, what: str) -> float:
        tok = self.next_token()
        if tok is None:
            raise SvgParseError(f"truncated path data: expected {what}", len(self.d))
        kind, text, off = tok
        if kind != "num":
            raise SvgParseError(f"expected {what}, found command {text!r}", off)
        return float(text)


def _parse_path_data(d: str, chunks: list[list[CubicSegment]], closed_flags: list[bool]) -> None:
    sc = _PathScanner(d)
    cur: Point | None = None
    subpath_start: Point | None = None
    segs: list[CubicSegment] = []
    is_closed = False

    def flush() -> None:
        nonlocal segs, is_closed
        if segs:
            chunks.append(segs)
            closed_flags.append(is_closed)
        segs = []
        is_closed = False

    cmd: str | None = None
    while True:
        tok = sc.next_token()
        if tok is None:
            break
        kind, text, off = tok
        if kind == "cmd":
            if text in _UNSUPPORTED_KNOWN:
                raise UnsupportedSvgFeatureError(
                    f"unsupported path command {text!r}: only absolute M, L, C, Q, Z are handled"
                )
            if text not in _SUPPORTED:
                raise SvgParseError(f"unknown path command {text!r}", off)
            cmd = text
            if cmd == "Z":
                if cur is not None and subpath_start is not None:
                    if cur.dist(subpath_start) > CONTINUITY_TOL:
                        segs.append(elevate_line(cur, subpath_start))
                    is_closed = True
                    flush()
                    cur = subpath_start
                cmd = None
                continue
        else:
            # Implicit command repetition: a number where a command could sit.
            if cmd is None:
                raise SvgParseError("coordinate with no active command", off)
            sc.pos = off  # re-read the number as the first argument
            if cmd == "M":
                cmd = "L"  # extra M pairs are implicit line-tos
        if cmd == "M":
            flush()
            x = sc.read_number("x of M")
            y = sc.read_number("y of M")
            cur = Point(x, y)
            subpath_start = cur
        elif cmd == "L":
            if cur is None:
                raise SvgParseError("L before any M", off)
            x = sc.read_number("x of L")
            y = sc.read_number("y of L")
            nxt = Point(x, y)
            segs.append(elevate_line(cur, nxt))
            cur = nxt
        elif cmd == "C":
            if cur is None:
                raise SvgParseError("C before any M", off)
            vals = [sc.read_number(f"argument {i + 1} of C") for i in range(6)]
            seg = CubicSegment(
                cur, Point(vals[0], vals[1]), Point(vals[2], vals[3]), Point(vals[4], vals[5])
            )
            segs.append(seg)
            cur = seg.p3
        elif cmd == "Q":
            if cur is None:
                raise SvgParseError("Q before any M", off)
            vals = [sc.read_number(f"argument {i + 1} of Q") for i in range(4)]
            segs.append(elevate_quadratic(cur, Point(vals[0], vals[1]), Point(vals[2], vals[3])))
            cur = Point(vals[2], vals[3])
    flush()


def parse_svg(text: str, source_id: str = "") -> VectorImage:
    """Parse an SVG document into a VectorImage; one chunk per subpath."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as e:
        line, col = e.position
        offset = sum(len(ln) + 1 for ln in text.splitlines()[: line - 1]) + col
        raise SvgParseError(f"malformed XML: {e.msg}", offset) from e
    raw_chunks: list[list[CubicSegment]] = []
    closed_flags: list[bool] = []
    for elem in root.iter():
        tag = elem.tag.rsplit("}", 1)[-1]
        if tag != "path":
            continue
        d = elem.get("d")
        if d:
            _parse_path_data(d, raw_chunks, closed_flags)
    chunks = tuple(
        make_chunk(i, segs, closed)
        for i, (segs, closed) in enumerate(zip(raw_chunks, closed_flags))
    )
    return VectorImage(chunks=chunks, source_id=source_id)


# ---------------------------------------------------------------------------
# SVG writing

@dataclass(frozen=True)
class SvgStyle:
    """Stroke styling for attribution renders.

    important_chunks: chunk ids drawn in red with class \"important-chunk\".
    important_curves: (chunk id, segment index) pairs overlaid in blue.
    """

    important_chunks: frozenset[int] = frozenset()
    important_curves: frozenset[tuple[int, int]] = frozenset()


def _fmt(v: float) -> str:
    s = f"{v:.9g}"
    return "0" if s == "-0" else s


def _segment_path(seg: CubicSegment) -> str:
    return (
        f"M {_fmt(seg.p0.x)} {_fmt(seg.p0.y)} "
        f"C {_fmt(seg.p1.x)} {_fmt(seg.p1.y)} {_fmt(seg.p2.x)} {_fmt(seg.p2.y)} "
        f"{_fmt(seg.p3.x)} {_fmt(seg.p3.y)}"
    )


def chunk_path_data(chunk: Chunk) -> str:
    parts = [f"M {_fmt(chunk.segments[0].p0.x)} {_fmt(chunk.segments[0].p0.y)}"]
    for seg in chunk.segments:
        parts.append(
            f"C {_fmt(seg.p1.x)} {_fmt(seg.p1.y)} {_fmt(seg.p2.x)} {_fmt(seg.p2.y)} "
            f"{_fmt(seg.p3.x)} {_fmt(seg.p3.y)}"
        )
    if chunk.closed:
        parts.append("Z")
    return " ".join(parts)


def write_svg(img: VectorImage, style: SvgStyle | None = None) -> str:
    """Serialize to SVG, one path per chunk, 9 significant digits."""
    style = style or SvgStyle()
    if img.chunks:
        xmin, ymin, xmax, ymax = global_bbox(img)
        w = xmax - xmin
        h = ymax - ymin
    else:
        w = h = 1.0
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_fmt(w)} {_fmt(h)}">',
    ]
    stroke_w = _fmt(max(w, h) / 400.0) if img.chunks else "0.0025"
    for chunk in img.chunks:
        important = chunk.id in style.important_chunks
        color = IMPORTANT_CHUNK_COLOR if important else DEFAULT_COLOR
        cls = ' class="important-chunk"' if important else ""
        lines.append(
            f'  <path id="chunk-{chunk.id}"{cls} d="{chunk_path_data(chunk)}" '
            f'fill="none" stroke="{color}" stroke-width="{stroke_w}"/>'
        )
    for chunk in img.chunks:
        for k, seg in enumerate(chunk.segments):
            if (chunk.id, k) in style.important_curves:
                lines.append(
                    f'  <path id="chunk-{chunk.id}-curve-{k}" class="important-curve" '
                    f'd="{_segment_path(seg)}" fill="none" '
                    f'stroke="{IMPORTANT_CURVE_COLOR}" stroke-width="{stroke_w}"/>'
                )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
