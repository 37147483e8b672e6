"""Bitmap tracing: binary edge rasters to chunked cubic-Bezier images.

Pipeline: 8-connected component labeling, Moore border following (outer
borders only, counter-clockwise), corner pre-splitting, then least-squares
piecewise cubic fitting with Newton-Raphson reparameterization.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DegenerateImageError, SvgParseError
from .vgraph import (
    Chunk,
    CubicSegment,
    Point,
    VectorImage,
    elevate_line,
    make_chunk,
    normalize_height,
)

DEFAULT_MAX_ERR = 1.5      # px
DEFAULT_MIN_PIXELS = 4     # despeckle threshold, smaller components are dropped
CORNER_ANGLE_DEG = 60.0
CORNER_WINDOW = 4          # px offset used to estimate the turning angle
REPARAM_PASSES = 4


@dataclass(frozen=True)
class EdgeBitmap:
    """Row-major boolean raster; True marks an edge pixel."""

    width: int
    height: int
    bits: np.ndarray  # bool, shape (height, width)

    def __post_init__(self):
        if self.bits.shape != (self.height, self.width):
            raise ContractError(
                f"bitmap bits shape {self.bits.shape} does not match "
                f"{self.height}x{self.width}"
            )


def bitmap_from_array(arr: np.ndarray) -> EdgeBitmap:
    a = np.asarray(arr, dtype=bool)
    return EdgeBitmap(width=a.shape[1], height=a.shape[0], bits=a)


@dataclass(frozen=True)
class Contour:
    points: tuple[Point, ...]
    closed: bool


def read_pbm(data: bytes) -> EdgeBitmap:
    """Read a PBM bitmap (P1 ASCII or P4 packed); 1/black means edge."""
    if data[:2] == b"P1":
        text = data[2:].decode("ascii", errors="replace")
        tokens: list[str] = []
        for line in text.splitlines():
            line = line.split("#", 1)[0]
            tokens.extend(line.split())
        if len(tokens) < 2:
            raise SvgParseError("PBM header truncated", len(data))
        w, h = int(tokens[0]), int(tokens[1])
        cells = tokens[2:]
        flat = "".join(cells)
        if len(flat) < w * h:
            raise SvgParseError("PBM pixel data truncated", len(data))
        bits = np.array([c == "1" for c in flat[: w * h]], dtype=bool).reshape(h, w)
        return EdgeBitmap(width=w, height=h, bits=bits)
    if data[:2] == b"P4":
        pos = 2
        fields: list[int] = []
        while len(fields) < 2:
            while pos < len(data) and data[pos : pos + 1].isspace():
                pos += 1
            if pos < len(data) and data[pos : pos + 1] == b"#":
                while pos < len(data) and data[pos] != 0x0A:
                    pos += 1
                continue
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace():
                pos += 1
            if start == pos:
                raise SvgParseError("PBM header truncated", pos)
            fields.append(int(data[start:pos]))
        pos += 1  # single whitespace after the header
        w, h = fields
        row_bytes = (w + 7) // 8
        need = row_bytes * h
        raw = data[pos : pos + need]
        if len(raw) < need:
            raise SvgParseError("PBM pixel data truncated", len(data))
        packed = np.frombuffer(raw, dtype=np.uint8).reshape(h, row_bytes)
        bits = np.unpackbits(packed, axis=1)[:, :w].astype(bool)
        return EdgeBitmap(width=w, height=h, bits=bits)
    raise SvgParseError("not a P1/P4 PBM file", 0)


# ---------------------------------------------------------------------------
# Contour extraction

# Clockwise Moore neighborhood in screen coordinates (y grows downward),
# starting at west: W, NW, N, NE, E, SE, S, SW.
_MOORE = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))


def _components(bits: np.ndarray) -> list[list[tuple[int, int]]]:
    """8-connected components in row-major discovery order."""
    h, w = bits.shape
    seen = np.zeros_like(bits, dtype=bool)
    comps: list[list[tuple[int, int]]] = []
    for y in range(h):
        for x in range(w):
            if not bits[y, x] or seen[y, x]:
                continue
            comp: list[tuple[int, int]] = []
            queue = deque([(x, y)])
            seen[y, x] = True
            while queue:
                cx, cy = queue.popleft()
                comp.append((cx, cy))
                for dx, dy in _MOORE:
                    nx, ny = cx + dx, cy + dy
                    if 0 <= nx < w and 0 <= ny < h and bits[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        queue.append((nx, ny))
            comps.append(comp)
    return comps


def _trace_border(bits: np.ndarray, start: tuple[int, int]) -> list[tuple[int, int]]:
    """Moore border following from the top-left pixel of a component."""
    h, w = bits.shape

    def on(p):
        x, y = p
        return 0 <= x < w and 0 <= y < h and bits[y, x]

    # The scan finds `start` with no component pixel above or directly left,
    # so entering from the west is a valid backtrack position.
    boundary = [start]
    prev = (start[0] - 1, start[1])
    cur = start
    first_hit: tuple[int, int] | None = None
    for _ in range(8 * w * h):
        # Index of the backtrack position in the Moore ring around cur.
        off = (prev[0] - cur[0], prev[1] - cur[1])
        k0 = _MOORE.index(off)
        nxt = None
        for i in range(1, 9):
            cand_off = _MOORE[(k0 + i) % 8]
            cand = (cur[0] + cand_off[0], cur[1] + cand_off[1])
            if on(cand):
                nxt = cand
                # Backtrack becomes the position checked just before the hit.
                prev_off = _MOORE[(k0 + i - 1) % 8]
                prev = (cur[0] + prev_off[0], cur[1] + prev_off[1])
                break
        if nxt is None:
            break  # isolated pixel
        if cur == start and first_hit is None:
            first_hit = nxt
        elif cur == start and nxt == first_hit:
            break  # Jacob's stopping criterion: same exit from the start pixel
        boundary.append(nxt)
        cur = nxt
    if len(boundary) > 1 and boundary[-1] == start:
        boundary.pop()
    return boundary


def _signed_area(points: list[tuple[int, int]]) -> float:
    a = 0.0
    n = len(points)
    for i in range(n):
        x0, y0 = points[i]
        x1, y1 = points[(i + 1) % n]
        a += x0 * y1 - x1 * y0
    return a / 2.0


def extract_contours(bmp: EdgeBitmap, min_pixels: int = DEFAULT_MIN_PIXELS) -> list[Contour]:
    """Outer border of every 8-connected component, counter-clockwise.

    Components smaller than min_pixels are dropped; single-pixel components
    have no boundary pair and are always dropped.
    """
    contours: list[Contour] = []
    for comp in _components(bmp.bits):
        if len(comp) < max(min_pixels, 2):
            continue
        start = min(comp, key=lambda p: (p[1], p[0]))
        ring = _trace_border(bmp.bits, start)
        if len(ring) < 2:
            continue
        if _signed_area(ring) < 0.0:
            ring = [ring[0]] + ring[1:][::-1]
        contours.append(
            Contour(points=tuple(Point(float(x), float(y)) for x, y in ring), closed=True)
        )
    return contours


# ---------------------------------------------------------------------------
# Piecewise cubic fitting (least squares with Newton-Raphson refinement)


def _dedup(pts: np.ndarray) -> np.ndarray:
    keep = [0]
    for i in range(1, len(pts)):
        if not np.array_equal(pts[i], pts[keep[-1]]):
            keep.append(i)
    return pts[keep]


def _q(P: np.ndarray, t: float) -> np.ndarray:
    u = 1.0 - t
    return (
        u * u * u * P[0]
        + 3 * u * u * t * P[1]
        + 3 * u * t * t * P[2]
        + t * t * t * P[3]
    )


def _q1(P: np.ndarray, t: float) -> np.ndarray:
    u = 1.0 - t
    return 3 * (u * u * (P[1] - P[0]) + 2 * u * t * (P[2] - P[1]) + t * t * (P[3] - P[2]))


def _q2(P: np.ndarray, t: float) -> np.ndarray:
    u = 1.0 - t
    return 6 * (u * (P[2] - 2 * P[1] + P[0]) + t * (P[3] - 2 * P[2] + P[1]))


def _normalize(v: np.ndarray) -> np.ndarray:
    n = float(np.hypot(v[0], v[1]))
    if n == 0.0:
        return np.array([1.0, 0.0])
    return v / n


def _chord_parameterize(pts: np.ndarray) -> np.ndarray:
    d = np.concatenate([[0.0], np.cumsum(np.hypot(*(np.diff(pts, axis=0).T)))])
    if d[-1] == 0.0:
        return np.linspace(0.0, 1.0, len(pts))
    return d / d[-1]


def _generate_bezier(pts, u, tan_l, tan_r) -> np.ndarray:
    first, last = pts[0], pts[-1]
    A = np.empty((len(pts), 2, 2))
    A[:, 0, :] = tan_l[None, :] * (3.0 * (1 - u) ** 2 * u)[:, None]
    A[:, 1, :] = tan_r[None, :] * (3.0 * (1 - u) * u**2)[:, None]
    C = np.zeros((2, 2))
    X = np.zeros(2)
    base = np.array([_q(np.array([first, first, last, last]), t) for t in u])
    tmp = pts - base
    C[0, 0] = np.einsum("ij,ij->", A[:, 0], A[:, 0])
    C[0, 1] = C[1, 0] = np.einsum("ij,ij->", A[:, 0], A[:, 1])
    C[1, 1] = np.einsum("ij,ij->", A[:, 1], A[:, 1])
    X[0] = np.einsum("ij,ij->", A[:, 0], tmp)
    X[1] = np.einsum("ij,ij->", A[:, 1], tmp)
    det_c = C[0, 0] * C[1, 1] - C[1, 0] * C[0, 1]
    alpha_l = 0.0 if det_c == 0 else (X[0] * C[1, 1] - X[1] * C[0, 1]) / det_c
    alpha_r = 0.0 if det_c == 0 else (C[0, 0] * X[1] - C[1, 0] * X[0]) / det_c
    seg_len = float(np.hypot(*(last - first)))
    eps = 1e-6 * seg_len
    if alpha_l < eps or alpha_r < eps:
        # Wu/Barsky fallback: place controls a third of the chord out.
        alpha_l = alpha_r = seg_len / 3.0
    return np.array(
        [first, first + tan_l * alpha_l, last + tan_r * alpha_r, last]
    )


def _max_error(pts, P, u) -> tuple[float, int]:
    worst = 0.0
    split = len(pts) // 2
    for i in range(1, len(pts) - 1):
        d = float(np.hypot(*(_q(P, u[i]) - pts[i])))
        if d > worst:
            worst = d
            split = i
    return worst, split


def _reparameterize(pts, P, u) -> np.ndarray:
    out = u.copy()
    for i in range(len(pts)):
        t = u[i]
        d = _q(P, t) - pts[i]
        d1 = _q1(P, t)
        num = float(d @ d1)
        den = float(d1 @ d1 + d @ _q2(P, t))
        if den != 0.0:
            t = t - num / den
        out[i] = min(1.0, max(0.0, t))
    return out


def _fit_piece(pts: np.ndarray, tan_l, tan_r, max_err: float, out: list[np.ndarray]) -> None:
    if len(pts) == 2:
        chord = float(np.hypot(*(pts[1] - pts[0])))
        out.append(
            np.array(
                [pts[0], pts[0] + tan_l * chord / 3.0, pts[1] + tan_r * chord / 3.0, pts[1]]
            )
        )
        return
    u = _chord_parameterize(pts)
    P = _generate_bezier(pts, u, tan_l, tan_r)
    err, split = _max_error(pts, P, u)
    if err <= max_err:
        out.append(P)
        return
    for _ in range(REPARAM_PASSES):
        u = _reparameterize(pts, P, u)
        P = _generate_bezier(pts, u, tan_l, tan_r)
        err, split = _max_error(pts, P, u)
        if err <= max_err:
            out.append(P)
            return
    split = min(max(split, 1), len(pts) - 2)
    tan_c = _normalize(pts[split - 1] - pts[split + 1])
    _fit_piece(pts[: split + 1], tan_l, tan_c, max_err, out)
    _fit_piece(pts[split:], -tan_c, tan_r, max_err, out)


def _corner_indices(pts: np.ndarray, closed: bool) -> list[int]:
    """Indices where the contour turns sharply.

    The turning angle is measured over a CORNER_WINDOW offset because raw
    8-connected steps quantize direction to 45-degree multiples; only local
    maxima of the angle are kept so a corner yields a single boundary.
    """
    n = len(pts)
    k = CORNER_WINDOW
    if n < 2 * k + 1:
        return []
    angles = np.zeros(n)
    rng = range(n) if closed else range(k, n - k)
    for i in rng:
        a = pts[i] - pts[(i - k) % n]
        b = pts[(i + k) % n] - pts[i]
        na, nb = np.hypot(*a), np.hypot(*b)
        if na == 0 or nb == 0:
            continue
        cosang = float(np.clip((a @ b) / (na * nb), -1.0, 1.0))
        angles[i] = np.degrees(np.arccos(cosang))
    candidates = [i for i in rng if angles[i] > CORNER_ANGLE_DEG]
    candidates.sort(key=lambda i: (-angles[i], i))
    corners: list[int] = []
    for i in candidates:
        near = any(min((i - j) % n, (j - i) % n) <= k for j in corners)
        if not near:
            corners.append(i)
    return sorted(corners)


def fit_cubics(contour: Contour, max_err: float = DEFAULT_MAX_ERR, chunk_id: int = 0) -> Chunk:
    """Fit a chunk of cubic segments to a contour within max_err."""
    if max_err <= 0.0:
        raise ContractError("max_err must be positive")
    if len(contour.points) < 2:
        raise ContractError("contour needs at least 2 points")
    pts = _dedup(np.array([[p.x, p.y] for p in contour.points], dtype=float))
    if len(pts) == 1:
        raise ContractError("contour collapsed to a single point")
    closed = contour.closed
    corners = _corner_indices(pts, closed)

    runs: list[np.ndarray] = []
    if closed:
        if corners:
            order = corners
            for a, b in zip(order, order[1:] + [order[0]]):
                if b > a:
                    runs.append(pts[a : b + 1])
                else:
                    runs.append(np.concatenate([pts[a:], pts[: b + 1]]))
        else:
            runs.append(np.concatenate([pts, pts[:1]]))
    else:
        bounds = [0] + corners + [len(pts) - 1]
        for a, b in zip(bounds, bounds[1:]):
            if b > a:
                runs.append(pts[a : b + 1])

    raw: list[np.ndarray] = []
    for run in runs:
        if len(run) < 2:
            continue
        tan_l = _normalize(run[1] - run[0])
        tan_r = _normalize(run[-2] - run[-1])
        _fit_piece(run, tan_l, tan_r, max_err, raw)
    segments = [
        CubicSegment(Point(*P[0]), Point(*P[1]), Point(*P[2]), Point(*P[3])) for P in raw
    ]
    return make_chunk(chunk_id, segments, closed)


def trace_bitmap(
    bmp: EdgeBitmap,
    max_err: float = DEFAULT_MAX_ERR,
    min_pixels: int = DEFAULT_MIN_PIXELS,
) -> VectorImage:
    """Full pipeline: contours, per-contour fits, assembled normalized image."""
    contours = extract_contours(bmp, min_pixels)
    if not contours:
        raise DegenerateImageError("no contours above the despeckle threshold")
    chunks = tuple(fit_cubics(c, max_err, chunk_id=i) for i, c in enumerate(contours))
    return normalize_height(VectorImage(chunks=chunks))
