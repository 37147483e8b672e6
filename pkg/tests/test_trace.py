import math

import numpy as np
import pytest

from bignet.errors import ContractError, DegenerateImageError, SvgParseError
from bignet.trace import (
    Contour,
    EdgeBitmap,
    bitmap_from_array,
    extract_contours,
    fit_cubics,
    read_pbm,
    trace_bitmap,
)
from bignet.vgraph import Point, write_svg

from test_vgraph import nearest_distance


def contour_from(points, closed=True):
    return Contour(points=tuple(Point(float(x), float(y)) for x, y in points), closed=closed)


def chunk_max_error(chunk, points):
    return max(nearest_distance(p, chunk.segments) for p in points)


class TestContours:
    def test_empty_bitmap(self):
        bmp = bitmap_from_array(np.zeros((4, 4), dtype=bool))
        assert extract_contours(bmp, 1) == []

    def test_filled_block_border(self):
        # 3x3 filled block: the border ring is every pixel except the center.
        arr = np.zeros((5, 5), dtype=bool)
        arr[1:4, 1:4] = True
        contours = extract_contours(bitmap_from_array(arr), 1)
        assert len(contours) == 1
        c = contours[0]
        assert c.closed
        visited = {(p.x, p.y) for p in c.points}
        expected = {
            (x, y) for x in (1, 2, 3) for y in (1, 2, 3) if not (x == 2 and y == 2)
        }
        assert visited == {(float(x), float(y)) for x, y in expected}
        assert len(c.points) == 8

    def test_two_blocks_two_contours(self):
        arr = np.zeros((8, 8), dtype=bool)
        arr[1:3, 1:3] = True
        arr[5:7, 5:7] = True
        assert len(extract_contours(bitmap_from_array(arr), 1)) == 2

    def test_consecutive_points_are_neighbors(self):
        rng = np.random.default_rng(0)
        arr = rng.random((24, 24)) > 0.6
        for c in extract_contours(bitmap_from_array(arr), 2):
            pts = list(c.points) + [c.points[0]]
            for a, b in zip(pts, pts[1:]):
                assert max(abs(a.x - b.x), abs(a.y - b.y)) <= 1.0

    def test_despeckle_monotone(self):
        rng = np.random.default_rng(1)
        arr = rng.random((32, 32)) > 0.55
        bmp = bitmap_from_array(arr)
        counts = [len(extract_contours(bmp, m)) for m in (1, 2, 4, 8, 16)]
        assert counts == sorted(counts, reverse=True)

    def test_counter_clockwise(self):
        arr = np.zeros((6, 6), dtype=bool)
        arr[1:5, 1:5] = True
        c = extract_contours(bitmap_from_array(arr), 1)[0]
        pts = [(p.x, p.y) for p in c.points]
        area = sum(
            x0 * y1 - x1 * y0 for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1])
        )
        assert area > 0


class TestFit:
    def test_collinear_points_single_segment(self):
        pts = [(i, 2 * i) for i in range(10)]
        chunk = fit_cubics(contour_from(pts, closed=False), max_err=1.0)
        assert chunk.n_segments() == 1
        assert chunk_max_error(chunk, [Point(x, y) for x, y in pts]) < 1e-9

    def test_circle_few_segments(self):
        pts = [
            (100 * math.cos(t), 100 * math.sin(t))
            for t in np.linspace(0, 2 * math.pi, 65)[:-1]
        ]
        chunk = fit_cubics(contour_from(pts, closed=True), max_err=1.0)
        assert chunk.n_segments() <= 8
        assert chunk.closed
        assert chunk_max_error(chunk, [Point(x, y) for x, y in pts]) <= 1.0

    def test_two_points_straight_segment(self):
        chunk = fit_cubics(contour_from([(0, 0), (4, 2)], closed=False), max_err=1.0)
        assert chunk.n_segments() == 1
        s = chunk.segments[0]
        assert s.p0 == Point(0, 0)
        assert s.p3 == Point(4, 2)
        mid = s.eval(0.5)
        assert abs(mid.x - 2) < 1e-9 and abs(mid.y - 1) < 1e-9

    def test_error_contract_on_wiggly_curves(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            n = 120
            xs = np.linspace(0, 60, n)
            ys = 8 * np.sin(xs / 6) + rng.normal(0, 0.2, n)
            pts = list(zip(xs, ys))
            chunk = fit_cubics(contour_from(pts, closed=False), max_err=1.5)
            assert chunk_max_error(chunk, [Point(x, y) for x, y in pts]) <= 1.5

    def test_corner_is_preserved(self):
        # An L shape: the corner must be a segment boundary, so the fitted
        # curve passes within max_err even with a generous budget.
        pts = [(i, 0) for i in range(30)] + [(29, j) for j in range(1, 30)]
        chunk = fit_cubics(contour_from(pts, closed=False), max_err=2.0)
        corner = Point(29.0, 0.0)
        assert nearest_distance(corner, chunk.segments) <= 1.0
        assert chunk.n_segments() >= 2

    def test_rejects_bad_args(self):
        with pytest.raises(ContractError):
            fit_cubics(contour_from([(0, 0), (1, 1)]), max_err=0.0)
        with pytest.raises(ContractError):
            fit_cubics(Contour(points=(Point(0, 0),), closed=False), max_err=1.0)


class TestTraceBitmap:
    def test_empty_raises(self):
        with pytest.raises(DegenerateImageError):
            trace_bitmap(bitmap_from_array(np.zeros((4, 4), dtype=bool)))

    def test_rectangle_aspect(self):
        arr = np.zeros((30, 50), dtype=bool)
        arr[5:25, 5:45] = True  # 40 wide, 20 tall
        img = trace_bitmap(bitmap_from_array(arr), max_err=1.0, min_pixels=1)
        assert img.n_chunks() == 1
        assert img.normalized
        cx, cy, w, h, _ = img.chunks[0].bbox
        # Border pixel centers span 39x19; allow the stated 2 px of quantization.
        lo = (39 - 2) / (19 + 2)
        hi = (39 + 2) / (19 - 2)
        assert lo <= w / h <= hi

    def test_deterministic_bytes(self):
        rng = np.random.default_rng(4)
        arr = rng.random((40, 40)) > 0.6
        bmp = bitmap_from_array(arr)
        a = write_svg(trace_bitmap(bmp, 1.5, 4))
        b = write_svg(trace_bitmap(bmp, 1.5, 4))
        assert a == b


class TestPbm:
    def test_p1_roundtrip(self):
        text = b"P1\n# comment\n5 3\n0 1 1 1 0\n0 1 0 1 0\n1 1 1 1 1\n"
        bmp = read_pbm(text)
        assert (bmp.width, bmp.height) == (5, 3)
        assert bool(bmp.bits[0, 1]) and not bool(bmp.bits[0, 0])
        assert bmp.bits.sum() == 10

    def test_p4(self):
        # 10x2, first row all set, second row alternating.
        row1 = 0b11111111, 0b11000000
        row2 = 0b10101010, 0b10000000
        data = b"P4\n10 2\n" + bytes([*row1, *row2])
        bmp = read_pbm(data)
        assert (bmp.width, bmp.height) == (10, 2)
        assert bmp.bits[0].all()
        assert bmp.bits[1].sum() == 5

    def test_bad_magic(self):
        with pytest.raises(SvgParseError):
            read_pbm(b"P9\n1 1\n0")

    def test_truncated(self):
        with pytest.raises(SvgParseError):
            read_pbm(b"P1\n4 4\n0 1")
