import math

import numpy as np
import pytest

from bignet.errors import (
    ContractError,
    DegenerateImageError,
    SvgParseError,
    UnsupportedSvgFeatureError,
)
from bignet.vgraph import (
    Chunk,
    CubicSegment,
    Point,
    SvgStyle,
    curve_bbox,
    elevate_line,
    elevate_quadratic,
    global_bbox,
    make_chunk,
    normalize_height,
    parse_svg,
    resegment,
    write_svg,
)


def seg(coords):
    pts = [Point(x, y) for x, y in coords]
    return CubicSegment(*pts)


def random_segment(rng):
    return seg(rng.uniform(0.0, 1.0, size=(4, 2)))


def _bezier_arrays(s):
    return np.array([[p.x, p.y] for p in s.points()])


def _eval_d1(P, t):
    u = 1.0 - t
    return 3 * (u * u * (P[1] - P[0]) + 2 * u * t * (P[2] - P[1]) + t * t * (P[3] - P[2]))


def _eval_d2(P, t):
    u = 1.0 - t
    return 6 * (u * (P[2] - 2 * P[1] + P[0]) + t * (P[3] - 2 * P[2] + P[1]))


def nearest_distance(point, segments, samples=64):
    """Distance from a point to a piecewise cubic: dense init, Newton projection."""
    q = np.array([point.x, point.y])
    best = math.inf
    for s in segments:
        P = _bezier_arrays(s)
        ts = np.linspace(0.0, 1.0, samples)
        ds = [point.dist(s.eval(t)) for t in ts]
        i = int(np.argmin(ds))
        t = ts[i]
        for _ in range(20):
            d = np.array([s.eval(t).x, s.eval(t).y]) - q
            d1 = _eval_d1(P, t)
            d2 = _eval_d2(P, t)
            num = float(d @ d1)
            den = float(d1 @ d1 + d @ d2)
            if den == 0.0:
                break
            t = min(1.0, max(0.0, t - num / den))
        best = min(best, ds[i], point.dist(s.eval(t)))
    return best


class TestElevate:
    def test_line(self):
        s = elevate_line(Point(0, 0), Point(3, 0))
        assert s.p1 == Point(1, 0)
        assert s.p2 == Point(2, 0)

    def test_quadratic(self):
        s = elevate_quadratic(Point(0, 0), Point(1, 2), Point(2, 0))
        assert s.p1.x == pytest.approx(2 / 3)
        assert s.p1.y == pytest.approx(4 / 3)
        assert s.p2.x == pytest.approx(4 / 3)
        assert s.p2.y == pytest.approx(4 / 3)

    def test_degenerate_zero_length(self):
        s = elevate_line(Point(5, 5), Point(5, 5))
        assert all(p == Point(5, 5) for p in s.points())

    def test_line_traces_same_points(self):
        a, b = Point(-1.0, 2.0), Point(4.0, -3.0)
        s = elevate_line(a, b)
        for t in np.linspace(0, 1, 17):
            expect = Point(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
            assert s.eval(t).dist(expect) < 1e-12


class TestCurveBbox:
    def test_straight_segment(self):
        s = elevate_line(Point(0, 0), Point(1, 0))
        assert curve_bbox(s) == pytest.approx((0, 0, 1, 0))

    def test_arch_maximum(self):
        s = seg([(0, 0), (0, 1), (1, 1), (1, 0)])
        xmin, ymin, xmax, ymax = curve_bbox(s)
        assert ymax == pytest.approx(0.75)
        assert (xmin, ymin, xmax) == pytest.approx((0, 0, 1))

    def test_constant_point(self):
        s = seg([(2, 3)] * 4)
        assert curve_bbox(s) == pytest.approx((2, 3, 2, 3))

    def test_against_sampling_oracle(self):
        rng = np.random.default_rng(7)
        ts = np.linspace(0.0, 1.0, 1000)
        for _ in range(50):
            s = random_segment(rng)
            pts = np.array([[s.eval(t).x, s.eval(t).y] for t in ts])
            xmin, ymin, xmax, ymax = curve_bbox(s)
            assert xmin <= pts[:, 0].min() + 1e-9
            assert xmax >= pts[:, 0].max() - 1e-9
            assert abs(xmin - pts[:, 0].min()) < 1e-6
            assert abs(xmax - pts[:, 0].max()) < 1e-6
            assert abs(ymin - pts[:, 1].min()) < 1e-6
            assert abs(ymax - pts[:, 1].max()) < 1e-6


class TestParse:
    def test_close_adds_segment(self):
        img = parse_svg('<svg><path d="M 0 0 C 0 1 1 1 1 0 Z"/></svg>')
        assert img.n_chunks() == 1
        chunk = img.chunks[0]
        assert chunk.closed
        assert chunk.n_segments() == 2
        closing = chunk.segments[1]
        assert closing.p0 == Point(1, 0)
        assert closing.p3 == Point(0, 0)

    def test_line_elevation(self):
        img = parse_svg('<svg><path d="M 0 0 L 3 0"/></svg>')
        chunk = img.chunks[0]
        assert not chunk.closed
        assert chunk.n_segments() == 1
        assert chunk.segments[0].p1 == Point(1, 0)
        assert chunk.segments[0].p2 == Point(2, 0)

    def test_truncated_coordinate(self):
        with pytest.raises(SvgParseError) as e:
            parse_svg('<svg><path d="M 0"/></svg>')
        assert e.value.offset == 3

    def test_unsupported_command_named(self):
        with pytest.raises(UnsupportedSvgFeatureError, match="'A'"):
            parse_svg('<svg><path d="M 0 0 A 1 1 0 0 0 2 2"/></svg>')

    def test_relative_command_rejected(self):
        with pytest.raises(UnsupportedSvgFeatureError, match="'l'"):
            parse_svg('<svg><path d="M 0 0 l 1 1"/></svg>')

    def test_multiple_subpaths(self):
        img = parse_svg('<svg><path d="M 0 0 L 1 0 M 2 0 L 3 0 L 3 1"/></svg>')
        assert img.n_chunks() == 2
        assert img.chunks[0].n_segments() == 1
        assert img.chunks[1].n_segments() == 2

    def test_implicit_lineto_after_move(self):
        img = parse_svg('<svg><path d="M 0 0 1 0 1 1"/></svg>')
        assert img.chunks[0].n_segments() == 2

    def test_quadratic(self):
        img = parse_svg('<svg><path d="M 0 0 Q 1 2 2 0"/></svg>')
        s = img.chunks[0].segments[0]
        assert s.p1.y == pytest.approx(4 / 3)

    def test_malformed_xml(self):
        with pytest.raises(SvgParseError):
            parse_svg("<svg><path d=")

    def test_z_with_coincident_endpoints_adds_nothing(self):
        img = parse_svg('<svg><path d="M 0 0 C 1 1 2 1 0 0 Z"/></svg>')
        assert img.chunks[0].n_segments() == 1
        assert img.chunks[0].closed


class TestNormalize:
    def rect_image(self, w, h):
        pts = [Point(0, 0), Point(w, 0), Point(w, h), Point(0, h)]
        segs = [elevate_line(pts[i], pts[(i + 1) % 4]) for i in range(4)]
        return parse_like(segs, closed=True)

    def test_uniform_scaling(self):
        img = self.rect_image(10, 20)
        out = normalize_height(img)
        xmin, ymin, xmax, ymax = global_bbox(out)
        assert (xmin, ymin) == pytest.approx((0, 0), abs=1e-12)
        assert ymax == pytest.approx(1.0, abs=1e-12)
        assert xmax == pytest.approx(0.5, abs=1e-12)
        assert out.normalized

    def test_phone_frame_width(self):
        img = self.rect_image(71.15, 146.15)
        out = normalize_height(img)
        assert global_bbox(out)[2] == pytest.approx(0.4868, abs=5e-4)

    def test_degenerate_height(self):
        segs = [elevate_line(Point(0, 0), Point(5, 0))]
        img = parse_like(segs, closed=False)
        with pytest.raises(DegenerateImageError):
            normalize_height(img)

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        segs = []
        cur = Point(0.0, 0.0)
        for _ in range(5):
            pts = rng.uniform(0, 4, size=(3, 2))
            s = CubicSegment(cur, Point(*pts[0]), Point(*pts[1]), Point(*pts[2]))
            segs.append(s)
            cur = s.p3
        img = parse_like(segs, closed=False)
        once = normalize_height(img)
        twice = normalize_height(once)
        for c1, c2 in zip(once.chunks, twice.chunks):
            for s1, s2 in zip(c1.segments, c2.segments):
                for p1, p2 in zip(s1.points(), s2.points()):
                    assert p1.dist(p2) < 1e-12


def parse_like(segs, closed):
    from bignet.vgraph import VectorImage

    return VectorImage(chunks=(make_chunk(0, segs, closed),))


class TestResegment:
    def test_under_threshold_unchanged(self):
        s = elevate_line(Point(0, 0), Point(0.9, 0))
        img = parse_like([s], closed=False)
        out = resegment(img, 1.0)
        assert out.chunks[0].n_segments() == 1

    def test_one_bisection(self):
        s = elevate_line(Point(0, 0), Point(2, 0))
        img = parse_like([s], closed=False)
        out = resegment(img, 1.0)
        assert out.chunks[0].n_segments() == 2
        for piece in out.chunks[0].segments:
            assert piece.control_polygon_length() == pytest.approx(1.0)

    def test_geometry_preserved_random(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            s = random_segment(rng)
            img = parse_like([s], closed=False)
            out = resegment(img, 0.5)
            pieces = out.chunks[0].segments
            for t in np.linspace(0, 1, 100):
                p = s.eval(t)
                assert nearest_distance(p, pieces) < 1e-9

    def test_rejects_bad_max_len(self):
        img = parse_like([elevate_line(Point(0, 0), Point(1, 0))], closed=False)
        with pytest.raises(ContractError):
            resegment(img, 0.0)


class TestWrite:
    def normalized_image(self, seed=5):
        rng = np.random.default_rng(seed)
        chunks = []
        for cid in range(3):
            segs = []
            cur = Point(*rng.uniform(0, 3, size=2))
            start = cur
            for _ in range(rng.integers(1, 5)):
                pts = rng.uniform(0, 3, size=(3, 2))
                s = CubicSegment(cur, Point(*pts[0]), Point(*pts[1]), Point(*pts[2]))
                segs.append(s)
                cur = s.p3
            closed = bool(rng.integers(0, 2))
            if closed:
                segs.append(elevate_line(cur, start))
            chunks.append(make_chunk(cid, segs, closed))
        from bignet.vgraph import VectorImage

        return normalize_height(VectorImage(chunks=tuple(chunks)))

    def test_round_trip(self):
        img = self.normalized_image()
        back = parse_svg(write_svg(img))
        assert back.n_chunks() == img.n_chunks()
        for c1, c2 in zip(img.chunks, back.chunks):
            assert c1.n_segments() == c2.n_segments()
            assert c1.closed == c2.closed
            for s1, s2 in zip(c1.segments, c2.segments):
                for p1, p2 in zip(s1.points(), s2.points()):
                    assert p1.dist(p2) < 1e-8

    def test_empty_image(self):
        from bignet.vgraph import VectorImage

        text = write_svg(VectorImage(chunks=()))
        assert "<svg" in text and "path" not in text
        assert parse_svg(text).n_chunks() == 0

    def test_important_chunk_stroke(self):
        img = self.normalized_image()
        text = write_svg(img, SvgStyle(important_chunks=frozenset({1})))
        line = next(ln for ln in text.splitlines() if 'id="chunk-1"' in ln)
        assert 'stroke="#FF0000"' in line
        assert 'class="important-chunk"' in line

    def test_important_curve_overlay(self):
        img = self.normalized_image()
        text = write_svg(img, SvgStyle(important_curves=frozenset({(0, 0)})))
        assert 'id="chunk-0-curve-0"' in text
        assert 'stroke="#0000FF"' in text

    def test_deterministic(self):
        img = self.normalized_image()
        assert write_svg(img) == write_svg(img)


class TestChunkInvariants:
    def test_snaps_small_gap(self):
        s1 = elevate_line(Point(0, 0), Point(1, 0))
        s2 = elevate_line(Point(1 + 1e-8, 0), Point(2, 0))
        chunk = make_chunk(0, [s1, s2], closed=False)
        assert chunk.segments[1].p0 == chunk.segments[0].p3

    def test_rejects_large_gap(self):
        s1 = elevate_line(Point(0, 0), Point(1, 0))
        s2 = elevate_line(Point(1.5, 0), Point(2, 0))
        with pytest.raises(ContractError):
            make_chunk(0, [s1, s2], closed=False)

    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            make_chunk(0, [], closed=False)

    def test_bbox_is_exact(self):
        s = seg([(0, 0), (0, 1), (1, 1), (1, 0)])
        chunk = make_chunk(0, [s], closed=False)
        cx, cy, w, h, area = chunk.bbox
        assert (w, h) == pytest.approx((1.0, 0.75))
        assert area == pytest.approx(0.75)
        assert (cx, cy) == pytest.approx((0.5, 0.375))
