"""Parametric phone generator: brand rule sets, sampling, and construction.

A rule set declares continuous parameter ranges, discrete options, linear
regulation predicates, and an ordered list of construction rules.  Sampling
is uniform with rejection against the regulations; construction applies the
rules in order, emitting one or more chunks each, then normalizes the result
to unit height and resegments it to a uniform curve granularity.

The shipped Apple/Samsung rule sets are a documented reconstruction targeting
the published parameter counts (Apple 28/5/6, Samsung 25/1/12); they are not
claimed to match any proprietary rule schema.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConstructionError, ContractError, InfeasibleRulesetError
from .manifest import DatasetManifest, ManifestEntry, save_manifest
from .vgraph import (
    Chunk,
    CubicSegment,
    Point,
    VectorImage,
    elevate_line,
    make_chunk,
    normalize_height,
    resegment,
    write_svg,
)

KAPPA = 0.5522847498307936  # cubic approximation of a quarter circle
SIDE_GAP = 0.6              # mm clearance between frame and buttons / screen and notch
SEGMENT_BUDGET = 0.05       # resegmentation length in normalized units
MAX_REJECTIONS = 1000


# ---------------------------------------------------------------------------
# Rule set schema


@dataclass(frozen=True)
class Regulation:
    """Linear predicate: sum(coef * value) <= bound, optionally gated on a
    discrete choice."""

    name: str
    terms: tuple[tuple[float, str], ...]
    bound: float
    when: tuple[str, int] | None = None  # (discrete param, option index)

    def params(self) -> set[str]:
        return {p for _, p in self.terms if p != "1"}

    def applies(self, assignment: dict) -> bool:
        if self.when is None:
            return True
        return assignment.get(self.when[0]) == self.when[1]

    def satisfied(self, assignment: dict) -> bool:
        if not self.applies(assignment):
            return True
        total = 0.0
        for coef, p in self.terms:
            total += coef * (1.0 if p == "1" else assignment[p])
        return total <= self.bound + 1e-12


@dataclass(frozen=True)
class RuleStep:
    id: str
    kind: str
    params: tuple[str, ...]


@dataclass(frozen=True)
class BrandRuleSet:
    brand: str
    rules: tuple[RuleStep, ...]
    continuous: dict[str, tuple[float, float]]  # name -> (min, max), mm
    discrete: dict[str, tuple]                  # name -> options
    regulations: tuple[Regulation, ...]

    def __post_init__(self):
        declared = set(self.continuous) | set(self.discrete)
        for rule in self.rules:
            missing = set(rule.params) - declared
            if missing:
                raise ContractError(f"rule {rule.id} references undeclared {sorted(missing)}")
        for lo, hi in self.continuous.values():
            if not lo < hi:
                raise ContractError(f"{self.brand}: continuous range must have min < max")
        for reg in self.regulations:
            missing = reg.params() - set(self.continuous)
            if missing:
                raise ContractError(
                    f"regulation {reg.name} references undeclared {sorted(missing)}"
                )
            if reg.when is not None and reg.when[0] not in self.discrete:
                raise ContractError(f"regulation {reg.name} gates on undeclared discrete")

    def anchor(self, name: str) -> float:
        lo, hi = self.continuous[name]
        return (lo + hi) / 2.0

    def with_ranges(self, overrides: dict[str, tuple[float, float]]) -> "BrandRuleSet":
        missing = set(overrides) - set(self.continuous)
        if missing:
            raise ContractError(f"unknown continuous params {sorted(missing)}")
        cont = dict(self.continuous)
        cont.update({k: (float(a), float(b)) for k, (a, b) in overrides.items()})
        return BrandRuleSet(
            brand=self.brand,
            rules=self.rules,
            continuous=cont,
            discrete=self.discrete,
            regulations=self.regulations,
        )


def ruleset_to_json(rs: BrandRuleSet) -> str:
    doc = {
        "brand": rs.brand,
        "rules": [{"id": r.id, "kind": r.kind, "params": list(r.params)} for r in rs.rules],
        "continuous": {k: {"min": v[0], "max": v[1], "unit": "mm"} for k, v in rs.continuous.items()},
        "discrete": {k: list(v) for k, v in rs.discrete.items()},
        "regulations": [
            {
                "name": g.name,
                "terms": [[c, p] for c, p in g.terms],
                "max": g.bound,
                **({"when": {"param": g.when[0], "equals": g.when[1]}} if g.when else {}),
            }
            for g in rs.regulations
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def ruleset_from_json(text: str) -> BrandRuleSet:
    doc = json.loads(text)
    return BrandRuleSet(
        brand=doc["brand"],
        rules=tuple(
            RuleStep(id=r["id"], kind=r["kind"], params=tuple(r["params"]))
            for r in doc["rules"]
        ),
        continuous={k: (float(v["min"]), float(v["max"])) for k, v in doc["continuous"].items()},
        discrete={k: tuple(v) for k, v in doc["discrete"].items()},
        regulations=tuple(
            Regulation(
                name=g["name"],
                terms=tuple((float(c), p) for c, p in g["terms"]),
                bound=float(g["max"]),
                when=(g["when"]["param"], int(g["when"]["equals"])) if "when" in g else None,
            )
            for g in doc["regulations"]
        ),
    )


@dataclass(frozen=True)
class PhoneParams:
    assignment: dict                      # continuous -> float (mm), discrete -> option index
    brand: str
    seed: int
    extrapolated: frozenset = frozenset() # params exempt from range/regulation checks


def check_params(p: PhoneParams, rs: BrandRuleSet) -> None:
    for name, (lo, hi) in rs.continuous.items():
        if name not in p.assignment:
            raise ContractError(f"missing continuous parameter {name}")
        if name in p.extrapolated:
            continue
        v = p.assignment[name]
        if not (lo - 1e-9 <= v <= hi + 1e-9):
            raise ContractError(f"{name}={v:g} outside [{lo:g}, {hi:g}]")
    for name, options in rs.discrete.items():
        if name not in p.assignment:
            raise ContractError(f"missing discrete parameter {name}")
        idx = p.assignment[name]
        if not (isinstance(idx, (int, np.integer)) and 0 <= idx < len(options)):
            raise ContractError(f"{name} index {idx!r} out of range")
    for reg in rs.regulations:
        if reg.params() & p.extrapolated or (reg.when and reg.when[0] in p.extrapolated):
            continue
        if not reg.satisfied(p.assignment):
            raise ContractError(f"regulation {reg.name} violated")


def sample_params(rs: BrandRuleSet, rng_seed: int) -> PhoneParams:
    """Uniform draw over ranges and options, rejected against regulations."""
    rng = np.random.default_rng(rng_seed)
    first_violation = None
    for _ in range(MAX_REJECTIONS):
        assignment: dict = {}
        for name, (lo, hi) in rs.continuous.items():
            assignment[name] = float(rng.uniform(lo, hi))
        for name, options in rs.discrete.items():
            assignment[name] = int(rng.integers(0, len(options)))
        violated = next((g.name for g in rs.regulations if not g.satisfied(assignment)), None)
        if violated is None:
            return PhoneParams(assignment=assignment, brand=rs.brand, seed=rng_seed)
        first_violation = first_violation or violated
    raise InfeasibleRulesetError(
        f"{MAX_REJECTIONS} consecutive rejections sampling {rs.brand!r}; "
        f"first violated regulation: {first_violation}",
        regulation=first_violation or "",
    )


def anchor_params(rs: BrandRuleSet, discrete: dict[str, int] | None = None) -> PhoneParams:
    """Mid-range assignment with explicit discrete choices (default option 0)."""
    assignment: dict = {name: rs.anchor(name) for name in rs.continuous}
    for name in rs.discrete:
        assignment[name] = 0
    if discrete:
        for k, v in discrete.items():
            if k not in rs.discrete:
                raise ContractError(f"unknown discrete parameter {k}")
            assignment[k] = int(v)
    p = PhoneParams(assignment=assignment, brand=rs.brand, seed=-1)
    check_params(p, rs)
    return p


# ---------------------------------------------------------------------------
# Geometry primitives


def _arc(p0: Point, c1: Point, c2: Point, p3: Point) -> CubicSegment:
    return CubicSegment(p0, c1, c2, p3)


def _rounded_rect_segments(x: float, y: float, w: float, h: float, r: float) -> list[CubicSegment]:
    if w <= 0.0 or h <= 0.0:
        raise ConstructionError(f"rectangle with non-positive extent {w:g} x {h:g}")
    if r < 0.0 or 2.0 * r > w + 1e-9 or 2.0 * r > h + 1e-9:
        raise ConstructionError(f"corner radius {r:g} does not fit {w:g} x {h:g}")
    r = min(r, w / 2.0, h / 2.0)
    segs: list[CubicSegment] = []
    k = KAPPA * r

    def line(a, b):
        if a.dist(b) > 1e-12:
            segs.append(elevate_line(a, b))

    if r == 0.0:
        corners = [Point(x, y), Point(x + w, y), Point(x + w, y + h), Point(x, y + h)]
        for i in range(4):
            line(corners[i], corners[(i + 1) % 4])
        return segs
    # Clockwise in screen coordinates, starting after the top-left fillet.
    line(Point(x + r, y), Point(x + w - r, y))
    segs.append(_arc(Point(x + w - r, y), Point(x + w - r + k, y),
                     Point(x + w, y + r - k), Point(x + w, y + r)))
    line(Point(x + w, y + r), Point(x + w, y + h - r))
    segs.append(_arc(Point(x + w, y + h - r), Point(x + w, y + h - r + k),
                     Point(x + w - r + k, y + h), Point(x + w - r, y + h)))
    line(Point(x + w - r, y + h), Point(x + r, y + h))
    segs.append(_arc(Point(x + r, y + h), Point(x + r - k, y + h),
                     Point(x, y + h - r + k), Point(x, y + h - r)))
    line(Point(x, y + h - r), Point(x, y + r))
    segs.append(_arc(Point(x, y + r), Point(x, y + r - k),
                     Point(x + r - k, y), Point(x + r, y)))
    return segs


def _circle_segments(cx: float, cy: float, r: float) -> list[CubicSegment]:
    if r <= 0.0:
        raise ConstructionError(f"circle with radius {r:g}")
    k = KAPPA * r
    return [
        _arc(Point(cx + r, cy), Point(cx + r, cy + k), Point(cx + k, cy + r), Point(cx, cy + r)),
        _arc(Point(cx, cy + r), Point(cx - k, cy + r), Point(cx - r, cy + k), Point(cx - r, cy)),
        _arc(Point(cx - r, cy), Point(cx - r, cy - k), Point(cx - k, cy - r), Point(cx, cy - r)),
        _arc(Point(cx, cy - r), Point(cx + k, cy - r), Point(cx + r, cy - k), Point(cx + r, cy)),
    ]


def _slot_segments(x: float, y: float, w: float, h: float, r: float) -> list[CubicSegment]:
    return _rounded_rect_segments(x, y, w, h, min(r, w / 2.0, h / 2.0))


# ---------------------------------------------------------------------------
# Construction rules


class _Builder:
    def __init__(self, rs: BrandRuleSet, p: PhoneParams):
        self.rs = rs
        self.a = p.assignment
        self.shapes: list[list[CubicSegment]] = []

    def v(self, name: str) -> float:
        return float(self.a[name])

    def option(self, name: str):
        return self.rs.discrete[name][self.a[name]]

    def add(self, segs: list[CubicSegment]) -> None:
        self.shapes.append(segs)

    # Shared geometry anchors
    def bezel(self) -> float:
        return self.v("edge_to_plane") + self.v("plane_to_screen")

    def screen_top(self) -> float:
        return self.bezel()

    def notch_top(self) -> float:
        return self.screen_top() + SIDE_GAP


def _rule_outer_frame(b: _Builder) -> None:
    b.add(_rounded_rect_segments(0.0, 0.0, b.v("width"), b.v("height"), b.v("fillet")))


def _rule_inner_edge(b: _Builder) -> None:
    g = b.v("edge_to_plane")
    b.add(
        _rounded_rect_segments(
            g, g, b.v("width") - 2 * g, b.v("height") - 2 * g, b.v("plane_fillet")
        )
    )


def _rule_screen(b: _Builder) -> None:
    g = b.bezel()
    chin = b.v("chin_extra") if "chin_extra" in b.a else 0.0
    b.add(
        _rounded_rect_segments(
            g,
            g,
            b.v("width") - 2 * g,
            b.v("height") - 2 * g - chin,
            b.v("screen_fillet"),
        )
    )


def _rule_notch(b: _Builder) -> None:
    nw = b.v("notch_width")
    b.add(
        _rounded_rect_segments(
            b.v("width") / 2 - nw / 2,
            b.notch_top(),
            nw,
            b.v("notch_height"),
            b.v("notch_fillet"),
        )
    )


def _rule_notch_circles(b: _Builder) -> None:
    count = int(b.option("n_circles"))
    if count == 0:
        return
    cy = b.notch_top() + b.v("lens_drop")
    cx0 = b.v("width") / 2
    b.add(_circle_segments(cx0 + b.v("lens_offset_x"), cy, b.v("lens_diameter") / 2))
    step = b.v("sensor_diameter") + b.v("circle_gap")
    for k in range(count - 1):
        b.add(
            _circle_segments(
                cx0 + b.v("sensor_offset_x") + k * step, cy, b.v("sensor_diameter") / 2
            )
        )


def _rule_notch_speaker(b: _Builder) -> None:
    sw, sh = b.v("speaker_width"), b.v("speaker_height")
    if b.option("speaker_pos") == "middle":
        sy = b.notch_top() + b.v("notch_height") / 2 - sh / 2
    else:
        sy = b.notch_top() + b.v("speaker_drop")
    b.add(_slot_segments(b.v("width") / 2 - sw / 2, sy, sw, sh, b.v("speaker_fillet")))


def _rule_punch_hole(b: _Builder) -> None:
    layout = b.option("lens_layout")
    r = b.v("punch_diameter") / 2
    cy = b.screen_top() + b.v("punch_drop")
    screen_right = b.v("width") - b.bezel()
    if layout == "center":
        b.add(_circle_segments(b.v("width") / 2 + b.v("punch_offset_x"), cy, r))
    elif layout == "right_single":
        b.add(_circle_segments(screen_right - b.v("punch_margin"), cy, r))
    elif layout == "right_double":
        cx1 = screen_right - b.v("punch_margin")
        b.add(_circle_segments(cx1, cy, r))
        b.add(_circle_segments(cx1 - b.v("punch_diameter") - b.v("punch_gap"), cy, r))
    else:
        raise ConstructionError(f"unknown lens layout {layout!r}")


def _rule_bezel_speaker(b: _Builder) -> None:
    sw, sh = b.v("speaker_width"), b.v("speaker_height")
    b.add(
        _slot_segments(
            b.v("width") / 2 + b.v("speaker_offset_x") - sw / 2,
            b.v("speaker_drop"),
            sw,
            sh,
            b.v("speaker_fillet"),
        )
    )


def _rule_bezel_sensor(b: _Builder) -> None:
    cy = b.bezel() / 2
    cx = b.v("width") / 2 + b.v("speaker_offset_x") + b.v("sensor_offset_x")
    b.add(_circle_segments(cx, cy, b.v("sensor_diameter") / 2))


def _button(b: _Builder, x: float, y: float, length: float) -> None:
    bd = b.v("button_depth")
    b.add(_slot_segments(x, y, bd, length, 0.3 * bd))


def _rule_side_buttons(b: _Builder) -> None:
    bd = b.v("button_depth")
    left_x = -SIDE_GAP - bd
    right_x = b.v("width") + SIDE_GAP
    if b.option("mute_present") == "yes":
        _button(b, left_x, b.v("mute_y"), b.v("mute_len"))
    vy, vlen, vgap = b.v("volume_y"), b.v("volume_len"), b.v("volume_gap")
    if b.option("volume_split") == "split":
        half = (vlen - vgap) / 2
        if half <= 0:
            raise ConstructionError("volume gap exceeds volume length")
        _button(b, left_x, vy, half)
        _button(b, left_x, vy + half + vgap, half)
    else:
        _button(b, left_x, vy, vlen)
    if b.option("power_present") == "yes":
        _button(b, right_x, b.v("power_y"), b.v("power_len"))


def _rule_side_buttons_right(b: _Builder) -> None:
    right_x = b.v("width") + SIDE_GAP
    _button(b, right_x, b.v("volume_y"), b.v("volume_len"))
    _button(b, right_x, b.v("power_y"), b.v("power_len"))


_RULE_KINDS = {
    "outer_frame": _rule_outer_frame,
    "inner_edge": _rule_inner_edge,
    "screen": _rule_screen,
    "notch": _rule_notch,
    "notch_circles": _rule_notch_circles,
    "notch_speaker": _rule_notch_speaker,
    "punch_hole": _rule_punch_hole,
    "bezel_speaker": _rule_bezel_speaker,
    "bezel_sensor": _rule_bezel_sensor,
    "side_buttons": _rule_side_buttons,
    "side_buttons_right": _rule_side_buttons_right,
}


def build_phone(p: PhoneParams, rs: BrandRuleSet, label: int | None = None) -> VectorImage:
    """Deterministically construct one phone image from a parameter assignment."""
    check_params(p, rs)
    b = _Builder(rs, p)
    for rule in rs.rules:
        fn = _RULE_KINDS.get(rule.kind)
        if fn is None:
            raise ConstructionError(f"unknown rule kind {rule.kind!r}")
        fn(b)
    chunks = tuple(
        make_chunk(i, segs, closed=True) for i, segs in enumerate(b.shapes)
    )
    img = VectorImage(
        chunks=chunks, label=label, source_id=f"{rs.brand}-{p.seed}", normalized=False
    )
    return resegment(normalize_height(img), SEGMENT_BUDGET)


def variant_grid(
    base: PhoneParams, rs: BrandRuleSet, overrides: list
) -> list[VectorImage | None]:
    """One image per override set; failures yield None instead of raising.

    Each element of `overrides` is either a single (param, value) pair or a
    tuple of such pairs.  Overridden parameters are exempt from range and
    regulation checks, which is the point of extrapolation sweeps.
    """
    if not overrides:
        return [build_phone(base, rs)]
    out: list[VectorImage | None] = []
    for entry in overrides:
        pairs = [entry] if (len(entry) == 2 and isinstance(entry[0], str)) else list(entry)
        assignment = dict(base.assignment)
        names = set(base.extrapolated)
        bad = False
        for name, value in pairs:
            if name not in rs.continuous and name not in rs.discrete:
                raise ContractError(f"unknown parameter {name!r}")
            assignment[name] = value
            names.add(name)
        p = PhoneParams(
            assignment=assignment,
            brand=base.brand,
            seed=base.seed,
            extrapolated=frozenset(names),
        )
        try:
            out.append(build_phone(p, rs))
        except ConstructionError:
            out.append(None)
    return out


def generate_dataset(
    rule_sets: list[BrandRuleSet],
    n_per_brand: int,
    seed: int,
    out_dir: Path,
) -> DatasetManifest:
    """Write n_per_brand SVGs per brand plus a JSONL manifest.

    Per-sample seeds are seed + global sample index, so any subset of the
    dataset can be regenerated independently.
    """
    if n_per_brand < 1:
        raise ContractError("n_per_brand must be at least 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    class_names = tuple(rs.brand for rs in rule_sets)
    entries = []
    for label, rs in enumerate(rule_sets):
        for k in range(n_per_brand):
            sample_seed = seed + label * n_per_brand + k
            params = sample_params(rs, sample_seed)
            img = build_phone(params, rs, label=label)
            name = f"{rs.brand}_{k:05d}.svg"
            try:
                (out_dir / name).write_text(write_svg(img), encoding="utf-8")
            except OSError as e:
                raise ContractError(f"cannot write {out_dir / name}: {e}") from e
            entries.append(
                ManifestEntry(
                    path=name, label=label, brand=rs.brand, split="train", seed=sample_seed
                )
            )
    manifest = DatasetManifest(
        entries=tuple(entries), class_names=class_names, base_dir=out_dir
    )
    save_manifest(manifest, out_dir / "manifest.jsonl")
    return manifest


# ---------------------------------------------------------------------------
# Shipped rule sets


def _pm8(anchor: float) -> tuple[float, float]:
    lo, hi = sorted((anchor * 0.92, anchor * 1.08))
    return (lo, hi)


def normalized_segment_length(width: float, fillet: float, height: float) -> float:
    """Length of the straight top-edge run of the frame, in unit-height terms."""
    return (width - 2.0 * fillet) / height


def apple_rules() -> BrandRuleSet:
    continuous = {
        "width": _pm8(71.15),
        "height": _pm8(146.15),
        "fillet": _pm8(10.75),
        "edge_to_plane": _pm8(2.4),
        "plane_fillet": _pm8(9.0),
        "plane_to_screen": _pm8(2.6),
        "screen_fillet": _pm8(7.2),
        "notch_width": _pm8(28.0),
        "notch_height": _pm8(7.5),
        "notch_fillet": _pm8(2.4),
        "speaker_width": _pm8(7.0),
        "speaker_height": _pm8(1.5),
        "speaker_fillet": _pm8(0.6),
        "speaker_drop": _pm8(1.2),
        "lens_diameter": _pm8(3.4),
        "lens_offset_x": _pm8(-8.0),
        "lens_drop": _pm8(3.75),
        "sensor_diameter": _pm8(1.4),
        "circle_gap": _pm8(0.9),
        "sensor_offset_x": _pm8(5.8),
        "mute_y": _pm8(26.0),
        "mute_len": _pm8(6.5),
        "volume_y": _pm8(38.0),
        "volume_len": _pm8(11.0),
        "volume_gap": _pm8(2.5),
        "power_y": _pm8(42.0),
        "power_len": _pm8(18.0),
        "button_depth": _pm8(1.1),
    }
    discrete = {
        "speaker_pos": ("middle", "top"),
        "n_circles": (0, 1, 2, 3, 4),
        "mute_present": ("yes", "no"),
        "volume_split": ("split", "joined"),
        "power_present": ("yes", "no"),
    }
    regulations = (
        Regulation("aspect_min", ((1.95, "width"), (-1.0, "height")), 0.0),
        Regulation("aspect_max", ((1.0, "height"), (-2.16, "width")), 0.0),
        Regulation("notch_fits", ((1.0, "notch_width"), (-0.45, "width")), 0.0),
        Regulation(
            "fillet_nesting", ((1.0, "screen_fillet"), (-1.0, "plane_fillet")), -0.5
        ),
        Regulation(
            "cluster_fits_notch",
            (
                (1.0, "sensor_offset_x"),
                (2.5, "sensor_diameter"),
                (2.0, "circle_gap"),
                (1.0, "notch_fillet"),
                (-0.5, "notch_width"),
            ),
            0.0,
        ),
        Regulation("buttons_ordered", ((1.0, "mute_y"), (1.0, "mute_len"), (-1.0, "volume_y")), 0.0),
    )
    rules = (
        RuleStep("R1", "outer_frame", ("width", "height", "fillet")),
        RuleStep("R2", "inner_edge", ("width", "height", "edge_to_plane", "plane_fillet")),
        RuleStep(
            "R3",
            "screen",
            ("width", "height", "edge_to_plane", "plane_to_screen", "screen_fillet"),
        ),
        RuleStep(
            "R4",
            "notch",
            ("width", "edge_to_plane", "plane_to_screen", "notch_width", "notch_height", "notch_fillet"),
        ),
        RuleStep(
            "R5",
            "notch_circles",
            (
                "width",
                "edge_to_plane",
                "plane_to_screen",
                "n_circles",
                "lens_diameter",
                "lens_offset_x",
                "lens_drop",
                "sensor_diameter",
                "sensor_offset_x",
                "circle_gap",
            ),
        ),
        RuleStep(
            "R6",
            "notch_speaker",
            (
                "width",
                "edge_to_plane",
                "plane_to_screen",
                "notch_height",
                "speaker_pos",
                "speaker_width",
                "speaker_height",
                "speaker_fillet",
                "speaker_drop",
            ),
        ),
        RuleStep(
            "R7",
            "side_buttons",
            (
                "width",
                "button_depth",
                "mute_present",
                "mute_y",
                "mute_len",
                "volume_split",
                "volume_y",
                "volume_len",
                "volume_gap",
                "power_present",
                "power_y",
                "power_len",
            ),
        ),
    )
    return BrandRuleSet(
        brand="apple",
        rules=rules,
        continuous=continuous,
        discrete=discrete,
        regulations=regulations,
    )


def samsung_rules() -> BrandRuleSet:
    continuous = {
        "width": _pm8(73.1),
        "height": _pm8(154.55),
        "fillet": _pm8(7.415),
        "edge_to_plane": _pm8(1.4),
        "plane_fillet": _pm8(6.4),
        "plane_to_screen": _pm8(1.2),
        "screen_fillet": _pm8(5.6),
        "chin_extra": _pm8(0.8),
        "punch_diameter": _pm8(4.0),
        "punch_drop": _pm8(5.0),
        "punch_offset_x": (-0.8, 0.8),
        "punch_margin": _pm8(6.0),
        "punch_gap": _pm8(1.6),
        "speaker_width": _pm8(12.0),
        "speaker_height": _pm8(1.2),
        "speaker_fillet": _pm8(0.5),
        "speaker_drop": _pm8(1.1),
        "speaker_offset_x": (-1.0, 1.0),
        "sensor_diameter": _pm8(1.1),
        "sensor_offset_x": _pm8(9.0),
        "volume_y": _pm8(30.0),
        "volume_len": _pm8(14.0),
        "power_y": _pm8(48.0),
        "power_len": _pm8(9.0),
        "button_depth": _pm8(1.0),
    }
    discrete = {
        "lens_layout": ("center", "right_single", "right_double"),
    }
    regulations = (
        Regulation("aspect_min", ((2.02, "width"), (-1.0, "height")), 0.0),
        Regulation("aspect_max", ((1.0, "height"), (-2.21, "width")), 0.0),
        Regulation("fillet_max", ((1.0, "fillet"), (-0.12, "width")), 0.0),
        Regulation("plane_fillet_nested", ((1.0, "plane_fillet"), (-1.0, "fillet")), -0.4),
        Regulation(
            "screen_fillet_nested", ((1.0, "screen_fillet"), (-1.0, "plane_fillet")), -0.2
        ),
        Regulation("gaps_budget", ((1.0, "edge_to_plane"), (1.0, "plane_to_screen")), 2.75),
        Regulation("punch_below_top", ((0.5, "punch_diameter"), (-1.0, "punch_drop")), -1.0),
        Regulation("punch_margin_ok", ((0.5, "punch_diameter"), (-1.0, "punch_margin")), -1.0),
        Regulation(
            "punch_pair_tight",
            ((1.0, "punch_gap"), (-1.0, "punch_diameter")),
            0.0,
            when=("lens_layout", 2),
        ),
        Regulation(
            "speaker_in_bezel",
            (
                (1.0, "speaker_drop"),
                (1.0, "speaker_height"),
                (-1.0, "edge_to_plane"),
                (-1.0, "plane_to_screen"),
            ),
            0.0,
        ),
        Regulation(
            "buttons_ordered", ((1.0, "volume_y"), (1.0, "volume_len"), (-1.0, "power_y")), 0.0
        ),
        Regulation(
            "buttons_in_side", ((1.0, "power_y"), (1.0, "power_len"), (-0.42, "height")), 0.0
        ),
    )
    rules = (
        RuleStep("R1", "outer_frame", ("width", "height", "fillet")),
        RuleStep("R2", "inner_edge", ("width", "height", "edge_to_plane", "plane_fillet")),
        RuleStep(
            "R3",
            "screen",
            (
                "width",
                "height",
                "edge_to_plane",
                "plane_to_screen",
                "screen_fillet",
                "chin_extra",
            ),
        ),
        RuleStep(
            "R4",
            "punch_hole",
            (
                "width",
                "edge_to_plane",
                "plane_to_screen",
                "lens_layout",
                "punch_diameter",
                "punch_drop",
                "punch_offset_x",
                "punch_margin",
                "punch_gap",
            ),
        ),
        RuleStep(
            "R5",
            "bezel_speaker",
            (
                "width",
                "speaker_width",
                "speaker_height",
                "speaker_fillet",
                "speaker_drop",
                "speaker_offset_x",
            ),
        ),
        RuleStep(
            "R6",
            "bezel_sensor",
            (
                "width",
                "edge_to_plane",
                "plane_to_screen",
                "sensor_diameter",
                "sensor_offset_x",
                "speaker_offset_x",
            ),
        ),
        RuleStep(
            "R7",
            "side_buttons_right",
            ("width", "button_depth", "volume_y", "volume_len", "power_y", "power_len"),
        ),
    )
    return BrandRuleSet(
        brand="samsung",
        rules=rules,
        continuous=continuous,
        discrete=discrete,
        regulations=regulations,
    )


BUILTIN_RULES = {"apple": apple_rules, "samsung": samsung_rules}
