"""Tensor bundle consumed by the network.

Each image becomes: one (n_c, 8) control-point matrix per chunk whose rows
form an implicit ring (row k neighbors rows k-1 and k+1 modulo n_c), an
(N, 5) per-chunk bounding-box feature matrix, and an (N, N, 5) pairwise
bounding-box feature tensor.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .vgraph import VectorImage

BOX_EPS = 1e-6


@dataclass
class TwoTierGraph:
    curves: list[np.ndarray]   # per chunk: (n_c, 8) float64
    boxes: np.ndarray          # (N, 5): cx, cy, w/wmax, h/hmax, a/amax
    pairwise: np.ndarray       # (N, N, 5): dx, dy, log w ratio, log h ratio, log a ratio
    label: int | None = None
    source_id: str = ""

    def n_chunks(self) -> int:
        return len(self.curves)


def _require_normalized(img: VectorImage) -> None:
    if not img.normalized:
        raise ContractError("image must be height-normalized before feature extraction")
    if not img.chunks:
        raise ContractError("image has no chunks")


def build_curve_features(img: VectorImage) -> list[np.ndarray]:
    """Per-chunk (n_c, 8) matrices of control points in authored ring order."""
    _require_normalized(img)
    out = []
    for chunk in img.chunks:
        m = np.empty((chunk.n_segments(), 8), dtype=np.float64)
        for k, seg in enumerate(chunk.segments):
            m[k] = (
                seg.p0.x, seg.p0.y, seg.p1.x, seg.p1.y,
                seg.p2.x, seg.p2.y, seg.p3.x, seg.p3.y,
            )
        out.append(m)
    return out


def chunk_box_features(img: VectorImage) -> np.ndarray:
    """(N, 5) rows: center, then width/height/area relative to the image maxima."""
    _require_normalized(img)
    n = img.n_chunks()
    raw = np.array([c.bbox for c in img.chunks], dtype=np.float64)  # cx, cy, w, h, a
    out = np.empty((n, 5), dtype=np.float64)
    out[:, 0] = raw[:, 0]
    out[:, 1] = raw[:, 1]
    for j in (2, 3, 4):
        vals = np.maximum(raw[:, j], BOX_EPS)
        out[:, j] = vals / vals.max()
    return out


def pairwise_box_features(img: VectorImage) -> np.ndarray:
    """(N, N, 5) entries: center offsets and log size ratios between chunks."""
    _require_normalized(img)
    raw = np.array([c.bbox for c in img.chunks], dtype=np.float64)
    cx, cy = raw[:, 0], raw[:, 1]
    out = np.empty((len(raw), len(raw), 5), dtype=np.float64)
    out[:, :, 0] = cx[:, None] - cx[None, :]
    out[:, :, 1] = cy[:, None] - cy[None, :]
    for k, j in enumerate((2, 3, 4)):
        logs = np.log(raw[:, j] + BOX_EPS)
        out[:, :, 2 + k] = logs[:, None] - logs[None, :]
    n = len(raw)
    out[np.arange(n), np.arange(n), :] = 0.0
    return out


def build_graph(img: VectorImage) -> TwoTierGraph:
    return TwoTierGraph(
        curves=build_curve_features(img),
        boxes=chunk_box_features(img),
        pairwise=pairwise_box_features(img),
        label=img.label,
        source_id=img.source_id,
    )


def graph_to_json(g: TwoTierGraph) -> str:
    """Debug dump used for test fixtures."""
    return json.dumps(
        {
            "curves": [m.tolist() for m in g.curves],
            "boxes": g.boxes.tolist(),
            "pairwise": g.pairwise.tolist(),
            "label": g.label,
            "source_id": g.source_id,
        }
    )


def graph_from_json(text: str) -> TwoTierGraph:
    doc = json.loads(text)
    return TwoTierGraph(
        curves=[np.array(m, dtype=np.float64) for m in doc["curves"]],
        boxes=np.array(doc["boxes"], dtype=np.float64),
        pairwise=np.array(doc["pairwise"], dtype=np.float64),
        label=doc["label"],
        source_id=doc["source_id"],
    )
