"""Two-tier graph network: forward pass, exact reverse-mode gradients,
softmax cross-entropy, Adam, and binary checkpoint I/O.

Curve tier: each chunk's control-point rows diffuse over their ring (mean of
the two neighbors, optionally passed through a small dense layer), and the
concatenated diffusion states feed a per-curve MLP whose outputs are averaged
into a chunk embedding.  Chunk tier: embeddings exchange messages gated by
dense-transformed bounding-box features -- per-chunk features broadcast to
every chunk in the phone variant, pairwise features in the car variant.  The
concatenated chunk states are pooled and classified.

Everything is float64 and purely functional over immutable inputs, so results
are bit-reproducible.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckpointError, ContractError, NonFiniteLossError
from .graphs import TwoTierGraph

CURVE_DIM = 8
BOX_DIM = 5

CHECKPOINT_MAGIC = b"BIGN"
CHECKPOINT_VERSION = 1


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class ModelConfig:
    variant: str                      # "phone" | "car"
    num_classes: int = 2
    curve_depth: int = 3              # ring diffusion steps
    chunk_depth: int = 2              # chunk aggregation steps
    curve_mlp: tuple[int, ...] = (24, 12)
    chunk_mlp: tuple[int, ...] | None = None      # identity when None
    readout_mlp: tuple[int, ...] | None = None    # identity when None
    head_hidden: tuple[int, ...] = (18, 8)
    curve_mix: float = 1.0            # weight of the neighbor message
    has_neighbor_fc: bool = False     # dense 8->8 on the ring message
    leaky_slope: float = 0.01

    def __post_init__(self):
        if self.variant not in ("phone", "car"):
            raise ContractError(f"unknown variant {self.variant!r}")
        if self.num_classes < 2:
            raise ContractError("num_classes must be at least 2")
        if self.curve_depth < 1 or self.chunk_depth < 1:
            raise ContractError("depths must be at least 1")
        if not 0.0 <= self.curve_mix <= 1.0:
            raise ContractError("curve_mix must be in [0, 1]")
        if not self.curve_mlp:
            raise ContractError("curve_mlp needs at least one layer")

    @property
    def curve_in(self) -> int:
        return CURVE_DIM * (self.curve_depth + 1)

    @property
    def chunk_width(self) -> int:
        return self.chunk_mlp[-1] if self.chunk_mlp else self.curve_mlp[-1]

    @property
    def head_in(self) -> int:
        concat = self.chunk_width * (self.chunk_depth + 1)
        return self.readout_mlp[-1] if self.readout_mlp else concat

    def layer_specs(self) -> list[tuple[str, int, int]]:
        """(name, fan_in, fan_out) for every dense layer, in a fixed order."""
        specs: list[tuple[str, int, int]] = []
        prev = self.curve_in
        for i, w in enumerate(self.curve_mlp):
            specs.append((f"curve_mlp.{i}", prev, w))
            prev = w
        if self.chunk_mlp:
            prev = self.curve_mlp[-1]
            for i, w in enumerate(self.chunk_mlp):
                specs.append((f"chunk_mlp.{i}", prev, w))
                prev = w
        if self.has_neighbor_fc:
            specs.append(("neighbor_fc", CURVE_DIM, CURVE_DIM))
        specs.append(("gate", BOX_DIM, self.chunk_width))
        if self.readout_mlp:
            prev = self.chunk_width * (self.chunk_depth + 1)
            for i, w in enumerate(self.readout_mlp):
                specs.append((f"readout.{i}", prev, w))
                prev = w
        prev = self.head_in
        for i, w in enumerate((*self.head_hidden, self.num_classes)):
            specs.append((f"head.{i}", prev, w))
            prev = w
        return specs

    def to_json(self) -> str:
        doc = {
            "variant": self.variant,
            "num_classes": self.num_classes,
            "curve_depth": self.curve_depth,
            "chunk_depth": self.chunk_depth,
            "curve_mlp": list(self.curve_mlp),
            "chunk_mlp": list(self.chunk_mlp) if self.chunk_mlp else None,
            "readout_mlp": list(self.readout_mlp) if self.readout_mlp else None,
            "head_hidden": list(self.head_hidden),
            "curve_mix": self.curve_mix,
            "has_neighbor_fc": self.has_neighbor_fc,
            "leaky_slope": self.leaky_slope,
        }
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "ModelConfig":
        doc = json.loads(text)
        return ModelConfig(
            variant=doc["variant"],
            num_classes=int(doc["num_classes"]),
            curve_depth=int(doc["curve_depth"]),
            chunk_depth=int(doc["chunk_depth"]),
            curve_mlp=tuple(doc["curve_mlp"]),
            chunk_mlp=tuple(doc["chunk_mlp"]) if doc["chunk_mlp"] else None,
            readout_mlp=tuple(doc["readout_mlp"]) if doc["readout_mlp"] else None,
            head_hidden=tuple(doc["head_hidden"]),
            curve_mix=float(doc["curve_mix"]),
            has_neighbor_fc=bool(doc["has_neighbor_fc"]),
            leaky_slope=float(doc["leaky_slope"]),
        )


def phone_config(num_classes: int = 2) -> ModelConfig:
    return ModelConfig(
        variant="phone",
        num_classes=num_classes,
        curve_depth=3,
        chunk_depth=2,
        curve_mlp=(24, 12),
        chunk_mlp=None,
        readout_mlp=None,
        head_hidden=(18, 8),
        curve_mix=1.0,
        has_neighbor_fc=False,
    )


def car_config(num_classes: int = 6) -> ModelConfig:
    return ModelConfig(
        variant="car",
        num_classes=num_classes,
        curve_depth=2,
        chunk_depth=2,
        curve_mlp=(32, 24),
        chunk_mlp=(24, 24),
        readout_mlp=(24, 24, 24),
        head_hidden=(18, 12),
        curve_mix=0.5,
        has_neighbor_fc=True,
    )


# ---------------------------------------------------------------------------
# Parameters


@dataclass
class ModelParameters:
    tensors: dict[str, np.ndarray]

    def copy(self) -> "ModelParameters":
        return ModelParameters({k: v.copy() for k, v in self.tensors.items()})

    def allclose(self, other: "ModelParameters", tol: float = 0.0) -> bool:
        if self.tensors.keys() != other.tensors.keys():
            return False
        return all(
            np.allclose(self.tensors[k], other.tensors[k], rtol=0.0, atol=tol)
            for k in self.tensors
        )


def param_count(cfg: ModelConfig) -> int:
    return sum(fi * fo + fo for _, fi, fo in cfg.layer_specs())


def init_params(cfg: ModelConfig, seed: int) -> ModelParameters:
    """Fan-in uniform init in +-sqrt(1/fan_in), drawn in layer-spec order."""
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    for name, fi, fo in cfg.layer_specs():
        s = np.sqrt(1.0 / fi)
        tensors[f"{name}.w"] = rng.uniform(-s, s, size=(fi, fo))
        tensors[f"{name}.b"] = rng.uniform(-s, s, size=fo)
    return ModelParameters(tensors)


def _layers(cfg: ModelConfig, prefix: str) -> list[str]:
    return [name for name, _, _ in cfg.layer_specs() if name.split(".")[0] == prefix]


def validate_params(cfg: ModelConfig, params: ModelParameters) -> None:
    for name, fi, fo in cfg.layer_specs():
        w = params.tensors.get(f"{name}.w")
        b = params.tensors.get(f"{name}.b")
        if w is None or b is None:
            raise ContractError(f"missing parameter tensor {name}")
        if w.shape != (fi, fo) or b.shape != (fo,):
            raise ContractError(
                f"tensor {name} has shape {w.shape}/{b.shape}, expected ({fi},{fo})/({fo},)"
            )


# ---------------------------------------------------------------------------
# Forward


def _leaky(z: np.ndarray, slope: float) -> np.ndarray:
    return np.where(z >= 0.0, z, slope * z)


def _leaky_grad(z: np.ndarray, slope: float) -> np.ndarray:
    return np.where(z >= 0.0, 1.0, slope)


def _ring_mean(e: np.ndarray) -> np.ndarray:
    """Mean of the two ring neighbors per row; single rows are their own ring."""
    if len(e) == 1:
        return e.copy()
    return 0.5 * (np.roll(e, 1, axis=0) + np.roll(e, -1, axis=0))


def _mlp_forward(names, params, x, slope, last_linear=False):
    """Returns (output, [(input, preact), ...]) for each dense layer."""
    pres = []
    a = x
    for i, name in enumerate(names):
        z = a @ params.tensors[f"{name}.w"] + params.tensors[f"{name}.b"]
        pres.append((a, z))
        if last_linear and i == len(names) - 1:
            a = z
        else:
            a = _leaky(z, slope)
    return a, pres


def _mlp_backward(names, params, pres, grad_out, slope, grads, last_linear=False):
    g = grad_out
    for i in reversed(range(len(names))):
        a_in, z = pres[i]
        if not (last_linear and i == len(names) - 1):
            g = g * _leaky_grad(z, slope)
        grads[f"{names[i]}.w"] += a_in.T @ g
        grads[f"{names[i]}.b"] += g.sum(axis=0)
        g = g @ params.tensors[f"{names[i]}.w"].T
    return g


@dataclass
class ForwardTrace:
    curve_states: list[list[np.ndarray]]          # per chunk: e^0..e^D2
    neighbor_pres: list[list[tuple]]              # per chunk, per depth: (ring input, preact)
    curve_mlp_pres: list[list[tuple]]             # per chunk: dense traces
    chunk_embed: np.ndarray                       # (N, curve_mlp out), pooled per chunk
    chunk_mlp_pres: list | None
    chunk_state0: np.ndarray                      # (N, w) input to chunk aggregation
    gate_pre: np.ndarray                          # (N, w) or (N, N, w) before activation
    gate: np.ndarray
    messages: list[np.ndarray]                    # chunk states after each aggregation
    chunk_concat: np.ndarray                      # (N, w*(D1+1))
    readout_pres: list | None
    contribs: np.ndarray                          # (N, head_in): per-chunk contribution
    pooled: np.ndarray                            # (head_in,)
    head_pres: list
    logits: np.ndarray


def _validate_graph(cfg: ModelConfig, g: TwoTierGraph) -> None:
    n = g.n_chunks()
    if n < 1:
        raise ContractError("graph has no chunks")
    for i, m in enumerate(g.curves):
        if m.ndim != 2 or m.shape[1] != CURVE_DIM or m.shape[0] < 1:
            raise ContractError(f"curves[{i}] has shape {m.shape}, expected (n, {CURVE_DIM})")
    if g.boxes.shape != (n, BOX_DIM):
        raise ContractError(f"boxes tensor has shape {g.boxes.shape}, expected ({n}, {BOX_DIM})")
    if g.pairwise.shape != (n, n, BOX_DIM):
        raise ContractError(
            f"pairwise tensor has shape {g.pairwise.shape}, expected ({n}, {n}, {BOX_DIM})"
        )


def forward(
    cfg: ModelConfig,
    params: ModelParameters,
    g: TwoTierGraph,
    keep_trace: bool = False,
):
    """Logits for one graph; optionally the full trace for training/attribution."""
    _validate_graph(cfg, g)
    validate_params(cfg, params)
    slope = cfg.leaky_slope
    mix = cfg.curve_mix
    n = g.n_chunks()
    curve_names = _layers(cfg, "curve_mlp")
    chunk_names = _layers(cfg, "chunk_mlp")
    readout_names = _layers(cfg, "readout")
    head_names = _layers(cfg, "head")

    curve_states: list[list[np.ndarray]] = []
    neighbor_pres: list[list[tuple]] = []
    curve_mlp_pres: list[list[tuple]] = []
    chunk_embed = np.empty((n, cfg.curve_mlp[-1]))
    for c, x in enumerate(g.curves):
        es = [x]
        pres_l2: list[tuple] = []
        e = x
        for _ in range(cfg.curve_depth):
            m = _ring_mean(e)
            if cfg.has_neighbor_fc:
                z = m @ params.tensors["neighbor_fc.w"] + params.tensors["neighbor_fc.b"]
                pres_l2.append((m, z))
                m = _leaky(z, slope)
            e = (1.0 - mix) * e + mix * m
            es.append(e)
        h = np.concatenate(es, axis=1)
        u, pres4 = _mlp_forward(curve_names, params, h, slope)
        chunk_embed[c] = u.mean(axis=0)
        curve_states.append(es)
        neighbor_pres.append(pres_l2)
        curve_mlp_pres.append(pres4)

    if chunk_names:
        chunk_state0, chunk_pres = _mlp_forward(chunk_names, params, chunk_embed, slope)
    else:
        chunk_state0, chunk_pres = chunk_embed, None

    if cfg.variant == "phone":
        gate_pre = g.boxes @ params.tensors["gate.w"] + params.tensors["gate.b"]
    else:
        gate_pre = g.pairwise @ params.tensors["gate.w"] + params.tensors["gate.b"]
    gate = _leaky(gate_pre, slope)

    messages = [chunk_state0]
    e_chunk = chunk_state0
    for _ in range(cfg.chunk_depth):
        if cfg.variant == "phone":
            msg = (gate * e_chunk).mean(axis=0)
            e_chunk = np.tile(msg, (n, 1))
        else:
            e_chunk = np.einsum("ijk,jk->ik", gate, e_chunk) / n
        messages.append(e_chunk)
    chunk_concat = np.concatenate(messages, axis=1)

    if readout_names:
        contribs, readout_pres = _mlp_forward(readout_names, params, chunk_concat, slope)
    else:
        contribs, readout_pres = chunk_concat, None
    pooled = contribs.mean(axis=0)
    out, head_pres = _mlp_forward(head_names, params, pooled[None, :], slope, last_linear=True)
    logits = out[0]

    if not keep_trace:
        return logits
    trace = ForwardTrace(
        curve_states=curve_states,
        neighbor_pres=neighbor_pres,
        curve_mlp_pres=curve_mlp_pres,
        chunk_embed=chunk_embed,
        chunk_mlp_pres=chunk_pres,
        chunk_state0=chunk_state0,
        gate_pre=gate_pre,
        gate=gate,
        messages=messages,
        chunk_concat=chunk_concat,
        readout_pres=readout_pres,
        contribs=contribs,
        pooled=pooled,
        head_pres=head_pres,
        logits=logits,
    )
    return logits, trace


# ---------------------------------------------------------------------------
# Loss


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def cross_entropy(logits: np.ndarray, label: int) -> float:
    """Stable softmax cross-entropy; a 2-class head realizes the binary case."""
    if not 0 <= label < len(logits):
        raise ContractError(f"label {label} out of range for {len(logits)} classes")
    m = logits.max()
    lse = m + np.log(np.exp(logits - m).sum())
    return float(lse - logits[label])


def cross_entropy_grad(logits: np.ndarray, label: int) -> np.ndarray:
    d = softmax(logits)
    d[label] -= 1.0
    return d


# ---------------------------------------------------------------------------
# Backward


def _zero_grads(cfg: ModelConfig) -> dict[str, np.ndarray]:
    grads: dict[str, np.ndarray] = {}
    for name, fi, fo in cfg.layer_specs():
        grads[f"{name}.w"] = np.zeros((fi, fo))
        grads[f"{name}.b"] = np.zeros(fo)
    return grads


def backward_sample(
    cfg: ModelConfig,
    params: ModelParameters,
    g: TwoTierGraph,
    trace: ForwardTrace,
    dlogits: np.ndarray,
    grads: dict[str, np.ndarray],
) -> None:
    """Accumulate dLoss/dParams for one sample into `grads` (exact, float64)."""
    slope = cfg.leaky_slope
    mix = cfg.curve_mix
    n = g.n_chunks()
    w = cfg.chunk_width
    curve_names = _layers(cfg, "curve_mlp")
    chunk_names = _layers(cfg, "chunk_mlp")
    readout_names = _layers(cfg, "readout")
    head_names = _layers(cfg, "head")

    g_pooled = _mlp_backward(
        head_names, params, trace.head_pres, dlogits[None, :], slope, grads, last_linear=True
    )[0]
    g_contribs = np.tile(g_pooled / n, (n, 1))
    if readout_names:
        g_concat = _mlp_backward(
            readout_names, params, trace.readout_pres, g_contribs, slope, grads
        )
    else:
        g_concat = g_contribs

    blocks = [g_concat[:, d * w : (d + 1) * w].copy() for d in range(cfg.chunk_depth + 1)]
    g_gate = np.zeros_like(trace.gate)
    g_e = blocks[cfg.chunk_depth]
    for d in range(cfg.chunk_depth, 0, -1):
        prev = trace.messages[d - 1]
        if cfg.variant == "phone":
            s = g_e.sum(axis=0) / n
            g_gate += prev * s[None, :]
            g_prev = trace.gate * s[None, :]
        else:
            g_gate += np.einsum("ik,jk->ijk", g_e, prev) / n
            g_prev = np.einsum("ijk,ik->jk", trace.gate, g_e) / n
        g_e = blocks[d - 1] + g_prev
    g_state0 = g_e

    g_gate_pre = g_gate * _leaky_grad(trace.gate_pre, slope)
    if cfg.variant == "phone":
        grads["gate.w"] += g.boxes.T @ g_gate_pre
        grads["gate.b"] += g_gate_pre.sum(axis=0)
    else:
        grads["gate.w"] += np.einsum("ijp,ijq->pq", g.pairwise, g_gate_pre)
        grads["gate.b"] += g_gate_pre.sum(axis=(0, 1))

    if chunk_names:
        g_embed = _mlp_backward(
            chunk_names, params, trace.chunk_mlp_pres, g_state0, slope, grads
        )
    else:
        g_embed = g_state0

    for c, x in enumerate(g.curves):
        nc = len(x)
        g_u = np.tile(g_embed[c] / nc, (nc, 1))
        g_h = _mlp_backward(curve_names, params, trace.curve_mlp_pres[c], g_u, slope, grads)
        eblocks = [
            g_h[:, d * CURVE_DIM : (d + 1) * CURVE_DIM].copy()
            for d in range(cfg.curve_depth + 1)
        ]
        g_ec = eblocks[cfg.curve_depth]
        for d in range(cfg.curve_depth, 0, -1):
            if cfg.has_neighbor_fc:
                m_in, z = trace.neighbor_pres[c][d - 1]
                g_pre = (mix * g_ec) * _leaky_grad(z, slope)
                grads["neighbor_fc.w"] += m_in.T @ g_pre
                grads["neighbor_fc.b"] += g_pre.sum(axis=0)
                g_ring = g_pre @ params.tensors["neighbor_fc.w"].T
            else:
                g_ring = mix * g_ec
            g_ec = eblocks[d - 1] + (1.0 - mix) * g_ec + _ring_mean(g_ring)


def backward(cfg: ModelConfig, params: ModelParameters, batch: list[TwoTierGraph]):
    """(mean loss, mean gradients) over a batch; labels must be set."""
    if not batch:
        raise ContractError("empty batch")
    grads = _zero_grads(cfg)
    total = 0.0
    for g in batch:
        if g.label is None:
            raise ContractError(f"sample {g.source_id!r} has no label")
        logits, trace = forward(cfg, params, g, keep_trace=True)
        loss = cross_entropy(logits, g.label)
        if not np.isfinite(loss):
            raise NonFiniteLossError("non-finite loss", g.source_id or "<unnamed>")
        total += loss
        backward_sample(cfg, params, g, trace, cross_entropy_grad(logits, g.label), grads)
    b = float(len(batch))
    for k in grads:
        grads[k] /= b
    return total / b, grads


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @staticmethod
    def init(params: ModelParameters) -> "AdamState":
        return AdamState(
            m={k: np.zeros_like(t) for k, t in params.tensors.items()},
            v={k: np.zeros_like(t) for k, t in params.tensors.items()},
        )


def adam_step(
    params: ModelParameters,
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
):
    """One in-place Adam update with bias correction."""
    state.step += 1
    t = state.step
    for k in sorted(params.tensors):
        gk = grads[k]
        state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * gk
        state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * gk * gk
        m_hat = state.m[k] / (1.0 - beta1**t)
        v_hat = state.v[k] / (1.0 - beta2**t)
        params.tensors[k] -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return params, state


# ---------------------------------------------------------------------------
# Checkpoints

# Layout: magic, u32 version, u32 config length, config JSON, then for each
# tensor in sorted name order: u16 name length, name, u8 rank, u32 dims,
# float64 little-endian payload.


def save_checkpoint(params: ModelParameters, cfg: ModelConfig, path) -> None:
    cfg_bytes = cfg.to_json().encode("utf-8")
    out = bytearray()
    out += CHECKPOINT_MAGIC
    out += struct.pack("<I", CHECKPOINT_VERSION)
    out += struct.pack("<I", len(cfg_bytes))
    out += cfg_bytes
    for name in sorted(params.tensors):
        t = np.ascontiguousarray(params.tensors[name], dtype="<f8")
        nb = name.encode("utf-8")
        out += struct.pack("<H", len(nb))
        out += nb
        out += struct.pack("<B", t.ndim)
        for d in t.shape:
            out += struct.pack("<I", d)
        out += t.tobytes()
    with open(path, "wb") as f:
        f.write(bytes(out))


def load_checkpoint(path) -> tuple[ModelConfig, ModelParameters]:
    with open(path, "rb") as f:
        data = f.read()
    view = memoryview(data)
    pos = 0

    def take(n: int, what: str) -> memoryview:
        nonlocal pos
        if pos + n > len(view):
            raise CheckpointError(f"truncated checkpoint while reading {what}")
        chunk = view[pos : pos + n]
        pos += n
        return chunk

    if bytes(take(4, "magic")) != CHECKPOINT_MAGIC:
        raise CheckpointError("bad magic bytes")
    (version,) = struct.unpack("<I", take(4, "version"))
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (cfg_len,) = struct.unpack("<I", take(4, "config length"))
    try:
        cfg = ModelConfig.from_json(bytes(take(cfg_len, "config")).decode("utf-8"))
    except (ValueError, KeyError, ContractError) as e:
        raise CheckpointError(f"invalid embedded config: {e}") from e
    tensors: dict[str, np.ndarray] = {}
    while pos < len(view):
        (name_len,) = struct.unpack("<H", take(2, "tensor name length"))
        name = bytes(take(name_len, "tensor name")).decode("utf-8")
        (rank,) = struct.unpack("<B", take(1, "tensor rank"))
        dims = tuple(
            struct.unpack("<I", take(4, f"dim {i} of {name}"))[0] for i in range(rank)
        )
        count = int(np.prod(dims)) if dims else 1
        payload = take(8 * count, f"data of {name}")
        tensors[name] = np.frombuffer(payload, dtype="<f8").reshape(dims).copy()
    params = ModelParameters(tensors)
    try:
        validate_params(cfg, params)
    except ContractError as e:
        raise CheckpointError(f"checkpoint tensors do not match config: {e}") from e
    return cfg, params
