"""Shared test utilities: random graph factory, finite-difference gradient
checks, and a minimal training loop for fixtures."""
import numpy as np

from bignet.graphs import TwoTierGraph
from bignet.net import (
    AdamState,
    adam_step,
    backward,
    cross_entropy,
    forward,
    init_params,
)


def random_graph(rng, n_chunks=3, max_curves=6, num_classes=2):
    """Random but structurally valid graph: box features derived from fake
    raw bounding boxes so pairwise antisymmetry and diagonal zeros hold."""
    curves = [
        rng.uniform(0.0, 1.0, size=(int(rng.integers(1, max_curves + 1)), 8))
        for _ in range(n_chunks)
    ]
    raw = np.empty((n_chunks, 5))
    raw[:, 0] = rng.uniform(0.0, 0.5, n_chunks)
    raw[:, 1] = rng.uniform(0.0, 1.0, n_chunks)
    raw[:, 2] = rng.uniform(0.05, 0.5, n_chunks)
    raw[:, 3] = rng.uniform(0.05, 0.5, n_chunks)
    raw[:, 4] = raw[:, 2] * raw[:, 3]
    boxes = raw.copy()
    for j in (2, 3, 4):
        boxes[:, j] = raw[:, j] / raw[:, j].max()
    pw = np.zeros((n_chunks, n_chunks, 5))
    pw[:, :, 0] = raw[:, 0][:, None] - raw[:, 0][None, :]
    pw[:, :, 1] = raw[:, 1][:, None] - raw[:, 1][None, :]
    for k, j in enumerate((2, 3, 4)):
        logs = np.log(raw[:, j] + 1e-6)
        pw[:, :, 2 + k] = logs[:, None] - logs[None, :]
    return TwoTierGraph(
        curves=curves,
        boxes=boxes,
        pairwise=pw,
        label=int(rng.integers(0, num_classes)),
        source_id="synthetic",
    )


def fd_gradcheck(cfg, params, batch, step=1e-5, coords_per_tensor=None, rng=None):
    """Max relative error between analytic and central-difference gradients.

    coords_per_tensor=None checks every coordinate; an integer checks a
    random subset per tensor (for large graphs where the full sweep is slow).
    """
    def batch_loss():
        return float(
            np.mean([cross_entropy(forward(cfg, params, g), g.label) for g in batch])
        )

    _, grads = backward(cfg, params, batch)
    worst = 0.0
    for name in sorted(params.tensors):
        t = params.tensors[name]
        flat = t.reshape(-1)
        idxs = np.arange(flat.size)
        if coords_per_tensor is not None and flat.size > coords_per_tensor:
            idxs = rng.choice(flat.size, size=coords_per_tensor, replace=False)
        gflat = grads[name].reshape(-1)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + step
            lp = batch_loss()
            flat[i] = orig - step
            lm = batch_loss()
            flat[i] = orig
            fd = (lp - lm) / (2.0 * step)
            a = gflat[i]
            rel = abs(a - fd) / max(abs(a), abs(fd), 1e-6)
            worst = max(worst, rel)
    return worst


def quick_train(cfg, graphs, seed=0, iters=60, batch_size=20, lr=1e-3):
    """Tiny Adam loop over in-memory graphs; returns trained parameters."""
    params = init_params(cfg, seed)
    state = AdamState.init(params)
    order = np.arange(len(graphs))
    rng = np.random.default_rng(seed)
    i = 0
    for _ in range(iters):
        if i + batch_size > len(order):
            rng.shuffle(order)
            i = 0
        batch = [graphs[j] for j in order[i : i + batch_size]]
        i += batch_size
        _, grads = backward(cfg, params, batch)
        adam_step(params, grads, state, lr)
    return params
