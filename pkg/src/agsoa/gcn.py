"""Two-layer GCN / SGC in plain numpy with hand-written backpropagation.

Both models share one computation::

    P1 = S @ X @ W1,  R = relu(P1) (GCN) or P1 (SGC),  P2 = S @ R @ W2,
    Z  = softmax(P2)

with ``S = D^-1/2 (A + I) D^-1/2``.  The backward pass returns gradients for
the weights and, through ``S``, for the adjacency matrix, including the
dependence of the degree normalization on ``A``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .graph import Graph, normalized_adjacency

log = logging.getLogger(__name__)

GCN = "GCN"
SGC = "SGC"
MODEL_KINDS = (GCN, SGC)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class GcnModel:
    W1: np.ndarray
    W2: np.ndarray
    kind: str = GCN
    trained: bool = False
    seed: int | None = None
    metrics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.W1.ndim != 2 or self.W2.ndim != 2 or self.W1.shape[1] != self.W2.shape[0]:
            raise ValueError(f"inconsistent weight shapes {self.W1.shape} / {self.W2.shape}")
        if self.W1.shape[1] < 1:
            raise ValueError("hidden size must be positive")

    @property
    def hidden(self) -> int:
        return self.W1.shape[1]

    @property
    def n_features(self) -> int:
        return self.W1.shape[0]

    @property
    def n_classes(self) -> int:
        return self.W2.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 200
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    weight_decay: float = 5e-4
    restore_best: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_model(n_features: int, n_classes: int, hidden: int = 64, kind: str = GCN,
               seed: int = 0) -> GcnModel:
    """Seeded Glorot-uniform initialization."""
    rng = np.random.default_rng(seed)
    return GcnModel(W1=glorot(rng, n_features, hidden), W2=glorot(rng, hidden, n_classes),
                    kind=kind, seed=seed)


def _check_dims(model: GcnModel, features: np.ndarray):
    if features.shape[1] != model.n_features:
        raise ValueError(
            f"model expects {model.n_features} features, graph has {features.shape[1]}"
        )


class _Pass:
    """Forward activations cached for the backward pass."""

    def __init__(self, model: GcnModel, adjacency, features: np.ndarray, S=None):
        _check_dims(model, features)
        self.adjacency = None if adjacency is None else np.asarray(adjacency, dtype=np.float64)
        self.S = normalized_adjacency(self.adjacency) if S is None else S
        self.XW = features @ model.W1
        self.P1 = self.S @ self.XW
        self.R = np.maximum(self.P1, 0.0) if model.kind == GCN else self.P1
        self.RW = self.R @ model.W2
        logits = self.S @ self.RW
        self.log_Z = logits - logsumexp(logits, axis=1, keepdims=True)
        self.Z = np.exp(self.log_Z)


def _node_array(node_set, n: int) -> np.ndarray:
    nodes = np.atleast_1d(np.asarray(node_set, dtype=np.int64))
    if nodes.size == 0:
        raise ValueError("node set must be nonempty")
    if nodes.min() < 0 or nodes.max() >= n:
        raise IndexError("node index out of range")
    return nodes


def _output_grad(Z: np.ndarray, nodes: np.ndarray, targets: np.ndarray, scale: float = 1.0):
    """d(-sum log Z[i, y_i]) / d logits, restricted to ``nodes``."""
    dP2 = np.zeros_like(Z)
    np.add.at(dP2, nodes, Z[nodes])
    np.add.at(dP2, (nodes, targets), -1.0)
    return dP2 * scale


def _backward(model: GcnModel, fp: _Pass, dP2: np.ndarray, want_adjacency: bool):
    dRW = fp.S @ dP2
    dW2 = fp.R.T @ dRW
    dR = dRW @ model.W2.T
    dP1 = dR * (fp.P1 > 0) if model.kind == GCN else dR
    dXW = fp.S @ dP1
    if not want_adjacency:
        return dXW, dW2, None
    # gradient w.r.t. the normalized matrix S
    dS = dP2 @ fp.RW.T + dP1 @ fp.XW.T
    a_hat = fp.adjacency + np.eye(fp.adjacency.shape[0])
    deg = a_hat.sum(axis=1)
    q = 1.0 / np.sqrt(deg)
    GA = dS * a_hat
    dq = GA @ q + GA.T @ q
    ddeg = -0.5 * deg ** -1.5 * dq
    dA = dS * np.outer(q, q) + ddeg[:, None]
    return dXW, dW2, dA


def forward(model: GcnModel, g: Graph) -> np.ndarray:
    """Class-probability matrix ``[n, c]``."""
    return _Pass(model, g.adjacency, g.features).Z


def forward_adjacency(model: GcnModel, adjacency: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Like :func:`forward` for a raw (possibly weighted) adjacency array."""
    return _Pass(model, adjacency, features).Z


def predict_labels(model: GcnModel, g: Graph) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. the lowest class id on ties
    return np.argmax(forward(model, g), axis=1)


def loss(model: GcnModel, g: Graph, node_set, labels=None) -> float:
    """Summed cross-entropy ``-sum_i log Z[i, y_i]`` over ``node_set``."""
    nodes = _node_array(node_set, g.n)
    targets = g.labels[nodes] if labels is None else np.asarray(labels)[nodes]
    log_Z = _Pass(model, g.adjacency, g.features).log_Z
    return float(-log_Z[nodes, targets].sum())


def loss_grad_adjacency(model: GcnModel, g: Graph, node_set, labels=None) -> np.ndarray:
    """Derivative of :func:`loss` with respect to each undirected edge weight.

    Entry ``[i, j]`` is ``dL/dA_ij + dL/dA_ji``, the derivative for a joint
    symmetric change of the pair; the matrix is symmetric with zero diagonal.
    """
    return adjacency_gradient(model, g.adjacency, g.features, node_set,
                              g.labels if labels is None else labels)


def adjacency_gradient(model: GcnModel, adjacency: np.ndarray, features: np.ndarray,
                       node_set, labels) -> np.ndarray:
    """:func:`loss_grad_adjacency` on raw arrays; ``adjacency`` may be continuous."""
    fp = _Pass(model, adjacency, features)
    nodes = _node_array(node_set, fp.S.shape[0])
    dP2 = _output_grad(fp.Z, nodes, np.asarray(labels)[nodes])
    _, _, dA = _backward(model, fp, dP2, want_adjacency=True)
    B = dA + dA.T
    np.fill_diagonal(B, 0.0)
    return B


def loss_grad_weights(model: GcnModel, g: Graph, node_set, labels=None):
    """Gradients of :func:`loss` w.r.t. ``(W1, W2)``."""
    fp = _Pass(model, g.adjacency, g.features)
    nodes = _node_array(node_set, g.n)
    targets = (g.labels if labels is None else np.asarray(labels))[nodes]
    dXW, dW2, _ = _backward(model, fp, _output_grad(fp.Z, nodes, targets), want_adjacency=False)
    return g.features.T @ dXW, dW2


def accuracy(model: GcnModel, g: Graph, mask) -> float:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return float("nan")
    return float((predict_labels(model, g)[mask] == g.labels[mask]).mean())


def train(model: GcnModel, g: Graph, cfg: TrainConfig = TrainConfig()) -> GcnModel:
    """Full-batch Adam on the mean training cross-entropy.

    The weights with the best validation accuracy (ties: latest epoch with the
    lowest validation loss) are restored at the end when ``cfg.restore_best``
    is set and a validation mask exists.  Returns a new, trained model.
    """
    train_nodes = np.flatnonzero(g.train_mask)
    if train_nodes.size == 0:
        raise ValueError("graph has an empty train mask")
    _check_dims(model, g.features)
    val_nodes = np.flatnonzero(g.val_mask)
    targets = g.labels[train_nodes]

    params = [np.array(model.W1), np.array(model.W2)]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2, eps, lr, wd = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon, cfg.learning_rate, cfg.weight_decay
    X = g.features
    S = normalized_adjacency(g.adjacency)
    best = None

    for epoch in range(1, cfg.epochs + 1):
        cur = replace(model, W1=params[0], W2=params[1])
        fp = _Pass(cur, None, X, S=S)
        ce = -fp.log_Z[train_nodes, targets].mean()
        if not np.isfinite(ce):
            raise TrainingError(f"non-finite training loss at epoch {epoch}")

        if val_nodes.size and cfg.restore_best:
            pred = fp.Z.argmax(axis=1)
            val_acc = float((pred[val_nodes] == g.labels[val_nodes]).mean())
            val_loss = float(-fp.log_Z[val_nodes, g.labels[val_nodes]].mean())
            key = (val_acc, -val_loss)
            if best is None or key >= best[0]:
                best = (key, epoch, params[0].copy(), params[1].copy())

        dP2 = _output_grad(fp.Z, train_nodes, targets, scale=1.0 / train_nodes.size)
        dXW, dW2, _ = _backward(cur, fp, dP2, want_adjacency=False)
        grads = [X.T @ dXW + wd * params[0], dW2 + wd * params[1]]
        for k in range(2):
            m[k] = b1 * m[k] + (1 - b1) * grads[k]
            v[k] = b2 * v[k] + (1 - b2) * grads[k] ** 2
            m_hat = m[k] / (1 - b1 ** epoch)
            v_hat = v[k] / (1 - b2 ** epoch)
            params[k] = params[k] - lr * m_hat / (np.sqrt(v_hat) + eps)

    if best is not None:
        W1, W2, best_epoch = best[2], best[3], best[1]
    else:
        W1, W2, best_epoch = params[0], params[1], cfg.epochs
    out = replace(model, W1=W1, W2=W2, trained=True, seed=cfg.seed if model.seed is None else model.seed)
    metrics = {
        "best_epoch": best_epoch,
        "train_acc": accuracy(out, g, g.train_mask),
        "val_acc": accuracy(out, g, g.val_mask),
        "test_acc": accuracy(out, g, g.test_mask),
    }
    log.info("trained %s: %s", model.kind, metrics)
    return replace(out, metrics=metrics)


def fit(g: Graph, kind: str = GCN, hidden: int = 64, cfg: TrainConfig = TrainConfig()) -> GcnModel:
    """Initialize with ``cfg.seed`` and train."""
    model = init_model(g.d, g.c, hidden=hidden, kind=kind, seed=cfg.seed)
    return train(model, g, cfg)


# ---------------------------------------------------------------------------
# Checkpoints: an uncompressed .npz holding W1, W2, kind, hidden, seed.
# ---------------------------------------------------------------------------

def save_checkpoint(model: GcnModel, path) -> None:
    import io
    import zipfile

    arrays = {
        "W1": model.W1,
        "W2": model.W2,
        "kind": np.array(model.kind),
        "hidden": np.array(model.hidden),
        "seed": np.array(-1 if model.seed is None else model.seed),
    }
    # fixed timestamps keep the file byte-stable across runs
    with zipfile.ZipFile(Path(path), "w", zipfile.ZIP_STORED) as zf:
        for name, arr in arrays.items():
            buf = io.BytesIO()
            np.save(buf, np.asarray(arr), allow_pickle=False)
            info = zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def load_checkpoint(path) -> GcnModel:
    with np.load(Path(path), allow_pickle=False) as data:
        seed = int(data["seed"])
        return GcnModel(W1=data["W1"], W2=data["W2"], kind=str(data["kind"]),
                        trained=True, seed=None if seed < 0 else seed)
