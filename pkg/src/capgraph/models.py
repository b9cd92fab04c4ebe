"""Two-layer GraphSAGE and GCN classifiers with exact hand-rolled gradients.

Row-vector convention throughout: features are (p, d) matrices, weights
multiply on the right. The GraphSAGE head concatenates a node's layer-2
embedding with the unnormalized sum of its neighbors' layer-2 embeddings
(the adjacency-column product), passes it through an optional ReLU, and
squashes with a sigmoid. Training minimizes a class-weighted binary
cross-entropy with bias-corrected Adam.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DataError
from .graph import Graph, SplitAssignment
from .metrics import auc_pr, auc_roc
from .seng import AugmentedGraph

PROB_CLAMP = 1e-7

_CHECKPOINT_MAGIC = b"CGCK"
_KIND_BYTES = {"graphsage": 0, "gcn": 1}
_KIND_NAMES = {v: k for k, v in _KIND_BYTES.items()}


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class ModelParameters:
    """Weight matrices for a node classifier or link-prediction encoder.

    w3 is the classification head; link-prediction encoders carry w3=None and
    score pairs with an inner-product decoder.
    """

    kind: str
    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray | None
    head_relu: bool = False
    head_mean: bool = False

    @property
    def d_hidden(self) -> int:
        return self.w1.shape[1]

    @property
    def input_dim(self) -> int:
        cols = self.w1.shape[0]
        return cols // 2 if self.kind == "graphsage" else cols

    def weights(self) -> list[np.ndarray]:
        return [self.w1, self.w2] + ([self.w3] if self.w3 is not None else [])

    def copy(self) -> "ModelParameters":
        return replace(
            self,
            w1=self.w1.copy(),
            w2=self.w2.copy(),
            w3=None if self.w3 is None else self.w3.copy(),
        )


def _glorot(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))


def init_parameters(
    kind: str,
    input_dim: int,
    d_hidden: int,
    rng: np.random.Generator,
    with_head: bool = True,
    head_relu: bool = False,
    head_mean: bool = False,
) -> ModelParameters:
    if kind == "graphsage":
        w1 = _glorot(rng, 2 * input_dim, d_hidden)
        w2 = _glorot(rng, 2 * d_hidden, d_hidden)
        w3 = _glorot(rng, 2 * d_hidden, 1) if with_head else None
    elif kind == "gcn":
        w1 = _glorot(rng, input_dim, d_hidden)
        w2 = _glorot(rng, d_hidden, d_hidden)
        w3 = _glorot(rng, d_hidden, 1) if with_head else None
    else:
        raise DataError(f"unknown model kind {kind!r}")
    return ModelParameters(kind, w1, w2, w3, head_relu=head_relu, head_mean=head_mean)


# ---------------------------------------------------------------------------
# Aggregation operators.
# ---------------------------------------------------------------------------


def mean_aggregation_matrix(
    adjacency: np.ndarray,
    fanout: int | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Row-normalized (optionally fanout-sampled) adjacency; zero rows for
    isolated nodes."""
    a = np.asarray(adjacency, dtype=np.float64)
    if fanout is not None:
        if rng is None:
            raise DataError("fanout sampling requires a random generator")
        sampled = np.zeros_like(a)
        for j in range(a.shape[0]):
            neighbors = np.flatnonzero(a[j])
            if neighbors.size > fanout:
                neighbors = rng.choice(neighbors, size=fanout, replace=False)
            sampled[j, neighbors] = 1.0
        a = sampled
    degrees = a.sum(axis=1)
    scale = np.divide(1.0, degrees, out=np.zeros_like(degrees), where=degrees > 0)
    return a * scale[:, None]


def neighborhood_mean(
    features: np.ndarray,
    adjacency: np.ndarray,
    node: int,
    fanout: int | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Mean of (optionally sampled) neighbor feature rows; zeros when isolated."""
    neighbors = np.flatnonzero(np.asarray(adjacency)[node])
    if neighbors.size == 0:
        return np.zeros(np.asarray(features).shape[1], dtype=np.float64)
    if fanout is not None and neighbors.size > fanout:
        if rng is None:
            raise DataError("fanout sampling requires a random generator")
        neighbors = rng.choice(neighbors, size=fanout, replace=False)
    return np.asarray(features, dtype=np.float64)[neighbors].mean(axis=0)


def gcn_propagation_matrix(adjacency: np.ndarray) -> np.ndarray:
    """Symmetric normalization D^{-1/2} (A + I) D^{-1/2}."""
    a_hat = np.asarray(adjacency, dtype=np.float64) + np.eye(adjacency.shape[0])
    inv_sqrt = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return a_hat * inv_sqrt[:, None] * inv_sqrt[None, :]


# ---------------------------------------------------------------------------
# Forward passes.  Caches hold every intermediate the backward pass needs.
# ---------------------------------------------------------------------------


@dataclass
class SageCache:
    x: np.ndarray
    adjacency: np.ndarray
    agg: np.ndarray  # row-normalized mean aggregator
    head_agg: np.ndarray  # neighbor operator used by the head term
    c1: np.ndarray
    z1: np.ndarray
    h1: np.ndarray
    c2: np.ndarray
    z2: np.ndarray
    h2: np.ndarray
    c3: np.ndarray | None
    z3: np.ndarray | None
    p: np.ndarray | None


def sage_encode(
    features: np.ndarray,
    adjacency: np.ndarray,
    params: ModelParameters,
    agg: np.ndarray | None = None,
) -> SageCache:
    x = np.asarray(features, dtype=np.float64)
    a = np.asarray(adjacency, dtype=np.float64)
    m = mean_aggregation_matrix(a) if agg is None else agg
    c1 = np.hstack([x, m @ x])
    z1 = c1 @ params.w1
    h1 = np.maximum(z1, 0.0)
    c2 = np.hstack([h1, m @ h1])
    z2 = c2 @ params.w2
    h2 = np.maximum(z2, 0.0)
    head_agg = m if params.head_mean else a
    return SageCache(x, a, m, head_agg, c1, z1, h1, c2, z2, h2, None, None, None)


def sage_forward(
    features: np.ndarray,
    adjacency: np.ndarray,
    params: ModelParameters,
    agg: np.ndarray | None = None,
) -> SageCache:
    """Full node-classification pass; cache carries (h1, h2, p)."""
    if params.w3 is None:
        raise DataError("model has no classification head")
    cache = sage_encode(features, adjacency, params, agg)
    cache.c3 = np.hstack([cache.h2, cache.head_agg @ cache.h2])
    cache.z3 = cache.c3 @ params.w3
    t = np.maximum(cache.z3, 0.0) if params.head_relu else cache.z3
    cache.p = _sigmoid(t)[:, 0]
    return cache


@dataclass
class GcnCache:
    x: np.ndarray
    s: np.ndarray
    sx: np.ndarray
    z1: np.ndarray
    h1: np.ndarray
    sh1: np.ndarray
    z2: np.ndarray
    h2: np.ndarray
    z3: np.ndarray | None
    p: np.ndarray | None


def gcn_encode(
    features: np.ndarray,
    adjacency: np.ndarray,
    params: ModelParameters,
    prop: np.ndarray | None = None,
) -> GcnCache:
    x = np.asarray(features, dtype=np.float64)
    s = gcn_propagation_matrix(np.asarray(adjacency)) if prop is None else prop
    sx = s @ x
    z1 = sx @ params.w1
    h1 = np.maximum(z1, 0.0)
    sh1 = s @ h1
    z2 = sh1 @ params.w2
    h2 = np.maximum(z2, 0.0)
    return GcnCache(x, s, sx, z1, h1, sh1, z2, h2, None, None)


def gcn_forward(
    features: np.ndarray,
    adjacency: np.ndarray,
    params: ModelParameters,
    prop: np.ndarray | None = None,
) -> GcnCache:
    """Two symmetric-normalized propagation layers, then linear + sigmoid head."""
    if params.w3 is None:
        raise DataError("model has no classification head")
    cache = gcn_encode(features, adjacency, params, prop)
    cache.z3 = cache.h2 @ params.w3
    cache.p = _sigmoid(cache.z3)[:, 0]
    return cache


def forward(
    features: np.ndarray, adjacency: np.ndarray, params: ModelParameters
) -> tuple[np.ndarray, SageCache | GcnCache]:
    """Kind-dispatched node-classification forward; returns (P, cache)."""
    cache = (
        sage_forward(features, adjacency, params)
        if params.kind == "graphsage"
        else gcn_forward(features, adjacency, params)
    )
    assert cache.p is not None
    return cache.p, cache


def predict_labels(p: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Binary labels: 1 iff probability strictly exceeds the threshold."""
    return (np.asarray(p) > threshold).astype(np.int64)


# ---------------------------------------------------------------------------
# Loss and backward passes.
# ---------------------------------------------------------------------------


def weighted_bce_loss(
    p: np.ndarray,
    y: np.ndarray,
    mask: np.ndarray,
    class_weights: tuple[float, float] = (1.0, 1.0),
) -> float:
    """Class-weighted binary cross-entropy over the masked nodes, with
    probabilities clamped to [1e-7, 1-1e-7]."""
    mask = np.asarray(mask)
    if mask.size == 0:
        raise DataError("empty loss mask")
    pj = np.clip(np.asarray(p, dtype=np.float64)[mask], PROB_CLAMP, 1.0 - PROB_CLAMP)
    yj = np.asarray(y, dtype=np.float64)[mask]
    w = np.where(yj == 1.0, class_weights[1], class_weights[0])
    terms = w * (yj * np.log(pj) + (1.0 - yj) * np.log(1.0 - pj))
    return float(-terms.mean())


def bce_logit_gradient(
    p: np.ndarray,
    y: np.ndarray,
    mask: np.ndarray,
    class_weights: tuple[float, float] = (1.0, 1.0),
) -> np.ndarray:
    """dLoss/d(pre-sigmoid) as a full-length vector, zero off-mask.

    Logits form w*(P-y)/|mask|: the sigmoid derivative cancels against the
    log derivative, which stays exact and finite even where P saturates to
    0 or 1 in float (where the clamped loss itself is locally flat)."""
    p = np.asarray(p, dtype=np.float64)
    grad = np.zeros_like(p)
    mask = np.asarray(mask)
    yj = np.asarray(y, dtype=np.float64)[mask]
    w = np.where(yj == 1.0, class_weights[1], class_weights[0])
    grad[mask] = w * (p[mask] - yj) / mask.size
    return grad


def sage_encoder_backward(
    cache: SageCache, params: ModelParameters, d_h2: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    dz2 = d_h2 * (cache.z2 > 0)
    gw2 = cache.c2.T @ dz2
    dc2 = dz2 @ params.w2.T
    dh = params.d_hidden
    dh1 = dc2[:, :dh] + cache.agg.T @ dc2[:, dh:]
    dz1 = dh1 * (cache.z1 > 0)
    gw1 = cache.c1.T @ dz1
    return gw1, gw2


def sage_backward(
    cache: SageCache, params: ModelParameters, dt: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact gradients of the loss w.r.t. (w1, w2, w3) given dLoss/d(pre-sigmoid)."""
    assert cache.z3 is not None and cache.c3 is not None and params.w3 is not None
    dt = np.asarray(dt, dtype=np.float64)[:, None]
    dz3 = dt * (cache.z3 > 0) if params.head_relu else dt
    gw3 = cache.c3.T @ dz3
    dc3 = dz3 @ params.w3.T
    dh = params.d_hidden
    d_h2 = dc3[:, :dh] + cache.head_agg.T @ dc3[:, dh:]
    gw1, gw2 = sage_encoder_backward(cache, params, d_h2)
    return gw1, gw2, gw3


def gcn_encoder_backward(
    cache: GcnCache, params: ModelParameters, d_h2: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    dz2 = d_h2 * (cache.z2 > 0)
    gw2 = cache.sh1.T @ dz2
    dh1 = cache.s.T @ (dz2 @ params.w2.T)
    dz1 = dh1 * (cache.z1 > 0)
    gw1 = cache.sx.T @ dz1
    return gw1, gw2


def gcn_backward(
    cache: GcnCache, params: ModelParameters, dt: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    assert cache.z3 is not None and params.w3 is not None
    dz3 = np.asarray(dt, dtype=np.float64)[:, None]
    gw3 = cache.h2.T @ dz3
    d_h2 = dz3 @ params.w3.T
    gw1, gw2 = gcn_encoder_backward(cache, params, d_h2)
    return gw1, gw2, gw3


def backward(
    cache: SageCache | GcnCache,
    params: ModelParameters,
    y: np.ndarray,
    mask: np.ndarray,
    class_weights: tuple[float, float] = (1.0, 1.0),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of the masked weighted BCE w.r.t. all weight matrices."""
    assert cache.p is not None
    dt = bce_logit_gradient(cache.p, y, mask, class_weights)
    if isinstance(cache, SageCache):
        return sage_backward(cache, params, dt)
    return gcn_backward(cache, params, dt)


# ---------------------------------------------------------------------------
# Adam.
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def for_parameters(cls, weights: list[np.ndarray]) -> "AdamState":
        return cls([np.zeros_like(w) for w in weights], [np.zeros_like(w) for w in weights])


def adam_step(
    weights: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Standard bias-corrected Adam update, in place."""
    state.step += 1
    t = state.step
    for w, g, m, v in zip(weights, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        w -= lr * m_hat / (np.sqrt(v_hat) + eps)


# ---------------------------------------------------------------------------
# Training.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    max_epochs: int = 415
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    class_weights: tuple[float, float] | None = None  # None: inverse train frequency
    fanout: int | None = None
    threshold: float = 0.5
    seed: int = 0
    patience: int = 50
    d_hidden: int = 16
    # The ReLU-inside-sigmoid head collapses to the constant classifier under
    # Adam at realistic feature/degree scales (every head input is
    # non-negative, so majority-class pressure drives all pre-activations
    # below zero, where the ReLU gate blocks recovery); default is the plain
    # sigmoid head, the gated variant stays available for ablation.
    head_relu: bool = False
    head_mean: bool = False

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise DataError("learning rate must be positive")
        if self.class_weights is not None and any(w <= 0 for w in self.class_weights):
            raise DataError("class weights must be positive")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    valid_auc: float


def inverse_frequency_weights(y: np.ndarray, mask: np.ndarray) -> tuple[float, float]:
    """w_c = |mask| / (2 * count_c): mean weight 1 on a balanced mask."""
    yj = np.asarray(y)[np.asarray(mask)]
    n1 = int(np.count_nonzero(yj == 1))
    n0 = int(yj.size - n1)
    if n0 == 0 or n1 == 0:
        raise DataError("single-class training mask")
    return yj.size / (2.0 * n0), yj.size / (2.0 * n1)


def train_node_classifier(
    graph: AugmentedGraph,
    features: np.ndarray,
    split: SplitAssignment,
    config: TrainConfig,
    kind: str = "graphsage",
) -> tuple[ModelParameters, list[EpochRecord]]:
    """Adam training with early stopping on validation AUC-ROC.

    Returns the best-validation parameters and the per-epoch log.
    """
    adjacency = graph.graph.dense_adjacency()
    y = graph.labels
    train_idx = np.array(split.train_ids, dtype=np.int64)
    valid_idx = np.array(split.valid_ids, dtype=np.int64)
    weights = config.class_weights or inverse_frequency_weights(y, train_idx)

    rng = np.random.default_rng(config.seed)
    params = init_parameters(
        kind, features.shape[1], config.d_hidden, rng,
        head_relu=config.head_relu, head_mean=config.head_mean,
    )
    state = AdamState.for_parameters(params.weights())
    prop = None if kind == "graphsage" else gcn_propagation_matrix(adjacency)
    full_agg = mean_aggregation_matrix(adjacency) if kind == "graphsage" else None

    best = params.copy()
    best_auc = -np.inf
    best_epoch = -1
    log: list[EpochRecord] = []
    for epoch in range(config.max_epochs):
        if kind == "graphsage":
            agg = (
                mean_aggregation_matrix(adjacency, config.fanout, rng)
                if config.fanout is not None
                else full_agg
            )
            cache: SageCache | GcnCache = sage_forward(features, adjacency, params, agg)
        else:
            cache = gcn_forward(features, adjacency, params, prop)
        assert cache.p is not None
        loss = weighted_bce_loss(cache.p, y, train_idx, weights)
        valid_auc = auc_roc(cache.p[valid_idx], y[valid_idx])
        log.append(EpochRecord(epoch, loss, valid_auc))
        if valid_auc > best_auc:
            best_auc = valid_auc
            best_epoch = epoch
            best = params.copy()  # snapshot the parameters the AUC was measured on
        elif epoch - best_epoch >= config.patience:
            break
        grads = list(backward(cache, params, y, train_idx, weights))
        adam_step(
            params.weights(), grads, state,
            config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps,
        )
    return best, log


# ---------------------------------------------------------------------------
# Link prediction.
# ---------------------------------------------------------------------------


def link_score(h_u: np.ndarray, h_v: np.ndarray) -> float:
    """Sigmoid of the inner product of two node embeddings."""
    h_u, h_v = np.asarray(h_u, dtype=np.float64), np.asarray(h_v, dtype=np.float64)
    if h_u.shape != h_v.shape:
        raise DataError(f"embedding dimension mismatch: {h_u.shape} vs {h_v.shape}")
    return float(_sigmoid(np.array([h_u @ h_v]))[0])


def _pair_scores(h: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    return _sigmoid(np.einsum("ij,ij->i", h[pairs[:, 0]], h[pairs[:, 1]]))


@dataclass(frozen=True)
class LinkEvalResult:
    auc_roc: float
    auc_pr: float
    epochs_run: int
    test_pairs: int


def _split_counts(total: int, ratios: tuple[float, float, float]) -> tuple[int, int, int]:
    targets = [total * r for r in ratios]
    counts = [int(t) for t in targets]
    order = sorted(range(3), key=lambda i: (targets[i] - counts[i], -i), reverse=True)
    for i in order[: total - sum(counts)]:
        counts[i] += 1
    return counts[0], counts[1], counts[2]


@dataclass(frozen=True)
class LinkSplit:
    """Positive/negative manufacturer-target pairs per split, plus the
    message-passing edge list (all graph edges except held-out positives)."""

    pos_train: np.ndarray
    pos_valid: np.ndarray
    pos_test: np.ndarray
    neg_train: np.ndarray
    neg_valid: np.ndarray
    neg_test: np.ndarray
    message_edges: tuple[tuple[int, int], ...]


def split_link_edges(
    graph: Graph,
    target_services: list[str],
    ratios: tuple[float, float, float],
    rng: np.random.Generator,
) -> LinkSplit:
    """Split manufacturer-target edges by `ratios` and sample 1:1 negatives
    uniformly from manufacturer-target non-edges, disjoint across splits."""
    target_ids = []
    for name in target_services:
        sid = graph.find_service(name)
        if sid is None:
            raise DataError(f"target service {name!r} not found")
        target_ids.append(sid)

    edge_set = graph.edge_set()
    positives = sorted(
        (m, t)
        for t in target_ids
        for m in graph.neighbors[t]
        if graph.nodes[m].is_manufacturer
    )
    if len(positives) < 10:
        raise DataError(f"need at least 10 positive edges, found {len(positives)}")
    manufacturers = graph.manufacturer_ids()
    non_edges = sorted(
        (m, t)
        for t in target_ids
        for m in manufacturers
        if (min(m, t), max(m, t)) not in edge_set
    )
    if len(non_edges) < len(positives):
        raise DataError("not enough manufacturer-target non-edges for 1:1 negatives")

    pos = np.array(positives, dtype=np.int64)
    rng.shuffle(pos)
    n_tr, n_va, n_te = _split_counts(len(pos), ratios)
    if min(n_tr, n_va, n_te) == 0:
        raise DataError("too few positive edges to populate all three splits")

    neg = np.array(non_edges, dtype=np.int64)
    rng.shuffle(neg)
    neg = neg[: len(pos)]

    held_out = {tuple(e) for e in pos[n_tr:]}
    message_edges = tuple(
        (u, v) for u, v in graph.iter_edges()
        if (u, v) not in held_out and (v, u) not in held_out
    )
    return LinkSplit(
        pos_train=pos[:n_tr],
        pos_valid=pos[n_tr : n_tr + n_va],
        pos_test=pos[n_tr + n_va :],
        neg_train=neg[:n_tr],
        neg_valid=neg[n_tr : n_tr + n_va],
        neg_test=neg[n_tr + n_va :],
        message_edges=message_edges,
    )


def train_link_predictor(
    graph: Graph,
    features: np.ndarray,
    target_services: list[str],
    config: TrainConfig,
    kind: str = "graphsage",
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
) -> tuple[ModelParameters, LinkEvalResult]:
    """Encoder-decoder link prediction against the named target services.

    Manufacturer-target edges are split by `ratios`; all remaining edges stay
    in the message-passing graph alongside the training positives. Negative
    pairs are drawn uniformly from manufacturer-target non-edges, one per
    positive, disjoint across splits. The decoder is the inner-product score.
    """
    rng = np.random.default_rng(config.seed)
    link_split = split_link_edges(graph, target_services, ratios, rng)
    pos_tr, pos_va, pos_te = link_split.pos_train, link_split.pos_valid, link_split.pos_test
    neg_tr, neg_va, neg_te = link_split.neg_train, link_split.neg_valid, link_split.neg_test
    adjacency = Graph(graph.nodes, link_split.message_edges).dense_adjacency()

    params = init_parameters(
        kind, features.shape[1], config.d_hidden, rng, with_head=False,
    )
    state = AdamState.for_parameters(params.weights())
    prop = None if kind == "graphsage" else gcn_propagation_matrix(adjacency)
    agg = mean_aggregation_matrix(adjacency) if kind == "graphsage" else None

    train_pairs = np.vstack([pos_tr, neg_tr])
    train_y = np.concatenate([np.ones(len(pos_tr)), np.zeros(len(neg_tr))])
    valid_pairs = np.vstack([pos_va, neg_va])
    valid_y = np.concatenate([np.ones(len(pos_va)), np.zeros(len(neg_va))])

    def encode() -> SageCache | GcnCache:
        if kind == "graphsage":
            return sage_encode(features, adjacency, params, agg)
        return gcn_encode(features, adjacency, params, prop)

    best = params.copy()
    best_auc = -np.inf
    best_epoch = -1
    epochs_run = 0
    for epoch in range(config.max_epochs):
        epochs_run = epoch + 1
        cache = encode()
        h = cache.h2
        valid_auc = auc_roc(_pair_scores(h, valid_pairs), valid_y)
        if valid_auc > best_auc:
            best_auc = valid_auc
            best_epoch = epoch
            best = params.copy()
        elif epoch - best_epoch >= config.patience:
            break
        scores = np.clip(_pair_scores(h, train_pairs), PROB_CLAMP, 1.0 - PROB_CLAMP)
        # d(BCE)/d(logit) = (s - y) / n for the sigmoid inner-product decoder
        dz = (scores - train_y) / len(train_y)
        d_h = np.zeros_like(h)
        np.add.at(d_h, train_pairs[:, 0], dz[:, None] * h[train_pairs[:, 1]])
        np.add.at(d_h, train_pairs[:, 1], dz[:, None] * h[train_pairs[:, 0]])
        if kind == "graphsage":
            grads = list(sage_encoder_backward(cache, params, d_h))  # type: ignore[arg-type]
        else:
            grads = list(gcn_encoder_backward(cache, params, d_h))  # type: ignore[arg-type]
        adam_step(
            params.weights(), grads, state,
            config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps,
        )

    params = best
    if kind == "graphsage":
        h_final = sage_encode(features, adjacency, params, agg).h2
    else:
        h_final = gcn_encode(features, adjacency, params, prop).h2
    test_pairs = np.vstack([pos_te, neg_te])
    test_y = np.concatenate([np.ones(len(pos_te)), np.zeros(len(neg_te))])
    test_scores = _pair_scores(h_final, test_pairs)
    return params, LinkEvalResult(
        auc_roc=auc_roc(test_scores, test_y),
        auc_pr=auc_pr(test_scores, test_y),
        epochs_run=epochs_run,
        test_pairs=len(test_pairs),
    )


# ---------------------------------------------------------------------------
# Checkpoint persistence (bit-exact round trip).
# ---------------------------------------------------------------------------


def save_checkpoint(params: ModelParameters, path: Path | str) -> None:
    flags = (1 if params.head_relu else 0) | (2 if params.head_mean else 0)
    with Path(path).open("wb") as fh:
        fh.write(_CHECKPOINT_MAGIC)
        fh.write(struct.pack("<BBBB", _KIND_BYTES[params.kind], flags, 0, 0))
        fh.write(struct.pack("<I", params.d_hidden))
        for w in (params.w1, params.w2, params.w3):
            if w is None:
                fh.write(struct.pack("<II", 0, 0))
            else:
                fh.write(struct.pack("<II", w.shape[0], w.shape[1]))
                fh.write(np.ascontiguousarray(w, dtype=np.float64).tobytes())


def load_checkpoint(path: Path | str) -> ModelParameters:
    with Path(path).open("rb") as fh:
        if fh.read(4) != _CHECKPOINT_MAGIC:
            raise DataError(f"{path}: not a capgraph checkpoint")
        kind_byte, flags, _, _ = struct.unpack("<BBBB", fh.read(4))
        if kind_byte not in _KIND_NAMES:
            raise DataError(f"{path}: unknown model kind byte {kind_byte}")
        (d_hidden,) = struct.unpack("<I", fh.read(4))
        mats: list[np.ndarray | None] = []
        for _ in range(3):
            rows, cols = struct.unpack("<II", fh.read(8))
            if rows == 0 and cols == 0:
                mats.append(None)
                continue
            payload = fh.read(rows * cols * 8)
            if len(payload) != rows * cols * 8:
                raise DataError(f"{path}: truncated checkpoint payload")
            mats.append(np.frombuffer(payload, dtype=np.float64).reshape(rows, cols).copy())
        if mats[0] is None or mats[1] is None:
            raise DataError(f"{path}: checkpoint missing encoder weights")
        params = ModelParameters(
            _KIND_NAMES[kind_byte], mats[0], mats[1], mats[2],
            head_relu=bool(flags & 1), head_mean=bool(flags & 2),
        )
        if params.d_hidden != d_hidden:
            raise DataError(f"{path}: header width {d_hidden} != payload width {params.d_hidden}")
        return params
