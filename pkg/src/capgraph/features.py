"""Neighbor-name feature pipeline.

Manufacturer features are built in three stages: collect each
manufacturer's first-order service-neighbor names as a token paragraph,
embed the paragraphs with a distributed bag-of-words paragraph-vector
model trained by negative sampling, project the embeddings to the plane
with exact t-SNE, and prepend the node type code. Service nodes keep
their type code with zero-padded plane coordinates.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, NumericError
from .graph import Graph, tokenize
from .seng import AugmentedGraph

FEATURE_DIM = 3

_MATRIX_MAGIC = b"CGMX"


@dataclass(frozen=True)
class EmbeddingConfig:
    dim: int = 64
    epochs: int = 40
    learning_rate: float = 0.025
    negatives: int = 5


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float | None = None  # None: min(30, (n-1)/3 - eps)
    iterations: int = 500
    learning_rate: float = 200.0


def build_neighbor_paragraphs(graph: Graph | AugmentedGraph) -> dict[int, list[str]]:
    """Map each manufacturer id to the normalized tokens of its service
    neighbors' names, neighbors taken in ascending id order."""
    g = graph.graph if isinstance(graph, AugmentedGraph) else graph
    paragraphs: dict[int, list[str]] = {}
    for q in g.manufacturer_ids():
        tokens: list[str] = []
        for s in g.service_neighbors(q):
            tokens.extend(tokenize(g.nodes[s].name))
        paragraphs[q] = tokens
    return paragraphs


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def train_paragraph_vectors(
    paragraphs: Mapping[int, Sequence[str]],
    dim: int = 64,
    epochs: int = 40,
    learning_rate: float = 0.025,
    negatives: int = 5,
    seed: int = 0,
) -> np.ndarray:
    """Distributed bag-of-words paragraph vectors with negative sampling.

    One row per paragraph, in mapping order. Each paragraph visit batches all
    of its (paragraph, word) pairs plus `negatives` noise words per pair into
    a single update; the learning rate decays linearly over visits. Empty
    paragraphs are skipped and map to the zero vector.
    """
    if dim < 2:
        raise DataError("embedding width must be >= 2")
    keys = list(paragraphs)
    token_lists = [list(paragraphs[k]) for k in keys]
    if not any(token_lists):
        raise DataError("all paragraphs are empty")

    vocab = sorted({tok for toks in token_lists for tok in toks})
    index = {tok: i for i, tok in enumerate(vocab)}
    counts = np.zeros(len(vocab), dtype=np.float64)
    encoded = []
    for toks in token_lists:
        ids = np.array([index[t] for t in toks], dtype=np.int64)
        encoded.append(ids)
        np.add.at(counts, ids, 1.0)
    noise = counts ** 0.75
    noise /= noise.sum()

    rng = np.random.default_rng(seed)
    vectors = rng.uniform(-0.5 / dim, 0.5 / dim, size=(len(keys), dim))
    word_out = np.zeros((len(vocab), dim), dtype=np.float64)
    for row, ids in enumerate(encoded):
        if ids.size == 0:
            vectors[row] = 0.0

    nonempty = [r for r, ids in enumerate(encoded) if ids.size]
    total_visits = epochs * len(nonempty)
    min_alpha = learning_rate * 1e-4
    visit = 0
    for _ in range(epochs):
        for row in nonempty:
            alpha = max(min_alpha, learning_rate * (1.0 - visit / total_visits))
            visit += 1
            pos = encoded[row]
            neg = rng.choice(len(vocab), size=(pos.size, negatives), p=noise)
            keep = neg != pos[:, None]  # drop negatives that collide with their positive
            targets = np.concatenate([pos, neg[keep]])
            labels = np.concatenate([np.ones(pos.size), np.zeros(int(keep.sum()))])
            v = vectors[row]
            u = word_out[targets]
            g = alpha * (labels - _sigmoid(u @ v))
            dv = g @ u
            np.add.at(word_out, targets, g[:, None] * v[None, :])
            vectors[row] = v + dv
    return vectors


# ---------------------------------------------------------------------------
# Exact t-SNE.
# ---------------------------------------------------------------------------

_EXAGGERATION = 12.0
_EXAGGERATION_ITERS = 100
_MOMENTUM_SWITCH_ITER = 250
_P_FLOOR = 1e-12


def default_perplexity(n: int) -> float:
    return min(30.0, (n - 1) / 3.0 - 1e-9)


def _squared_distances(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def conditional_affinities(f1: np.ndarray, perplexity: float) -> np.ndarray:
    """Row-stochastic Gaussian affinities with per-point bandwidth solved by
    bisection to match the target perplexity; zero diagonal."""
    n = f1.shape[0]
    if n < 4:
        raise DataError(f"t-SNE needs at least 4 points, got {n}")
    if perplexity <= 0 or perplexity >= (n - 1) / 3.0:
        raise NumericError(f"perplexity {perplexity} infeasible for n={n}")
    d2 = _squared_distances(np.asarray(f1, dtype=np.float64))
    target_entropy = np.log(perplexity)

    beta = np.ones(n)
    beta_min = np.full(n, -np.inf)
    beta_max = np.full(n, np.inf)
    eye = np.eye(n, dtype=bool)
    p = np.zeros((n, n))
    for _ in range(64):
        w = np.exp(-d2 * beta[:, None])
        w[eye] = 0.0
        sum_w = np.maximum(w.sum(axis=1), 1e-300)
        p = w / sum_w[:, None]
        entropy = np.log(sum_w) + beta * np.sum(d2 * w, axis=1) / sum_w
        diff = entropy - target_entropy
        too_high = diff > 0  # entropy too large -> increase precision
        beta_min = np.where(too_high, beta, beta_min)
        beta_max = np.where(~too_high, beta, beta_max)
        grow = too_high & np.isinf(beta_max)
        shrink = ~too_high & np.isinf(beta_min)
        beta = np.where(grow, beta * 2.0, np.where(shrink, beta / 2.0, (beta_min + beta_max) / 2.0))
        beta = np.where(np.isfinite(beta), beta, 1.0)
        if np.all(np.abs(diff) < 1e-7):
            break
    return p


def joint_affinities(f1: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized joint distribution P = (Pc + Pc.T) / 2n, floored away from 0."""
    pc = conditional_affinities(f1, perplexity)
    p = (pc + pc.T) / (2.0 * pc.shape[0])
    return np.maximum(p, _P_FLOOR)


def initial_embedding(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal((n, 2)) * 1e-4


def _student_t_kernel(y: np.ndarray) -> np.ndarray:
    num = 1.0 / (1.0 + _squared_distances(y))
    np.fill_diagonal(num, 0.0)
    return num


def kl_divergence(p: np.ndarray, y: np.ndarray) -> float:
    """KL(P || Q) for a candidate embedding, from the affinity definitions."""
    num = _student_t_kernel(y)
    q = np.maximum(num / num.sum(), _P_FLOOR)
    return float(np.sum(p * np.log(p / q)))


def reduce_to_plane(
    f1: np.ndarray,
    perplexity: float | None = None,
    iterations: int = 500,
    learning_rate: float = 200.0,
    seed: int = 0,
) -> np.ndarray:
    """Exact t-SNE to two dimensions.

    Gradient descent with momentum (0.5, then 0.8 after iteration 250),
    per-coordinate gain adaptation, and x12 early exaggeration for the
    first 100 iterations. Deterministic for a fixed seed.
    """
    f1 = np.asarray(f1, dtype=np.float64)
    n = f1.shape[0]
    if perplexity is None:
        perplexity = default_perplexity(n)
    p = joint_affinities(f1, perplexity)

    y = initial_embedding(n, seed)
    update = np.zeros_like(y)
    gains = np.ones_like(y)
    for it in range(iterations):
        p_eff = p * _EXAGGERATION if it < _EXAGGERATION_ITERS else p
        num = _student_t_kernel(y)
        q = np.maximum(num / num.sum(), _P_FLOOR)
        pq = (p_eff - q) * num
        grad = 4.0 * (pq.sum(axis=1)[:, None] * y - pq @ y)

        momentum = 0.5 if it < _MOMENTUM_SWITCH_ITER else 0.8
        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        update = momentum * update - learning_rate * gains * grad
        y = y + update
        y = y - y.mean(axis=0)
        if not np.all(np.isfinite(y)):
            raise NumericError(f"t-SNE diverged at iteration {it}")
    return y


# ---------------------------------------------------------------------------
# Integration and persistence.
# ---------------------------------------------------------------------------


def integrate_features(
    codes: np.ndarray,
    f2: np.ndarray | None,
    is_manufacturer: Sequence[bool],
) -> np.ndarray:
    """p x 3 node features: [type code, plane coords] for manufacturers (rows of
    f2 consumed in ascending manufacturer order), [type code, 0, 0] otherwise."""
    codes = np.asarray(codes)
    flags = np.asarray(is_manufacturer, dtype=bool)
    if codes.shape[0] != flags.shape[0]:
        raise DataError(f"codes/kinds length mismatch: {codes.shape[0]} vs {flags.shape[0]}")
    out = np.zeros((codes.shape[0], FEATURE_DIM), dtype=np.float64)
    out[:, 0] = codes
    if f2 is not None:
        f2 = np.asarray(f2, dtype=np.float64)
        n_manu = int(flags.sum())
        if f2.shape != (n_manu, 2):
            raise DataError(f"plane embedding shape {f2.shape} does not match {n_manu} manufacturers")
        out[flags, 1:] = f2
    return out


def codes_only_features(codes: np.ndarray) -> np.ndarray:
    """Type codes padded with zeros (the no-feature-aggregation baseline)."""
    out = np.zeros((np.asarray(codes).shape[0], FEATURE_DIM), dtype=np.float64)
    out[:, 0] = codes
    return out


def save_matrix(matrix: np.ndarray, path: Path | str) -> None:
    """Self-describing binary matrix: magic, dims, element width, row-major float64."""
    m = np.ascontiguousarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise DataError(f"expected a 2-d matrix, got shape {m.shape}")
    with Path(path).open("wb") as fh:
        fh.write(_MATRIX_MAGIC)
        fh.write(struct.pack("<III", m.shape[0], m.shape[1], 8))
        fh.write(m.tobytes())


def load_matrix(path: Path | str) -> np.ndarray:
    with Path(path).open("rb") as fh:
        magic = fh.read(4)
        if magic != _MATRIX_MAGIC:
            raise DataError(f"{path}: not a capgraph matrix file")
        rows, cols, width = struct.unpack("<III", fh.read(12))
        if width != 8:
            raise DataError(f"{path}: unsupported element width {width}")
        payload = fh.read(rows * cols * 8)
        if len(payload) != rows * cols * 8:
            raise DataError(f"{path}: truncated matrix payload")
        return np.frombuffer(payload, dtype=np.float64).reshape(rows, cols).copy()
