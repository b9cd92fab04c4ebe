from __future__ import annotations

import numpy as np
import pytest

from capgraph.errors import DataError, NumericError
from capgraph.features import (
    build_neighbor_paragraphs,
    codes_only_features,
    conditional_affinities,
    default_perplexity,
    initial_embedding,
    integrate_features,
    joint_affinities,
    kl_divergence,
    load_matrix,
    reduce_to_plane,
    save_matrix,
    train_paragraph_vectors,
)
from capgraph.graph import (
    Graph,
    ServiceCategory,
    manufacturer,
    mask_target,
    service,
    stratified_split,
)
from capgraph.seng import SengConfig, oversample

from conftest import small_mixed_graph


# ---------------------------------------------------------------------------
# Neighbor paragraphs.
# ---------------------------------------------------------------------------


def test_paragraph_tokens_from_neighbor_names():
    nodes = [
        manufacturer("acme"),
        service("CNC Machining", ServiceCategory.PROCESS),
        service("Aluminum", ServiceCategory.MATERIAL),
    ]
    g = Graph(nodes, [(0, 1), (0, 2)])
    paragraphs = build_neighbor_paragraphs(g)
    assert paragraphs == {0: ["cnc", "machining", "aluminum"]}


def test_paragraph_isolated_manufacturer_empty():
    g = Graph([manufacturer("lonely"), service("s", ServiceCategory.PROCESS)], [])
    assert build_neighbor_paragraphs(g) == {0: []}


def test_paragraph_synthetic_nodes_included():
    nodes = [manufacturer(f"m{j}") for j in range(20)]
    n = len(nodes)
    names = [("milling works", ServiceCategory.PROCESS), ("brass alloy", ServiceCategory.MATERIAL),
             ("aerospace", ServiceCategory.INDUSTRY), ("iso 9001", ServiceCategory.CERTIFICATION),
             ("target", ServiceCategory.PROCESS)]
    nodes.extend(service(nm, cat) for nm, cat in names)
    edges = [(j, n + (j % 4)) for j in range(20)]
    edges += [(j, n + 4) for j in range(8)]  # 8 positives on the target
    task = mask_target(Graph(nodes, edges), "target")
    split = stratified_split(task.labels, (0.5, 0.25, 0.25), seed=0)
    aug = oversample(task, split, SengConfig(oversampling_scale=1.0, seed=1, alpha_choices=(2,)))
    assert aug.num_synthetic > 0
    paragraphs = build_neighbor_paragraphs(aug)
    rec = aug.synthetic[0]
    expected = []
    for s in aug.graph.neighbors[rec.node]:
        expected.extend(aug.graph.nodes[s].name.split())
    assert rec.node in paragraphs
    assert paragraphs[rec.node] == expected


def test_paragraph_multiset_fidelity():
    g = small_mixed_graph()
    paragraphs = build_neighbor_paragraphs(g)
    for q in g.manufacturer_ids():
        expected: list[str] = []
        for s in g.service_neighbors(q):
            expected.extend(g.nodes[s].name.split())
        assert sorted(paragraphs[q]) == sorted(expected)


# ---------------------------------------------------------------------------
# Paragraph vectors.
# ---------------------------------------------------------------------------


def _cluster_corpus(n_per_cluster=8, words_per_doc=12, seed=0):
    """Three planted clusters with disjoint vocabularies."""
    rng = np.random.default_rng(seed)
    vocabs = [
        [f"a{k}" for k in range(6)],
        [f"b{k}" for k in range(6)],
        [f"c{k}" for k in range(6)],
    ]
    paragraphs = {}
    membership = []
    idx = 0
    for c, vocab in enumerate(vocabs):
        for _ in range(n_per_cluster):
            paragraphs[idx] = list(rng.choice(vocab, size=words_per_doc))
            membership.append(c)
            idx += 1
    return paragraphs, membership


def test_doc2vec_shape_contract():
    paragraphs, _ = _cluster_corpus()
    f1 = train_paragraph_vectors(paragraphs, dim=64, epochs=2, seed=0)
    assert f1.shape == (len(paragraphs), 64)
    assert np.isfinite(f1).all()


def test_doc2vec_empty_paragraph_zero_row():
    paragraphs = {0: ["alpha", "beta"], 1: [], 2: ["beta", "gamma"]}
    f1 = train_paragraph_vectors(paragraphs, dim=8, epochs=3, seed=1)
    assert np.all(f1[1] == 0.0)
    assert np.any(f1[0] != 0.0)


def test_doc2vec_all_empty_rejected():
    with pytest.raises(DataError, match="empty"):
        train_paragraph_vectors({0: [], 1: []}, dim=8)


def test_doc2vec_deterministic():
    paragraphs, _ = _cluster_corpus()
    a = train_paragraph_vectors(paragraphs, dim=16, epochs=4, seed=9)
    b = train_paragraph_vectors(paragraphs, dim=16, epochs=4, seed=9)
    assert np.array_equal(a, b)
    c = train_paragraph_vectors(paragraphs, dim=16, epochs=4, seed=10)
    assert not np.array_equal(a, c)


def _mean_cosines(f1, membership):
    norms = np.linalg.norm(f1, axis=1, keepdims=True)
    unit = f1 / np.maximum(norms, 1e-12)
    sims = unit @ unit.T
    n = len(membership)
    intra, inter = [], []
    for i in range(n):
        for j in range(i + 1, n):
            (intra if membership[i] == membership[j] else inter).append(sims[i, j])
    return float(np.mean(intra)), float(np.mean(inter))


def test_doc2vec_cluster_cosine_separation():
    gaps = []
    for seed in range(5):
        paragraphs, membership = _cluster_corpus(seed=seed)
        f1 = train_paragraph_vectors(paragraphs, dim=32, epochs=20, seed=seed)
        intra, inter = _mean_cosines(f1, membership)
        gaps.append(intra - inter)
    assert float(np.mean(gaps)) > 0.0


# ---------------------------------------------------------------------------
# Exact t-SNE.
# ---------------------------------------------------------------------------


def _gaussian_blobs(n_per=6, d=10, seed=0):
    rng = np.random.default_rng(seed)
    centers = rng.normal(0, 5.0, size=(3, d))
    return np.vstack([rng.normal(c, 0.3, size=(n_per, d)) for c in centers])


def test_tsne_shape_contract():
    x = _gaussian_blobs()
    y = reduce_to_plane(x, iterations=60, seed=0)
    assert y.shape == (x.shape[0], 2)
    assert np.isfinite(y).all()


def test_tsne_conditional_rows_are_distributions():
    x = _gaussian_blobs(seed=3)
    p = conditional_affinities(x, perplexity=4.0)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(np.diag(p) == 0.0)


def test_tsne_kl_decreases_from_initialization():
    x = _gaussian_blobs(seed=1)
    perplexity = default_perplexity(x.shape[0])
    p = joint_affinities(x, perplexity)
    y0 = initial_embedding(x.shape[0], seed=5)
    y = reduce_to_plane(x, perplexity=perplexity, iterations=250, seed=5)
    assert kl_divergence(p, y) < kl_divergence(p, y0)


def test_tsne_duplicate_rows_colocate():
    # identical rows share affinities, so the converged embedding co-locates
    # them; the default lr=200 oscillates on 15 points, so converge at lr=20
    x = _gaussian_blobs(n_per=5, seed=2)
    x[3] = x[2]  # exact duplicate pair
    y = reduce_to_plane(x, iterations=1500, learning_rate=20.0, seed=4)
    diameter = np.max(
        np.linalg.norm(y[:, None, :] - y[None, :, :], axis=-1)
    )
    gap = np.linalg.norm(y[2] - y[3])
    assert gap <= 1e-3 * diameter


def test_tsne_deterministic():
    x = _gaussian_blobs(seed=6)
    a = reduce_to_plane(x, iterations=80, seed=11)
    b = reduce_to_plane(x, iterations=80, seed=11)
    assert np.array_equal(a, b)


def test_tsne_perplexity_infeasible():
    x = _gaussian_blobs(n_per=2, seed=0)  # n = 6
    with pytest.raises(NumericError, match="infeasible"):
        reduce_to_plane(x, perplexity=2.0, iterations=10, seed=0)
    with pytest.raises(DataError, match="at least 4"):
        reduce_to_plane(x[:3], iterations=10, seed=0)


# ---------------------------------------------------------------------------
# Feature integration and persistence.
# ---------------------------------------------------------------------------


def test_integrate_manufacturer_row():
    codes = np.array([0, 1])
    f2 = np.array([[1.2, -0.3]])
    out = integrate_features(codes, f2, [True, False])
    assert np.allclose(out[0], [0.0, 1.2, -0.3])
    assert np.allclose(out[1], [1.0, 0.0, 0.0])


def test_integrate_service_rows_zero_padded(mixed_graph):
    from capgraph.graph import init_type_codes

    codes = init_type_codes(mixed_graph)
    flags = [n.is_manufacturer for n in mixed_graph.nodes]
    f2 = np.arange(8, dtype=float).reshape(4, 2)
    out = integrate_features(codes, f2, flags)
    assert out.shape == (8, 3)
    assert np.allclose(out[4], [1.0, 0.0, 0.0])  # industry
    assert np.allclose(out[7], [4.0, 0.0, 0.0])  # certification
    manu_rows = out[np.array(flags)]
    assert np.allclose(manu_rows[:, 1:], f2)


def test_integrate_dimension_mismatch():
    with pytest.raises(DataError, match="does not match"):
        integrate_features(np.array([0, 0]), np.zeros((1, 2)), [True, True])
    with pytest.raises(DataError, match="length mismatch"):
        integrate_features(np.array([0, 0]), None, [True])


def test_codes_only_features():
    out = codes_only_features(np.array([0, 3, 4]))
    assert out.shape == (3, 3)
    assert np.allclose(out[:, 0], [0, 3, 4])
    assert np.all(out[:, 1:] == 0.0)


def test_matrix_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(0)
    m = rng.standard_normal((7, 5))
    path = tmp_path / "m.bin"
    save_matrix(m, path)
    back = load_matrix(path)
    assert back.dtype == np.float64
    assert np.array_equal(back, m)
    assert back.tobytes() == m.tobytes()


def test_matrix_bad_magic(tmp_path):
    path = tmp_path / "m.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 12)
    with pytest.raises(DataError, match="not a capgraph matrix"):
        load_matrix(path)
