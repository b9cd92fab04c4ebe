from __future__ import annotations

import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capgraph.errors import DataError
from capgraph.graph import (
    Graph,
    ServiceCategory,
    Split,
    build_from_corpus,
    compute_imbalance,
    init_type_codes,
    load_graph,
    manufacturer,
    mask_target,
    restore_target,
    service,
    stratified_split,
    tokenize,
    write_graph_files,
)

from conftest import random_bipartite_graph, small_mixed_graph, star_graph


# ---------------------------------------------------------------------------
# Graph construction and file loading.
# ---------------------------------------------------------------------------


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_graph_three_nodes_two_edges(tmp_path):
    nodes = _write(tmp_path, "n.tsv", "0\tmanufacturer\t-\tacme\n1\tservice\tprocess\tmilling\n2\tservice\tmaterial\tsteel\n")
    edges = _write(tmp_path, "e.tsv", "0\t1\n0\t2\n")
    g = load_graph(nodes, edges)
    assert g.num_nodes == 3
    assert g.num_edges == 2
    assert g.neighbors[0] == (1, 2)


def test_load_graph_dangling_endpoint(tmp_path):
    nodes = _write(tmp_path, "n.tsv", "\n".join(
        f"{j}\tmanufacturer\t-\tm{j}" for j in range(5)) + "\n")
    edges = _write(tmp_path, "e.tsv", "5\t7\n")
    with pytest.raises(DataError, match="dangling"):
        load_graph(nodes, edges)


def test_load_graph_duplicate_edge_collapses(tmp_path):
    nodes = _write(tmp_path, "n.tsv", "0\tmanufacturer\t-\ta\n1\tservice\tprocess\tp\n")
    edges = _write(tmp_path, "e.tsv", "0\t1\n0\t1\n1\t0\n")
    g = load_graph(nodes, edges)
    assert g.num_edges == 1
    assert g.degree(0) == 1


def test_load_graph_rejects_self_loop_with_line(tmp_path):
    nodes = _write(tmp_path, "n.tsv", "0\tmanufacturer\t-\ta\n1\tservice\tprocess\tp\n")
    edges = _write(tmp_path, "e.tsv", "0\t1\n1\t1\n")
    with pytest.raises(DataError, match="line 2"):
        load_graph(nodes, edges)


def test_load_graph_rejects_unknown_tokens(tmp_path):
    edges = _write(tmp_path, "e.tsv", "")
    bad_kind = _write(tmp_path, "k.tsv", "0\twidget\t-\ta\n")
    with pytest.raises(DataError, match="unknown kind"):
        load_graph(bad_kind, edges)
    bad_cat = _write(tmp_path, "c.tsv", "0\tservice\tcolor\ta\n")
    with pytest.raises(DataError, match="unknown category"):
        load_graph(bad_cat, edges)


def test_load_graph_requires_contiguous_ids(tmp_path):
    nodes = _write(tmp_path, "n.tsv", "0\tmanufacturer\t-\ta\n2\tservice\tprocess\tp\n")
    edges = _write(tmp_path, "e.tsv", "")
    with pytest.raises(DataError, match="contiguous"):
        load_graph(nodes, edges)


def test_graph_rejects_manufacturer_manufacturer_edge():
    nodes = [manufacturer("a"), manufacturer("b")]
    with pytest.raises(DataError, match="manufacturer-manufacturer"):
        Graph(nodes, [(0, 1)])


def test_write_then_load_round_trip(tmp_path):
    g = small_mixed_graph()
    write_graph_files(g, tmp_path / "n.tsv", tmp_path / "e.tsv")
    g2 = load_graph(tmp_path / "n.tsv", tmp_path / "e.tsv")
    assert g2 == g


# ---------------------------------------------------------------------------
# Corpus keyword matching.
# ---------------------------------------------------------------------------

SERVICES = [
    ("machining", ServiceCategory.PROCESS),
    ("welding", ServiceCategory.PROCESS),
    ("casting", ServiceCategory.PROCESS),
]


def test_corpus_token_boundary_matching():
    docs = {"acme": "We offer CNC Machining and welding"}
    g = build_from_corpus(docs, SERVICES)
    hits = {g.nodes[v].name for v in g.neighbors[0]}
    assert hits == {"machining", "welding"}


def test_corpus_empty_doc_isolated_manufacturer():
    g = build_from_corpus({"acme": ""}, SERVICES)
    assert g.degree(0) == 0


def test_corpus_case_insensitive():
    g = build_from_corpus({"acme": "MACHINING"}, SERVICES)
    assert {g.nodes[v].name for v in g.neighbors[0]} == {"machining"}


def test_corpus_no_substring_false_hit():
    g = build_from_corpus({"acme": "ask for copperfield"}, [("copper", ServiceCategory.MATERIAL)])
    assert g.degree(0) == 0


def test_corpus_multiword_service_name():
    g = build_from_corpus(
        {"a": "certified to ISO 9001 since 2001", "b": "iso certified, 9001 pending"},
        [("ISO 9001", ServiceCategory.CERTIFICATION)],
    )
    assert g.degree(0) == 1
    assert g.degree(1) == 0  # tokens present but not adjacent


def test_corpus_duplicate_service_rejected():
    with pytest.raises(DataError, match="duplicate service"):
        build_from_corpus({"a": "x"}, [("m", ServiceCategory.PROCESS), ("m", ServiceCategory.MATERIAL)])


def test_corpus_service_edges_copied():
    g = build_from_corpus(
        {"a": "machining"},
        [("machining", ServiceCategory.PROCESS), ("metalwork", ServiceCategory.INDUSTRY)],
        [("machining", "metalwork")],
    )
    s1, s2 = g.find_service("machining"), g.find_service("metalwork")
    assert s2 in g.neighbors[s1]
    with pytest.raises(DataError, match="unknown service"):
        build_from_corpus({"a": "x"}, [("m", ServiceCategory.PROCESS)], [("m", "nope")])


def _regex_match_oracle(doc: str, name: str) -> bool:
    """Independent route: regex word-boundary search on normalized text."""
    norm = re.sub(r"[^0-9a-z]+", " ", doc.lower()).strip()
    needle = re.sub(r"[^0-9a-z]+", " ", name.lower()).strip()
    if not needle:
        return False
    return re.search(rf"(?<![0-9a-z]){re.escape(needle)}(?![0-9a-z])", norm) is not None


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_corpus_matcher_equals_regex_oracle(data):
    vocab = ["mill", "milling", "laser cut", "cut", "iso 9001", "anodizing"]
    words = ["mill", "milling", "laser", "cut", "iso", "9001", "anodizing", "and", "offer", "we"]
    doc = " ".join(data.draw(st.lists(st.sampled_from(words), min_size=0, max_size=12)))
    names = data.draw(st.lists(st.sampled_from(vocab), min_size=1, max_size=6, unique=True))
    services = [(n, ServiceCategory.PROCESS) for n in names]
    g = build_from_corpus({"m": doc}, services)
    got = {g.nodes[v].name for v in g.neighbors[0]}
    expected = {n for n in names if _regex_match_oracle(doc, n)}
    assert got == expected


def test_tokenize_strips_punctuation_and_case():
    assert tokenize("CNC-Machining, Welding!") == ["cnc", "machining", "welding"]


# ---------------------------------------------------------------------------
# Type codes.
# ---------------------------------------------------------------------------


def test_type_codes_all_five_kinds(mixed_graph):
    codes = init_type_codes(mixed_graph)
    assert codes[0] == 0  # manufacturer
    assert codes[4] == 1  # industry
    assert codes[5] == 2  # process
    assert codes[6] == 3  # material
    assert codes[7] == 4  # certification


# ---------------------------------------------------------------------------
# Target masking.
# ---------------------------------------------------------------------------


def test_mask_target_degree_oracle():
    g = star_graph(4, "machining")
    task = mask_target(g, "machining")
    assert task.graph.num_nodes == g.num_nodes - 1
    assert int(task.labels.sum()) == 4
    assert len(task.removed_edges) == 4
    assert g.num_edges - task.graph.num_edges == g.degree(4)


def test_mask_target_no_neighbors():
    nodes = [manufacturer("a"), service("lonely", ServiceCategory.MATERIAL)]
    task = mask_target(Graph(nodes, []), "lonely")
    assert task.labels.sum() == 0
    assert task.removed_edges == ()


def test_mask_target_label_soundness(mixed_graph):
    task = mask_target(mixed_graph, "machining")
    positives = {m for m, _ in task.removed_edges}
    for j in range(task.graph.num_nodes):
        expect = 1 if (j in positives and task.graph.nodes[j].is_manufacturer) else 0
        assert task.labels[j] == expect
    # the service-service edge (automotive, machining) was removed but not recorded
    assert all(task.graph.nodes[m].is_manufacturer for m in positives)


def test_mask_target_errors(mixed_graph):
    with pytest.raises(DataError, match="not found"):
        mask_target(mixed_graph, "unobtainium")
    with pytest.raises(DataError, match="manufacturer node"):
        mask_target(mixed_graph, "alpha")


def test_mask_preserves_other_service_edges(mixed_graph):
    task = mask_target(mixed_graph, "copper")
    # automotive-machining survives; ids below the target keep their values
    a, m = task.graph.find_service("automotive"), task.graph.find_service("machining")
    assert m in task.graph.neighbors[a]


def test_restore_target_round_trip(mixed_graph):
    task = mask_target(mixed_graph, "machining")
    restored, target_id = restore_target(task)
    assert restored.nodes[target_id].name == "machining"
    # same edge multiset up to the relabeled target position when the target
    # had only manufacturer neighbors; here one service edge is dropped
    task2 = mask_target(restored, "machining")
    assert task2.graph == task.graph
    assert np.array_equal(task2.labels, task.labels)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_masking_conservation_property(seed):
    rng = np.random.default_rng(seed)
    g = random_bipartite_graph(rng, 8, 5, 0.4)
    target = g.nodes[g.service_ids()[0]].name
    task = mask_target(g, target)
    # bipartite graphs: all removed edges are manufacturer edges, so the
    # conservation identity holds exactly
    assert g.num_edges == task.graph.num_edges + len(task.removed_edges)
    # adjacency symmetry of the masked graph
    a = task.graph.dense_adjacency()
    assert np.array_equal(a, a.T)
    assert np.trace(a) == 0


# ---------------------------------------------------------------------------
# Class statistics.
# ---------------------------------------------------------------------------


def test_imbalance_59_41():
    labels = np.array([0] * 59 + [1] * 41)
    stats = compute_imbalance(labels)
    assert stats.minority_label == 1
    assert stats.majority_size == 59
    assert stats.minority_size == 41
    assert stats.imbalance_ratio == pytest.approx(0.6949, abs=1e-4)


def test_imbalance_balanced():
    stats = compute_imbalance(np.array([0] * 50 + [1] * 50))
    assert stats.imbalance_ratio == 1.0


def test_imbalance_copper_style_majority_zero():
    # Copper-style distribution: majority class 0, ratio 19%
    labels = np.array([0] * 100 + [1] * 19)
    stats = compute_imbalance(labels)
    assert stats.minority_label == 1
    assert stats.imbalance_ratio == pytest.approx(0.19)


def test_imbalance_machining_style_majority_one():
    # Machining-style distribution: majority class 1
    labels = np.array([1] * 100 + [0] * 59)
    stats = compute_imbalance(labels)
    assert stats.minority_label == 0
    assert stats.imbalance_ratio == pytest.approx(0.59)


def test_imbalance_single_class_rejected():
    with pytest.raises(DataError, match="degenerate"):
        compute_imbalance(np.ones(10, dtype=int))


def test_imbalance_eligible_subset():
    labels = np.array([1, 1, 0, 0, 0, 1])
    stats = compute_imbalance(labels, [0, 2, 3])
    assert stats.minority_size == 1
    assert stats.majority_size == 2


# ---------------------------------------------------------------------------
# Stratified splits.
# ---------------------------------------------------------------------------


def test_split_proportions_100_nodes():
    labels = np.array([1] * 30 + [0] * 70)
    split = stratified_split(labels, (0.8, 0.1, 0.1), seed=3)
    train = split.train_ids
    train_pos = sum(labels[j] for j in train)
    assert abs(train_pos - 24) <= 1
    assert abs((len(train) - train_pos) - 56) <= 1
    assert sorted(split.assignment) == list(range(100))


def test_split_determinism():
    labels = np.array([1] * 12 + [0] * 28)
    a = stratified_split(labels, (0.8, 0.1, 0.1), seed=9)
    b = stratified_split(labels, (0.8, 0.1, 0.1), seed=9)
    assert a == b
    c = stratified_split(labels, (0.8, 0.1, 0.1), seed=10)
    assert a != c


def test_split_quarters_eight_positives():
    labels = np.array([1] * 8 + [0] * 16)
    split = stratified_split(labels, (0.5, 0.25, 0.25), seed=0)
    pos_counts = {
        s: sum(1 for j in split.ids(s) if labels[j] == 1) for s in Split
    }
    assert pos_counts == {Split.TRAIN: 4, Split.VALID: 2, Split.TEST: 2}


def test_split_class_too_small():
    labels = np.array([1] * 4 + [0] * 40)
    with pytest.raises(DataError, match="too small"):
        stratified_split(labels, (0.8, 0.1, 0.1), seed=0)


def test_split_bad_ratios():
    labels = np.array([1] * 10 + [0] * 10)
    with pytest.raises(DataError, match="sum to 1"):
        stratified_split(labels, (0.8, 0.1, 0.2), seed=0)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(10, 60),
    st.integers(10, 60),
    st.integers(0, 2**32 - 1),
)
def test_split_proportion_property(n_pos, n_neg, seed):
    labels = np.array([1] * n_pos + [0] * n_neg)
    ratios = (0.8, 0.1, 0.1)
    split = stratified_split(labels, ratios, seed)
    for cls, count in ((1, n_pos), (0, n_neg)):
        for s, r in zip(Split, ratios):
            got = sum(1 for j in split.ids(s) if labels[j] == cls)
            assert abs(got - count * r) <= 1
    assert stratified_split(labels, ratios, seed) == split
