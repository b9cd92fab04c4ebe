"""Graph data model for manufacturer-service knowledge graphs.

Nodes are either manufacturers or typed services (industry, process,
material, certification). Edges are undirected and unweighted; the graph
never contains manufacturer-manufacturer edges, self-loops, or parallel
edges. Node ids are dense integers 0..p-1.

Also provides file ingestion, keyword-match construction from a text
corpus, type-code initialization, target-service masking into a labeled
classification task, class-imbalance statistics, and stratified splits.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import DataError

MANUFACTURER_CODE = 0

_TOKEN_RE = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Normalize text to lowercase tokens: punctuation stripped, whitespace collapsed."""
    return [t for t in _TOKEN_RE.split(text.lower()) if t]


class Kind(Enum):
    MANUFACTURER = "manufacturer"
    SERVICE = "service"


class ServiceCategory(Enum):
    INDUSTRY = "industry"
    PROCESS = "process"
    MATERIAL = "material"
    CERTIFICATION = "certification"


# Type code per node kind: manufacturers 0, then the four service categories.
_CATEGORY_CODE = {
    ServiceCategory.INDUSTRY: 1,
    ServiceCategory.PROCESS: 2,
    ServiceCategory.MATERIAL: 3,
    ServiceCategory.CERTIFICATION: 4,
}


@dataclass(frozen=True)
class NodeKind:
    """Identity of one node: manufacturer or service, with category and display name."""

    kind: Kind
    category: ServiceCategory | None
    name: str

    def __post_init__(self) -> None:
        if self.kind is Kind.MANUFACTURER and self.category is not None:
            raise DataError(f"manufacturer node {self.name!r} must not carry a service category")
        if self.kind is Kind.SERVICE and self.category is None:
            raise DataError(f"service node {self.name!r} requires a category")
        if "\t" in self.name or "\n" in self.name:
            raise DataError(f"node name {self.name!r} contains tab/newline")

    @property
    def is_manufacturer(self) -> bool:
        return self.kind is Kind.MANUFACTURER

    @property
    def type_code(self) -> int:
        if self.kind is Kind.MANUFACTURER:
            return MANUFACTURER_CODE
        return _CATEGORY_CODE[self.category]  # type: ignore[index]


def manufacturer(name: str) -> NodeKind:
    return NodeKind(Kind.MANUFACTURER, None, name)


def service(name: str, category: ServiceCategory) -> NodeKind:
    return NodeKind(Kind.SERVICE, category, name)


class Graph:
    """Immutable undirected graph over manufacturer and service nodes.

    Construction validates endpoints, rejects self-loops and
    manufacturer-manufacturer edges, and collapses duplicate edges.
    """

    __slots__ = ("nodes", "neighbors", "num_edges")

    def __init__(self, nodes: Sequence[NodeKind], edges: Iterable[tuple[int, int]]):
        self.nodes: tuple[NodeKind, ...] = tuple(nodes)
        p = len(self.nodes)
        edge_set: set[tuple[int, int]] = set()
        for src, dst in edges:
            if not (0 <= src < p and 0 <= dst < p):
                raise DataError(f"dangling endpoint in edge ({src}, {dst}); node count is {p}")
            if src == dst:
                raise DataError(f"self-loop on node {src}")
            if self.nodes[src].is_manufacturer and self.nodes[dst].is_manufacturer:
                raise DataError(f"manufacturer-manufacturer edge ({src}, {dst}) is not allowed")
            edge_set.add((src, dst) if src < dst else (dst, src))
        adj: list[list[int]] = [[] for _ in range(p)]
        for src, dst in edge_set:
            adj[src].append(dst)
            adj[dst].append(src)
        self.neighbors: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(ns)) for ns in adj)
        self.num_edges: int = len(edge_set)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    def degree(self, node: int) -> int:
        return len(self.neighbors[node])

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(
            (u, v) for u in range(self.num_nodes) for v in self.neighbors[u] if u < v
        )

    def iter_edges(self) -> Iterator[tuple[int, int]]:
        for u in range(self.num_nodes):
            for v in self.neighbors[u]:
                if u < v:
                    yield u, v

    def manufacturer_ids(self) -> list[int]:
        return [j for j, node in enumerate(self.nodes) if node.is_manufacturer]

    def service_ids(self) -> list[int]:
        return [j for j, node in enumerate(self.nodes) if not node.is_manufacturer]

    def service_neighbors(self, node: int) -> list[int]:
        return [v for v in self.neighbors[node] if not self.nodes[v].is_manufacturer]

    def find_service(self, name: str) -> int | None:
        for j, node in enumerate(self.nodes):
            if not node.is_manufacturer and node.name == name:
                return j
        return None

    def find_manufacturer(self, name: str) -> int | None:
        for j, node in enumerate(self.nodes):
            if node.is_manufacturer and node.name == name:
                return j
        return None

    def dense_adjacency(self) -> np.ndarray:
        """Symmetric 0/1 adjacency matrix with zero diagonal, float64."""
        a = np.zeros((self.num_nodes, self.num_nodes), dtype=np.float64)
        for u in range(self.num_nodes):
            ns = self.neighbors[u]
            if ns:
                a[u, list(ns)] = 1.0
        return a

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.nodes == other.nodes and self.neighbors == other.neighbors

    def __hash__(self) -> int:
        return hash((self.nodes, self.neighbors))


def init_type_codes(graph: Graph) -> np.ndarray:
    """Length-p integer vector of type codes (0 manufacturer .. 4 certification)."""
    return np.array([node.type_code for node in graph.nodes], dtype=np.int64)


# ---------------------------------------------------------------------------
# File ingestion.  Node file: `id<TAB>kind<TAB>category<TAB>name` per line,
# category `-` for manufacturers.  Edge file: `src<TAB>dst` per line.
# ---------------------------------------------------------------------------

_KIND_TOKENS = {k.value: k for k in Kind}
_CATEGORY_TOKENS = {c.value: c for c in ServiceCategory}


def _parse_node_line(line: str, lineno: int) -> tuple[int, NodeKind]:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 4:
        raise DataError(f"node file line {lineno}: expected 4 tab-separated fields, got {len(parts)}")
    raw_id, raw_kind, raw_category, name = parts
    try:
        node_id = int(raw_id)
    except ValueError:
        raise DataError(f"node file line {lineno}: bad node id {raw_id!r}") from None
    kind = _KIND_TOKENS.get(raw_kind)
    if kind is None:
        raise DataError(f"node file line {lineno}: unknown kind token {raw_kind!r}")
    if kind is Kind.MANUFACTURER:
        if raw_category != "-":
            raise DataError(f"node file line {lineno}: manufacturer category must be '-', got {raw_category!r}")
        return node_id, manufacturer(name)
    category = _CATEGORY_TOKENS.get(raw_category)
    if category is None:
        raise DataError(f"node file line {lineno}: unknown category token {raw_category!r}")
    return node_id, service(name, category)


def load_graph(node_file: Path | str, edge_file: Path | str) -> Graph:
    """Load a graph from node and edge files; duplicate edge lines collapse."""
    node_path, edge_path = Path(node_file), Path(edge_file)
    by_id: dict[int, NodeKind] = {}
    with node_path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            node_id, node = _parse_node_line(line, lineno)
            if node_id in by_id:
                raise DataError(f"node file line {lineno}: duplicate node id {node_id}")
            by_id[node_id] = node
    if not by_id:
        raise DataError(f"node file {node_path} is empty")
    p = len(by_id)
    if sorted(by_id) != list(range(p)):
        raise DataError(f"node ids must be contiguous 0..{p - 1}")
    nodes = [by_id[j] for j in range(p)]

    edges: list[tuple[int, int]] = []
    with edge_path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DataError(f"edge file line {lineno}: expected 'src<TAB>dst'")
            try:
                src, dst = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataError(f"edge file line {lineno}: bad endpoint") from None
            if not (0 <= src < p and 0 <= dst < p):
                raise DataError(f"edge file line {lineno}: dangling endpoint ({src}, {dst})")
            if src == dst:
                raise DataError(f"edge file line {lineno}: self-loop on node {src}")
            edges.append((src, dst))
    return Graph(nodes, edges)


def write_graph_files(graph: Graph, node_file: Path | str, edge_file: Path | str) -> None:
    """Write canonical node/edge files (edges sorted, src < dst)."""
    node_lines = []
    for j, node in enumerate(graph.nodes):
        category = "-" if node.category is None else node.category.value
        node_lines.append(f"{j}\t{node.kind.value}\t{category}\t{node.name}\n")
    Path(node_file).write_text("".join(node_lines), encoding="utf-8")
    edge_lines = [f"{u}\t{v}\n" for u, v in sorted(graph.edge_set())]
    Path(edge_file).write_text("".join(edge_lines), encoding="utf-8")


def load_corpus(corpus_file: Path | str) -> dict[str, str]:
    """Read a corpus file: one `name<TAB>document-text` record per line."""
    docs: dict[str, str] = {}
    with Path(corpus_file).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t", 1)
            if len(parts) != 2:
                raise DataError(f"corpus line {lineno}: expected 'name<TAB>document-text'")
            name, text = parts
            if name in docs:
                raise DataError(f"corpus line {lineno}: duplicate manufacturer name {name!r}")
            docs[name] = text
    if not docs:
        raise DataError("corpus is empty")
    return docs


def _contains_token_run(doc_tokens: Sequence[str], needle: Sequence[str]) -> bool:
    if not needle or len(needle) > len(doc_tokens):
        return False
    first = needle[0]
    span = len(needle)
    for i, tok in enumerate(doc_tokens[: len(doc_tokens) - span + 1]):
        if tok == first and list(doc_tokens[i : i + span]) == list(needle):
            return True
    return False


def build_from_corpus(
    docs: Mapping[str, str],
    services: Sequence[tuple[str, ServiceCategory]],
    service_edges: Sequence[tuple[str, str]] = (),
) -> Graph:
    """Build a graph by keyword-matching service names against manufacturer documents.

    One manufacturer node per document (in mapping order), one service node per
    entry of `services`. A manufacturer-service edge exists iff the normalized
    service name occurs as a token-boundary substring of the normalized
    document. Service-service edges are copied verbatim (referenced by name).
    """
    if not docs:
        raise DataError("corpus is empty")
    if not services:
        raise DataError("service vocabulary is empty")
    seen: set[str] = set()
    for name, _ in services:
        if not name:
            raise DataError("empty service name")
        if name in seen:
            raise DataError(f"duplicate service name {name!r}")
        seen.add(name)

    nodes = [manufacturer(name) for name in docs]
    n = len(nodes)
    nodes.extend(service(name, category) for name, category in services)
    service_id = {name: n + k for k, (name, _) in enumerate(services)}

    edges: list[tuple[int, int]] = []
    needles = [(service_id[name], tokenize(name)) for name, _ in services]
    for m, text in enumerate(docs.values()):
        doc_tokens = tokenize(text)
        for sid, needle in needles:
            if _contains_token_run(doc_tokens, needle):
                edges.append((m, sid))
    for a, b in service_edges:
        if a not in service_id or b not in service_id:
            missing = a if a not in service_id else b
            raise DataError(f"service edge references unknown service {missing!r}")
        edges.append((service_id[a], service_id[b]))
    return Graph(nodes, edges)


# ---------------------------------------------------------------------------
# Target masking and class statistics.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LabeledTask:
    """A target-masked graph with binary labels for one service.

    `removed_edges` records (manufacturer id in the masked graph, target name)
    for every manufacturer-target edge that masking deleted. Manufacturers with
    such an entry carry label 1; everything else is 0.
    """

    graph: Graph
    labels: np.ndarray
    target_name: str
    target_category: ServiceCategory
    removed_edges: tuple[tuple[int, str], ...]

    @property
    def positive_ids(self) -> list[int]:
        return [m for m, _ in self.removed_edges]


def mask_target(graph: Graph, target: str) -> LabeledTask:
    """Remove the target service node and its incident edges; label its former
    manufacturer neighbors 1 and everything else 0."""
    target_id = graph.find_service(target)
    if target_id is None:
        if graph.find_manufacturer(target) is not None:
            raise DataError(f"target {target!r} is a manufacturer node, not a service")
        raise DataError(f"target service {target!r} not found")
    target_node = graph.nodes[target_id]

    # Reindex: nodes above the target shift down by one.
    remap = {old: (old if old < target_id else old - 1) for old in range(graph.num_nodes) if old != target_id}
    nodes = [graph.nodes[old] for old in range(graph.num_nodes) if old != target_id]
    edges = [
        (remap[u], remap[v])
        for u, v in graph.iter_edges()
        if u != target_id and v != target_id
    ]
    masked = Graph(nodes, edges)

    positives = sorted(
        remap[u] for u in graph.neighbors[target_id] if graph.nodes[u].is_manufacturer
    )
    labels = np.zeros(masked.num_nodes, dtype=np.int64)
    labels[positives] = 1
    removed = tuple((m, target) for m in positives)
    assert target_node.category is not None
    return LabeledTask(masked, labels, target, target_node.category, removed)


def restore_target(task: LabeledTask) -> tuple[Graph, int]:
    """Rebuild the unmasked graph by re-adding the target node (appended last)
    and its manufacturer edges. Returns (graph, target id)."""
    nodes = list(task.graph.nodes)
    target_id = len(nodes)
    nodes.append(service(task.target_name, task.target_category))
    edges = list(task.graph.iter_edges())
    edges.extend((m, target_id) for m, _ in task.removed_edges)
    return Graph(nodes, edges), target_id


@dataclass(frozen=True)
class ClassStats:
    majority_size: int
    minority_size: int
    minority_label: int
    imbalance_ratio: float


def compute_imbalance(labels: np.ndarray, eligible: Iterable[int] | None = None) -> ClassStats:
    """Majority/minority counts and |c2|/|c1| ratio over the eligible node set."""
    lab = np.asarray(labels)
    if eligible is not None:
        idx = np.fromiter(eligible, dtype=np.int64)
        if idx.size == 0:
            raise DataError("eligible node set is empty")
        lab = lab[idx]
    ones = int(np.count_nonzero(lab == 1))
    zeros = int(lab.size - ones)
    if ones == 0 or zeros == 0:
        raise DataError("degenerate class distribution: only one class present")
    if ones <= zeros:
        return ClassStats(zeros, ones, 1, ones / zeros)
    return ClassStats(ones, zeros, 0, zeros / ones)


# ---------------------------------------------------------------------------
# Stratified splits.
# ---------------------------------------------------------------------------


class Split(Enum):
    TRAIN = "train"
    VALID = "valid"
    TEST = "test"


@dataclass(frozen=True)
class SplitAssignment:
    """Node -> split map over the labeled node set."""

    assignment: dict[int, Split]
    seed: int

    def ids(self, split: Split) -> list[int]:
        return sorted(j for j, s in self.assignment.items() if s is split)

    @property
    def train_ids(self) -> list[int]:
        return self.ids(Split.TRAIN)

    @property
    def valid_ids(self) -> list[int]:
        return self.ids(Split.VALID)

    @property
    def test_ids(self) -> list[int]:
        return self.ids(Split.TEST)


def _largest_remainder(count: int, ratios: Sequence[float]) -> list[int]:
    targets = [count * r for r in ratios]
    counts = [int(t) for t in targets]
    remainder = count - sum(counts)
    order = sorted(range(len(ratios)), key=lambda i: (targets[i] - counts[i], -i), reverse=True)
    for i in order[:remainder]:
        counts[i] += 1
    return counts


def stratified_split(
    labels: np.ndarray,
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> SplitAssignment:
    """Per-class shuffle by seed, then proportional train/valid/test assignment.

    Each class-split cell is within +-1 node of count*ratio (largest remainder);
    deterministic for a fixed seed.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"split ratios must sum to 1, got {ratios}")
    if any(r <= 0 for r in ratios):
        raise DataError(f"split ratios must be positive, got {ratios}")
    lab = np.asarray(labels)
    rng = np.random.default_rng(seed)
    assignment: dict[int, Split] = {}
    for cls in (0, 1):
        members = np.flatnonzero(lab == cls)
        if members.size == 0:
            raise DataError(f"class {cls} has no members")
        rng.shuffle(members)
        counts = _largest_remainder(members.size, ratios)
        if any(c == 0 for c in counts):
            raise DataError(
                f"class {cls} is too small to populate all three splits ({members.size} members)"
            )
        offsets = np.cumsum([0] + counts)
        for split, lo, hi in zip(Split, offsets[:-1], offsets[1:]):
            for j in members[lo:hi]:
                assignment[int(j)] = split
    return SplitAssignment(assignment, seed)
