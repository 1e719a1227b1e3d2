"""Community detection on similarity graphs.

Greedy two-phase modularity maximization (local moves, then aggregation)
with a seed-determined node visit order, plus the cutoff persistence sweep
used to pick how many edges to prune.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .embeddings import SimilarityMatrix
from .graph import SimilarityGraph, build_pruned_graph
from .metrics import adjusted_rand_index
from .validation import check_unique_ids

_MIN_GAIN = 1e-9


@dataclass(frozen=True)
class Partition:
    """Total assignment of node ids to integer communities."""

    node_ids: tuple[str, ...]
    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "node_ids", check_unique_ids(self.node_ids, "node ids"))
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (len(self.node_ids),):
            raise ValueError("labels must align with node_ids")
        object.__setattr__(self, "labels", labels)

    @property
    def assignment(self) -> dict[str, int]:
        return dict(zip(self.node_ids, self.labels.tolist()))

    @property
    def n_communities(self) -> int:
        return len(set(self.labels.tolist()))

    def sizes(self) -> Counter:
        return Counter(self.labels.tolist())

    def communities(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for node, label in zip(self.node_ids, self.labels.tolist()):
            out.setdefault(label, []).append(node)
        return out

    def canonicalize(self) -> "Partition":
        """Renumber communities 0..k-1 in order of first appearance."""
        remap: dict[int, int] = {}
        new = np.empty_like(self.labels)
        for idx, label in enumerate(self.labels.tolist()):
            if label not in remap:
                remap[label] = len(remap)
            new[idx] = remap[label]
        return Partition(self.node_ids, new)


def modularity(graph: SimilarityGraph, partition: Partition, resolution: float = 1.0) -> float:
    """Weighted modularity Q of a partition over the graph's nodes."""
    if partition.node_ids != graph.node_ids:
        raise ValueError("partition must cover exactly the graph's nodes")
    m = graph.total_weight
    if m == 0.0:
        raise ValueError("modularity is undefined for a graph with zero total weight")
    labels = partition.labels
    n_com = int(labels.max()) + 1 if labels.size else 0
    intra = np.zeros(n_com)
    degree = np.zeros(n_com)
    for i, j, w in zip(graph.edges_i, graph.edges_j, graph.weights):
        ci, cj = labels[i], labels[j]
        degree[ci] += w
        degree[cj] += w
        if ci == cj:
            intra[ci] += w
    return float(np.sum(intra / m - resolution * (degree / (2.0 * m)) ** 2))


def _aggregate(
    adj: list[dict[int, float]],
    self_w: np.ndarray,
    node_to_com: np.ndarray,
) -> tuple[list[dict[int, float]], np.ndarray, np.ndarray]:
    """Collapse communities into supernodes, keeping intra weight as self-loops."""
    coms = sorted(set(node_to_com.tolist()))
    renum = {c: k for k, c in enumerate(coms)}
    mapping = np.array([renum[c] for c in node_to_com], dtype=np.int64)
    n_new = len(coms)
    new_adj: list[dict[int, float]] = [dict() for _ in range(n_new)]
    new_self = np.zeros(n_new)
    for x in range(len(adj)):
        cx = int(mapping[x])
        new_self[cx] += self_w[x]
        for y, w in adj[x].items():
            if y <= x:
                continue
            cy = int(mapping[y])
            if cx == cy:
                new_self[cx] += w
            else:
                new_adj[cx][cy] = new_adj[cx].get(cy, 0.0) + w
                new_adj[cy][cx] = new_adj[cy].get(cx, 0.0) + w
    return new_adj, new_self, mapping


def _local_moves(
    adj: list[dict[int, float]],
    self_w: np.ndarray,
    order: np.ndarray,
    resolution: float,
) -> tuple[np.ndarray, bool]:
    """One level of greedy moves; returns (community per node, whether any node moved)."""
    n = len(adj)
    degree = np.array(
        [sum(adj[x].values()) + 2.0 * self_w[x] for x in range(n)], dtype=np.float64
    )
    m2 = float(degree.sum())
    node_to_com = np.arange(n, dtype=np.int64)
    com_tot = degree.copy()
    moved_any = False
    while True:
        moved_this_pass = False
        for x in order:
            cx = int(node_to_com[x])
            kx = degree[x]
            # weight from x to each adjacent community (self-loop excluded)
            k_x_in: dict[int, float] = {cx: 0.0}
            for y, w in adj[x].items():
                cy = int(node_to_com[y])
                k_x_in[cy] = k_x_in.get(cy, 0.0) + w
            com_tot[cx] -= kx
            stay_gain = k_x_in[cx] - resolution * com_tot[cx] * kx / m2
            best_gain = stay_gain
            best_com = cx
            for cy in sorted(k_x_in):
                if cy == cx:
                    continue
                gain = k_x_in[cy] - resolution * com_tot[cy] * kx / m2
                if gain > best_gain + _MIN_GAIN:
                    best_gain = gain
                    best_com = cy
            com_tot[best_com] += kx
            node_to_com[x] = best_com
            if best_com != cx:
                moved_this_pass = True
                moved_any = True
        if not moved_this_pass:
            break
    return node_to_com, moved_any


def louvain(
    graph: SimilarityGraph,
    seed: int = 0,
    resolution: float = 1.0,
) -> Partition:
    """Modularity-maximizing partition; identical (graph, seed) gives identical output.

    Local-move and aggregation phases repeat until no move yields a gain
    above 1e-9. Node visit order at each level is a permutation drawn from a
    generator seeded with ``seed``.
    """
    n = graph.n_nodes
    if n == 0:
        raise ValueError("graph has no nodes")
    labels = np.arange(n, dtype=np.int64)
    if graph.n_edges == 0:
        return Partition(graph.node_ids, labels)

    rng = np.random.default_rng(seed)
    adj: list[dict[int, float]] = [dict() for _ in range(n)]
    for i, j, w in zip(graph.edges_i, graph.edges_j, graph.weights):
        adj[int(i)][int(j)] = adj[int(i)].get(int(j), 0.0) + w
        adj[int(j)][int(i)] = adj[int(j)].get(int(i), 0.0) + w
    self_w = np.zeros(n)

    while True:
        order = rng.permutation(len(adj))
        node_to_com, moved = _local_moves(adj, self_w, order, resolution)
        if not moved:
            break
        adj, self_w, mapping = _aggregate(adj, self_w, node_to_com)
        labels = mapping[labels]
        if len(adj) == 1:
            break
    return Partition(graph.node_ids, labels).canonicalize()


def drop_small_clusters(
    partition: Partition, min_size: int = 26
) -> tuple[Partition, list[str]]:
    """Remove communities smaller than ``min_size``; their nodes become unclustered."""
    sizes = partition.sizes()
    keep_mask = np.array(
        [sizes[int(label)] >= min_size for label in partition.labels], dtype=bool
    )
    removed = [node for node, keep in zip(partition.node_ids, keep_mask) if not keep]
    kept_nodes = tuple(
        node for node, keep in zip(partition.node_ids, keep_mask) if keep
    )
    kept_labels = partition.labels[keep_mask]
    return Partition(kept_nodes, kept_labels).canonicalize(), removed


@dataclass(frozen=True)
class SweepRow:
    cutoff_pct: float
    cluster_count: int
    ari_vs_prev_cutoff: float | None


@dataclass(frozen=True)
class SweepReport:
    rows: tuple[SweepRow, ...]
    chosen_cutoff: float
    partitions: dict[float, Partition] = field(repr=False, compare=False, default_factory=dict)


def stability_sweep(
    sim: SimilarityMatrix,
    cutoffs: Sequence[float] = tuple(range(0, 100, 10)),
    seed: int = 0,
    resolution: float = 1.0,
) -> SweepReport:
    """Cluster at each cutoff and report the ARI between consecutive cutoffs.

    The chosen cutoff is the smallest one whose ARI against the previous
    cutoff is maximal; each cutoff clusters with seed ``seed + cutoff`` so
    the sweep can be distributed without changing results.
    """
    cutoffs = tuple(float(c) for c in cutoffs)
    if not cutoffs:
        raise ValueError("at least one cutoff is required")
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValueError("cutoffs must be strictly increasing")

    rows: list[SweepRow] = []
    partitions: dict[float, Partition] = {}
    prev: Partition | None = None
    for cutoff in cutoffs:
        graph = build_pruned_graph(sim, cutoff)
        part = louvain(graph, seed=seed + int(cutoff), resolution=resolution)
        ari = None
        if prev is not None:
            ari = adjusted_rand_index(prev.labels, part.labels)
        rows.append(SweepRow(cutoff, part.n_communities, ari))
        partitions[cutoff] = part
        prev = part

    scored = [r for r in rows if r.ari_vs_prev_cutoff is not None]
    if scored:
        best = max(r.ari_vs_prev_cutoff for r in scored)
        chosen = next(r.cutoff_pct for r in scored if r.ari_vs_prev_cutoff == best)
    else:
        chosen = rows[0].cutoff_pct
    return SweepReport(rows=tuple(rows), chosen_cutoff=chosen, partitions=partitions)


def write_partition_tsv(partition: Partition, stream: IO[str]) -> None:
    stream.write("node_id\tcommunity\n")
    for node, label in zip(partition.node_ids, partition.labels.tolist()):
        stream.write(f"{node}\t{label}\n")


def read_partition_tsv(stream: IO[str]) -> Partition:
    lines = [ln.rstrip("\r\n") for ln in stream if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != "node_id\tcommunity":
        raise ValueError("partition TSV must start with 'node_id<TAB>community'")
    nodes, labels = [], []
    for ln in lines[1:]:
        node, label = ln.split("\t")
        nodes.append(node)
        labels.append(int(label))
    return Partition(tuple(nodes), np.asarray(labels, dtype=np.int64))


def write_sweep_tsv(report: SweepReport, stream: IO[str]) -> None:
    stream.write("cutoff_pct\tcluster_count\tari_vs_prev_cutoff\n")
    for row in report.rows:
        ari = "-" if row.ari_vs_prev_cutoff is None else f"{row.ari_vs_prev_cutoff:.6f}"
        stream.write(f"{row.cutoff_pct:g}\t{row.cluster_count}\t{ari}\n")
    stream.write(f"# chosen_cutoff={report.chosen_cutoff:g}\n")


class LouvainCommunities(BaseEstimator, ClusterMixin):
    """Clusterer over precomputed normalized similarities.

    Parameters mirror the pipeline defaults: ``edge_drop_pct`` prunes that
    percentage of lowest-weight edges before community detection and
    ``min_community_size`` (when set) marks members of smaller communities
    as unclustered with label -1.
    """

    def __init__(
        self,
        edge_drop_pct: float = 0.0,
        resolution: float = 1.0,
        min_community_size: int | None = None,
        random_state: int = 0,
    ):
        self.edge_drop_pct = edge_drop_pct
        self.resolution = resolution
        self.min_community_size = min_community_size
        self.random_state = random_state

    def fit(self, X, y=None):
        if isinstance(X, SimilarityMatrix):
            sim = X
        else:
            X = np.asarray(X, dtype=np.float64)
            sim = SimilarityMatrix(
                ids=tuple(str(i) for i in range(X.shape[0])), values=X
            )
        graph = build_pruned_graph(sim, self.edge_drop_pct)
        partition = louvain(graph, seed=self.random_state, resolution=self.resolution)
        self.modularity_ = (
            modularity(graph, partition, self.resolution) if graph.n_edges else float("nan")
        )
        removed: list[str] = []
        if self.min_community_size is not None:
            partition, removed = drop_small_clusters(partition, self.min_community_size)
        labels = np.full(len(sim), -1, dtype=np.int64)
        kept_index = {node: k for k, node in enumerate(partition.node_ids)}
        for pos, node in enumerate(sim.ids):
            if node in kept_index:
                labels[pos] = partition.labels[kept_index[node]]
        self.labels_ = labels
        self.partition_ = partition
        self.unclustered_ids_ = tuple(removed)
        self.n_communities_ = partition.n_communities
        self.n_features_in_ = len(sim)
        return self
