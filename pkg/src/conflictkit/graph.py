"""Pruned similarity graphs built from pairwise similarity matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .embeddings import SimilarityMatrix


@dataclass(frozen=True)
class SimilarityGraph:
    """Undirected weighted graph; edges stored once as (i, j, w) with i < j."""

    node_ids: tuple[str, ...]
    edges_i: np.ndarray
    edges_j: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        i = np.asarray(self.edges_i, dtype=np.int64)
        j = np.asarray(self.edges_j, dtype=np.int64)
        w = np.asarray(self.weights, dtype=np.float64)
        if not (i.shape == j.shape == w.shape) or i.ndim != 1:
            raise ValueError("edge arrays must be parallel 1-d arrays")
        n = len(self.node_ids)
        if i.size:
            if i.min() < 0 or j.max() >= n:
                raise ValueError("edge endpoint out of range")
            if not (i < j).all():
                raise ValueError("edges must satisfy i < j (no self-loops)")
            if not np.isfinite(w).all() or w.min() < 0.0 or w.max() > 1.0:
                raise ValueError("edge weights must be finite and in [0, 1]")
            pair_keys = i * n + j
            if np.unique(pair_keys).size != pair_keys.size:
                raise ValueError("duplicate edge for an unordered pair")
        object.__setattr__(self, "edges_i", i)
        object.__setattr__(self, "edges_j", j)
        object.__setattr__(self, "weights", w)

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return int(self.edges_i.size)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def iter_edges(self) -> Iterator[tuple[int, int, float]]:
        for i, j, w in zip(self.edges_i, self.edges_j, self.weights):
            yield int(i), int(j), float(w)


def _edge_drop_count(cutoff_pct: float, n_edges: int) -> int:
    if float(cutoff_pct).is_integer():
        return int(cutoff_pct) * n_edges // 100
    return int(math.floor(cutoff_pct * n_edges / 100.0))


def build_pruned_graph(sim: SimilarityMatrix, cutoff_pct: float) -> SimilarityGraph:
    """Drop the ``floor(cutoff_pct% of E)`` lowest-weight edges of the complete graph.

    Ties at the threshold are broken by ascending (i, j) pair order so the
    result is deterministic. ``cutoff_pct`` must lie in [0, 100).
    """
    if not 0.0 <= cutoff_pct < 100.0:
        raise ValueError(f"cutoff_pct must be in [0, 100), got {cutoff_pct}")
    n = len(sim)
    iu, ju = np.triu_indices(n, k=1)
    weights = sim.values[iu, ju]
    drop = _edge_drop_count(cutoff_pct, weights.size)
    # primary key weight, then i, then j: equal-weight edges drop in pair order
    order = np.lexsort((ju, iu, weights))
    kept = np.sort(order[drop:])
    return SimilarityGraph(
        node_ids=sim.ids,
        edges_i=iu[kept],
        edges_j=ju[kept],
        weights=weights[kept],
    )
