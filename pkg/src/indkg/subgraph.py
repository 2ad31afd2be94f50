"""Enclosing-subgraph extraction and distance-based node labelling.

A candidate pair (h, t) is summarized by the subgraph of nodes lying on a
short undirected path between them: node i is kept when d(i,h) <= k,
d(i,t) <= k and d(i,h) + d(i,t) <= k + 1, with both distances computed in
the graph with the target edge removed. Node features are the concatenated
one-hot encodings of the two distances, clamped into k + 2 buckets per side.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import IdOutOfBounds
from .kgcore import IndexedGraph


@dataclass
class Subgraph:
    target: tuple[int, int, int]          # (h, r, t) in global ids
    nodes: np.ndarray                     # global ids; h at local 0, t at local 1
    dist_pairs: np.ndarray                # (n, 2) clamped distances (d_h, d_t)
    edges: np.ndarray                     # (m, 3) local (src, dst, rel); target edge excluded
    k: int
    union_size: int = 0                   # |k-hop neighborhood of h or t|, for pruning stats

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def head_local(self) -> int:
        return 0

    @property
    def tail_local(self) -> int:
        return 0 if self.target[0] == self.target[2] else 1

    def __eq__(self, other):
        return (isinstance(other, Subgraph)
                and self.target == other.target
                and self.k == other.k
                and self.union_size == other.union_size
                and np.array_equal(self.nodes, other.nodes)
                and np.array_equal(self.dist_pairs, other.dist_pairs)
                and np.array_equal(self.edges, other.edges))


def bfs_distances(graph: IndexedGraph, source: int, k: int,
                  masked_edge: tuple[int, int, int] | None = None) -> dict[int, int]:
    """Undirected hop distances from ``source``, truncated at ``k`` hops.

    Every triple acts as a bidirectional edge; ``masked_edge`` suppresses
    that one triple in both traversal directions.
    """
    if not (0 <= source < graph.num_entities):
        raise IdOutOfBounds(f"source {source} outside [0, {graph.num_entities})")
    if k < 1:
        raise ValueError("hop budget k must be >= 1")
    mh = mr = mt = -1
    if masked_edge is not None:
        mh, mr, mt = masked_edge
    dist = {source: 0}
    frontier = deque([source])
    while frontier:
        u = frontier.popleft()
        du = dist[u]
        if du == k:
            continue
        nbrs, rels, fwds = graph.und_edges(u)
        for v, r, fwd in zip(nbrs.tolist(), rels.tolist(), fwds.tolist()):
            if masked_edge is not None and r == mr:
                if (fwd and u == mh and v == mt) or (not fwd and u == mt and v == mh):
                    continue
            if v not in dist:
                dist[v] = du + 1
                frontier.append(v)
    return dist


def extract_enclosing_subgraph(graph: IndexedGraph, target: tuple[int, int, int],
                               k: int, max_nodes: int | None = None) -> Subgraph:
    """Extract the enclosing subgraph of the target triple.

    Distances are computed with the target edge masked; the target edge is
    likewise excluded from the edge list so it never leaks into message
    passing. When ``max_nodes`` is set, interior nodes are retained in
    ascending (d_h + d_t, id) order until the cap is met.
    """
    h, r, t = (int(x) for x in target)
    for e in (h, t):
        if not (0 <= e < graph.num_entities):
            raise IdOutOfBounds(f"entity {e} outside [0, {graph.num_entities})")
    cap = k + 1
    d_h = bfs_distances(graph, h, k, masked_edge=(h, r, t))
    d_t = bfs_distances(graph, t, k, masked_edge=(h, r, t))
    union_size = len(set(d_h) | set(d_t))

    interior = [i for i in d_h
                if i != h and i != t and i in d_t and d_h[i] + d_t[i] <= k + 1]
    interior.sort()
    if max_nodes is not None and len(interior) + 2 > max_nodes:
        interior.sort(key=lambda i: (d_h[i] + d_t[i], i))
        interior = sorted(interior[:max(0, max_nodes - 2)])

    nodes = [h] if h == t else [h, t]
    nodes.extend(interior)
    nodes_arr = np.asarray(nodes, dtype=np.int64)
    dist_pairs = np.empty((len(nodes), 2), dtype=np.int64)
    for li, g in enumerate(nodes):
        dist_pairs[li, 0] = min(d_h.get(g, cap), cap)
        dist_pairs[li, 1] = min(d_t.get(g, cap), cap)

    local = {g: li for li, g in enumerate(nodes)}
    edges = []
    for g in nodes:
        nbrs, rels = graph.out_edges(g)
        for v, rel in zip(nbrs.tolist(), rels.tolist()):
            if v in local and not (g == h and v == t and rel == r):
                edges.append((local[g], local[v], rel))
    edges_arr = (np.asarray(sorted(set(edges)), dtype=np.int64).reshape(-1, 3)
                 if edges else np.empty((0, 3), dtype=np.int64))
    return Subgraph((h, r, t), nodes_arr, dist_pairs, edges_arr, k, union_size)


def label_nodes(sub: Subgraph) -> np.ndarray:
    """Per-node feature matrix of shape (n, 2*(k+2)).

    Row i is onehot(d_h) concatenated with onehot(d_t), each one-hot of
    width k + 2 (buckets 0..k plus an unreachable/overflow bucket).
    """
    width = sub.k + 2
    labels = np.zeros((sub.num_nodes, 2 * width), dtype=np.float64)
    d = np.clip(sub.dist_pairs, 0, width - 1)
    rows = np.arange(sub.num_nodes)
    labels[rows, d[:, 0]] = 1.0
    labels[rows, width + d[:, 1]] = 1.0
    return labels


@dataclass
class CorpusStats:
    count: int
    max_nodes: int
    mean_nodes: float
    max_edges: int
    mean_edges: float
    pruning_ratio: float
    empty_count: int

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "max_nodes": self.max_nodes,
            "mean_nodes": self.mean_nodes,
            "max_edges": self.max_edges,
            "mean_edges": self.mean_edges,
            "pruning_ratio": self.pruning_ratio,
            "empty_count": self.empty_count,
        }
