"""Negative sampling and batch assembly for training and evaluation.

All constructors are pure functions of (inputs, rng state); parallel callers
should derive one RNG stream per item, e.g. ``np.random.default_rng((seed,
item_index))``, so results are independent of worker scheduling.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, ExhaustedRetries
from .kgcore import IndexedGraph
from .subgraph import Subgraph, extract_enclosing_subgraph, label_nodes

log = logging.getLogger(__name__)

RETRY_CAP = 1000


@dataclass(frozen=True)
class NegativeSpec:
    mode: str = "both-uniform"    # "corrupt-head" | "corrupt-tail" | "both-uniform"
    num_neg: int = 1
    filtered: bool = True

    def __post_init__(self):
        if self.num_neg < 1:
            raise ValueError("num_neg must be >= 1")
        if self.mode not in ("corrupt-head", "corrupt-tail", "both-uniform"):
            raise ValueError(f"unknown corruption mode {self.mode!r}")


def corrupt_triple(triple, graph: IndexedGraph, mode: str, rng,
                   filtered: bool = True):
    """Replace the head or tail with a uniformly drawn entity.

    Rejection-samples until the corruption differs from the input and, when
    filtered, is absent from the graph's known-triple set.
    """
    h, r, t = (int(x) for x in triple)
    if graph.num_entities == 0:
        raise EmptyInput("graph has no entities")
    for _ in range(RETRY_CAP):
        side = mode
        if mode == "both-uniform":
            side = "corrupt-head" if rng.random() < 0.5 else "corrupt-tail"
        e = int(rng.integers(graph.num_entities))
        cand = (e, r, t) if side == "corrupt-head" else (h, r, e)
        if cand == (h, r, t):
            continue
        if filtered and graph.contains(*cand):
            continue
        return cand
    raise ExhaustedRetries(
        f"no valid corruption of {(h, r, t)} found in {RETRY_CAP} draws")


@dataclass
class ScoredItem:
    sub: Subgraph
    labels: np.ndarray
    rel: int


@dataclass
class TrainInstance:
    pos: ScoredItem
    negs: list[ScoredItem]


def _item(graph, triple, k, max_nodes=None) -> ScoredItem:
    sub = extract_enclosing_subgraph(graph, triple, k, max_nodes=max_nodes)
    return ScoredItem(sub, label_nodes(sub), int(triple[1]))


def make_train_instance(graph: IndexedGraph, triple, k: int,
                        spec: NegativeSpec, rng, max_nodes=None) -> TrainInstance:
    """Positive enclosing subgraph plus ``spec.num_neg`` corrupted ones."""
    pos = _item(graph, tuple(int(x) for x in triple), k, max_nodes)
    negs = []
    for _ in range(spec.num_neg):
        neg_triple = corrupt_triple(triple, graph, spec.mode, rng, spec.filtered)
        negs.append(_item(graph, neg_triple, k, max_nodes))
    return TrainInstance(pos, negs)


@dataclass
class ClassificationBatch:
    items: list[ScoredItem]
    labels01: np.ndarray


def make_classification_batch(graph: IndexedGraph, triples, k: int, rng,
                              max_nodes=None) -> ClassificationBatch:
    """One uniform head-or-tail corruption per positive.

    Items are ordered all positives then all negatives, with binary labels
    to match.
    """
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    if len(triples) == 0:
        raise EmptyInput("no triples to classify")
    items = [_item(graph, tuple(t), k, max_nodes) for t in triples.tolist()]
    for t in triples.tolist():
        neg = corrupt_triple(t, graph, "both-uniform", rng, filtered=True)
        items.append(_item(graph, neg, k, max_nodes))
    labels01 = np.concatenate([np.ones(len(triples), np.int64),
                               np.zeros(len(triples), np.int64)])
    return ClassificationBatch(items, labels01)


@dataclass
class RankingBatch:
    direction: str                # "head" | "tail"
    candidates: list[ScoredItem]
    truth_idx: int


def _corruption_pool(graph, triple, direction, filtered):
    h, r, t = triple
    pool = []
    for e in range(graph.num_entities):
        cand = (e, r, t) if direction == "head" else (h, r, e)
        if cand == triple:
            continue
        if filtered and graph.contains(*cand):
            continue
        pool.append(cand)
    return pool


def make_ranking_candidates(graph: IndexedGraph, triple, direction: str,
                            num_neg: int, rng):
    """Candidate triples for one ranking query: (triples, truth_idx).

    Negatives are drawn without replacement from the filtered corruption
    pool; if the pool is too small the unfiltered pool is used with a
    warning, and if even that is too small every available corruption is
    taken. The truth is planted at a uniformly random position.
    """
    if direction not in ("head", "tail"):
        raise ValueError(f"unknown ranking direction {direction!r}")
    triple = tuple(int(x) for x in triple)
    pool = _corruption_pool(graph, triple, direction, filtered=True)
    if len(pool) < num_neg:
        unfiltered = _corruption_pool(graph, triple, direction, filtered=False)
        if not unfiltered:
            raise ExhaustedRetries(f"no corruption of {triple} exists")
        log.warning("only %d filtered negatives for %s (%s side); "
                    "falling back to unfiltered pool of %d",
                    len(pool), triple, direction, len(unfiltered))
        pool = unfiltered
    chosen = [pool[i] for i in rng.choice(len(pool),
                                          size=min(num_neg, len(pool)),
                                          replace=False)]
    truth_idx = int(rng.integers(len(chosen) + 1))
    return chosen[:truth_idx] + [triple] + chosen[truth_idx:], truth_idx


def make_ranking_batch(graph: IndexedGraph, triple, k: int, direction: str,
                       num_neg: int, rng, max_nodes=None) -> RankingBatch:
    """Ranking candidates with their enclosing subgraphs extracted."""
    cands, truth_idx = make_ranking_candidates(graph, triple, direction,
                                               num_neg, rng)
    candidates = [_item(graph, c, k, max_nodes) for c in cands]
    return RankingBatch(direction, candidates, truth_idx)


@dataclass
class MetaTask:
    """A sampled training-graph region split into support and query triples."""
    nodes: np.ndarray
    support: np.ndarray
    query: np.ndarray

    @property
    def num_triples(self) -> int:
        return len(self.support) + len(self.query)


def _grow_region(graph: IndexedGraph, start: int, region_size: int):
    """BFS from start, collecting triples among visited nodes until enough."""
    visited = {start}
    frontier = [start]
    triples = set()
    while frontier and len(triples) < region_size:
        nxt = []
        for u in frontier:
            nbrs, rels = graph.out_edges(u)
            for v, r in zip(nbrs.tolist(), rels.tolist()):
                triples.add((u, r, v))
                if v not in visited:
                    visited.add(v)
                    nxt.append(v)
            nbrs, rels = graph.in_edges(u)
            for v, r in zip(nbrs.tolist(), rels.tolist()):
                triples.add((v, r, u))
                if v not in visited:
                    visited.add(v)
                    nxt.append(v)
            if len(triples) >= region_size:
                break
        frontier = nxt
    return visited, sorted(triples)


def sample_meta_task(graph: IndexedGraph, region_size: int, support_frac: float,
                     rng, max_attempts: int = 100) -> MetaTask:
    """Sample a region and split its triples into support and query.

    Query triples whose entities are missing from the support set are moved
    into support; a task whose query would become empty is rejected and
    resampled.
    """
    if region_size < 2:
        raise ValueError("region_size must be >= 2 triples")
    if not 0.0 < support_frac < 1.0:
        raise ValueError("support_frac must be in (0, 1)")
    for _ in range(max_attempts):
        start = int(rng.integers(graph.num_entities))
        visited, triples = _grow_region(graph, start, region_size)
        if len(triples) < region_size:
            continue
        order = rng.permutation(len(triples))
        cut = int(round(support_frac * len(triples)))
        if cut == 0 or cut == len(triples):
            continue
        support = [triples[i] for i in order[:cut]]
        query = [triples[i] for i in order[cut:]]
        while True:
            support_ents = {e for h, _, t in support for e in (h, t)}
            bad = [q for q in query
                   if q[0] not in support_ents or q[2] not in support_ents]
            if not bad:
                break
            support.extend(bad)
            query = [q for q in query if q not in bad]
        if not query:
            continue
        return MetaTask(np.asarray(sorted(visited), dtype=np.int64),
                        np.asarray(support, dtype=np.int64),
                        np.asarray(query, dtype=np.int64))
    raise ExhaustedRetries(
        f"no valid meta-task found in {max_attempts} attempts")
