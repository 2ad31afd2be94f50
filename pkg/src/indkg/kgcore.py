"""Dataset ingestion: raw triple files -> indexed graphs and a persisted bundle.

The on-disk layout follows the standard inductive benchmark convention:

    <root>/train/{train.txt,valid.txt,test.txt}   triples over training entities
    <root>/ind/{train.txt,test.txt[,valid.txt]}   support / query triples over
                                                  a disjoint entity set

Files are UTF-8 TSV ``head<TAB>relation<TAB>tail``. The processed bundle is a
single versioned binary file (magic ``IKGD1``); see persist_dataset for the
exact layout.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from . import binio
from .errors import (
    EntityOverlap,
    DuplicateTriple,
    IdOutOfBounds,
    MalformedLine,
    MissingFile,
    UnknownEntity,
    UnknownRelation,
)

log = logging.getLogger(__name__)

MAGIC = b"IKGD1"


def load_triples(path) -> list[tuple[str, str, str]]:
    """Read a TSV triple file. Fields beyond the third are ignored."""
    if not os.path.isfile(path):
        raise MissingFile(str(path))
    triples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) < 3:
                raise MalformedLine(path, line_no)
            h, r, t = (p.strip() for p in parts[:3])
            if not (h and r and t):
                raise MalformedLine(path, line_no)
            triples.append((h, r, t))
    return triples


@dataclass
class Vocab:
    entity2id: dict[str, int]
    relation2id: dict[str, int]
    id2entity: list[str] = field(default_factory=list)
    id2relation: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.id2entity:
            self.id2entity = [None] * len(self.entity2id)
            for label, i in self.entity2id.items():
                self.id2entity[i] = label
        if not self.id2relation:
            self.id2relation = [None] * len(self.relation2id)
            for label, i in self.relation2id.items():
                self.id2relation[i] = label

    @property
    def num_entities(self) -> int:
        return len(self.entity2id)

    @property
    def num_relations(self) -> int:
        return len(self.relation2id)


def build_vocab(train, valid=(), test=(), support=(), query=()) -> Vocab:
    """Assign dense ids by first appearance.

    Entities are numbered across (train, valid, test, support, query) in that
    order, so inductive entities receive fresh ids after the training ones.
    Relations are numbered from the training split only; a relation seen in
    support/query but not in train is a hard error.
    """
    if not train:
        raise ValueError("at least one training triple required")
    entity2id: dict[str, int] = {}
    relation2id: dict[str, int] = {}
    for h, r, t in train:
        if h not in entity2id:
            entity2id[h] = len(entity2id)
        if t not in entity2id:
            entity2id[t] = len(entity2id)
        if r not in relation2id:
            relation2id[r] = len(relation2id)
    for split in (valid, test, support, query):
        for h, r, t in split:
            if r not in relation2id:
                raise UnknownRelation(r)
            if h not in entity2id:
                entity2id[h] = len(entity2id)
            if t not in entity2id:
                entity2id[t] = len(entity2id)
    return Vocab(entity2id, relation2id)


def encode_triples(raw, vocab: Vocab) -> np.ndarray:
    """Map labelled triples to an (n, 3) int64 id array, preserving order."""
    out = np.empty((len(raw), 3), dtype=np.int64)
    for i, (h, r, t) in enumerate(raw):
        if h not in vocab.entity2id:
            raise UnknownEntity(h)
        if t not in vocab.entity2id:
            raise UnknownEntity(t)
        if r not in vocab.relation2id:
            raise UnknownRelation(r)
        out[i, 0] = vocab.entity2id[h]
        out[i, 1] = vocab.relation2id[r]
        out[i, 2] = vocab.entity2id[t]
    return out


class IndexedGraph:
    """Immutable adjacency over integer-id triples.

    Out- and in-edges are held in CSR form sorted by (neighbor, relation);
    an undirected CSR combining both directions backs distance queries.
    ``triple_set`` answers membership for *all* triples the graph is meant to
    know about (used for filtered negative sampling), which may be a superset
    of the edges present in the adjacency.
    """

    def __init__(self, triples: np.ndarray, num_entities: int, num_relations: int,
                 known_triples: np.ndarray | None = None):
        triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        if len(triples):
            if triples[:, [0, 2]].min() < 0 or triples[:, [0, 2]].max() >= num_entities:
                raise IdOutOfBounds("entity id outside [0, num_entities)")
            if triples[:, 1].min() < 0 or triples[:, 1].max() >= num_relations:
                raise IdOutOfBounds("relation id outside [0, num_relations)")
        self.num_entities = num_entities
        self.num_relations = num_relations
        # collapse exact duplicates; canonical edge order
        self.triples = np.unique(triples, axis=0) if len(triples) else triples

        h, r, t = self.triples[:, 0], self.triples[:, 1], self.triples[:, 2]
        self._out_indptr, self._out_nbr, self._out_rel = _build_csr(
            h, t, r, num_entities)
        self._in_indptr, self._in_nbr, self._in_rel = _build_csr(
            t, h, r, num_entities)
        # undirected view: each triple contributes (h -> t, fwd) and (t -> h, bwd)
        src = np.concatenate([h, t])
        dst = np.concatenate([t, h])
        rel = np.concatenate([r, r])
        fwd = np.concatenate([np.ones(len(h), bool), np.zeros(len(h), bool)])
        self._und_indptr, self._und_nbr, self._und_rel, self._und_fwd = _build_csr(
            src, dst, rel, num_entities, extra=fwd)

        known = self.triples if known_triples is None else known_triples
        self.triple_set = frozenset(map(tuple, np.asarray(known, dtype=np.int64).reshape(-1, 3)))

    @property
    def num_triples(self) -> int:
        return len(self.triples)

    def contains(self, h: int, r: int, t: int) -> bool:
        return (h, r, t) in self.triple_set

    def out_edges(self, e: int):
        """(neighbor, relation) pairs for edges e -> neighbor."""
        s, p = self._out_indptr[e], self._out_indptr[e + 1]
        return self._out_nbr[s:p], self._out_rel[s:p]

    def in_edges(self, e: int):
        """(neighbor, relation) pairs for edges neighbor -> e."""
        s, p = self._in_indptr[e], self._in_indptr[e + 1]
        return self._in_nbr[s:p], self._in_rel[s:p]

    def und_edges(self, e: int):
        """(neighbor, relation, is_forward) over both edge directions."""
        s, p = self._und_indptr[e], self._und_indptr[e + 1]
        return self._und_nbr[s:p], self._und_rel[s:p], self._und_fwd[s:p]


def _build_csr(src, dst, rel, n, extra=None):
    order = np.lexsort((rel, dst, src))
    src, dst, rel = src[order], dst[order], rel[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    if extra is not None:
        return indptr, dst, rel, extra[order]
    return indptr, dst, rel


def build_graph(triples, num_entities: int, num_relations: int,
                known_triples=None) -> IndexedGraph:
    return IndexedGraph(np.asarray(triples, dtype=np.int64).reshape(-1, 3),
                        num_entities, num_relations, known_triples)


@dataclass
class DatasetBundle:
    vocab: Vocab
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray
    support: np.ndarray
    query: np.ndarray
    ind_valid: np.ndarray  # optional split; empty when absent on disk
    train_graph: IndexedGraph = None
    ind_graph: IndexedGraph = None

    def __post_init__(self):
        ne, nr = self.vocab.num_entities, self.vocab.num_relations
        if self.train_graph is None:
            known = np.vstack([self.train, self.valid, self.test])
            self.train_graph = build_graph(self.train, ne, nr, known_triples=known)
        if self.ind_graph is None:
            known = np.vstack([self.support, self.ind_valid, self.query])
            self.ind_graph = build_graph(self.support, ne, nr, known_triples=known)

    def splits(self):
        return {"train": self.train, "valid": self.valid, "test": self.test,
                "support": self.support, "ind_valid": self.ind_valid,
                "query": self.query}


def _check_duplicates(name, triples):
    arr = np.asarray(triples)
    if len(arr) == 0:
        return arr
    uniq, counts = np.unique(arr, axis=0, return_counts=True)
    if (counts > 1).any():
        log.warning("%s: dropped %d duplicate triple(s)", name, int((counts > 1).sum()))
    return uniq


def _check_cross_split(train, other, other_name):
    if len(other) == 0:
        return
    train_set = set(map(tuple, np.asarray(train)))
    dups = [t for t in map(tuple, np.asarray(other)) if t in train_set]
    if dups:
        raise DuplicateTriple(
            f"{len(dups)} triple(s) of split {other_name!r} also occur in train, "
            f"e.g. {dups[0]}")


def load_raw_dataset(root) -> DatasetBundle:
    """Build a DatasetBundle from the on-disk TSV layout under ``root``."""
    train_raw = load_triples(os.path.join(root, "train", "train.txt"))
    valid_raw = load_triples(os.path.join(root, "train", "valid.txt"))
    test_raw = load_triples(os.path.join(root, "train", "test.txt"))
    support_raw = load_triples(os.path.join(root, "ind", "train.txt"))
    query_raw = load_triples(os.path.join(root, "ind", "test.txt"))
    ind_valid_path = os.path.join(root, "ind", "valid.txt")
    ind_valid_raw = load_triples(ind_valid_path) if os.path.isfile(ind_valid_path) else []

    train_ents = {x for h, _, t in train_raw for x in (h, t)}
    ind_ents = {x for h, _, t in support_raw + query_raw for x in (h, t)}
    overlap = train_ents & ind_ents
    if overlap:
        raise EntityOverlap(overlap)

    vocab = build_vocab(train_raw, valid_raw, test_raw,
                        support_raw + ind_valid_raw, query_raw)
    train = _check_duplicates("train", encode_triples(train_raw, vocab))
    valid = _check_duplicates("valid", encode_triples(valid_raw, vocab))
    test = _check_duplicates("test", encode_triples(test_raw, vocab))
    support = _check_duplicates("support", encode_triples(support_raw, vocab))
    query = _check_duplicates("query", encode_triples(query_raw, vocab))
    ind_valid = _check_duplicates("ind_valid", encode_triples(ind_valid_raw, vocab))
    _check_cross_split(train, valid, "valid")
    _check_cross_split(train, test, "test")
    return DatasetBundle(vocab, train, valid, test, support, query, ind_valid)


def _empty_triples():
    return np.empty((0, 3), dtype=np.int64)


def _write_triple_block(buf, triples):
    binio.write_varint(buf, len(triples))
    for h, r, t in np.asarray(triples, dtype=np.int64):
        binio.write_varint(buf, int(h))
        binio.write_varint(buf, int(r))
        binio.write_varint(buf, int(t))


def _read_triple_block(rd):
    n = rd.read_varint()
    out = np.empty((n, 3), dtype=np.int64)
    for i in range(n):
        out[i, 0] = rd.read_varint()
        out[i, 1] = rd.read_varint()
        out[i, 2] = rd.read_varint()
    return out


def serialize_dataset(bundle: DatasetBundle) -> bytes:
    """Encode a bundle into the IKGD1 byte layout.

    Layout: magic, varint entity count + labels, varint relation count +
    labels, then six triple blocks (train, valid, test, support, query,
    ind_valid), each a varint count followed by (h, r, t) varints.
    """
    buf = bytearray(MAGIC)
    binio.write_varint(buf, bundle.vocab.num_entities)
    for label in bundle.vocab.id2entity:
        binio.write_string(buf, label)
    binio.write_varint(buf, bundle.vocab.num_relations)
    for label in bundle.vocab.id2relation:
        binio.write_string(buf, label)
    for split in (bundle.train, bundle.valid, bundle.test,
                  bundle.support, bundle.query, bundle.ind_valid):
        _write_triple_block(buf, split)
    return bytes(buf)


def deserialize_dataset(data: bytes) -> DatasetBundle:
    rd = binio.Reader(data)
    binio.check_magic(rd, MAGIC)
    ne = rd.read_varint()
    id2entity = [rd.read_string() for _ in range(ne)]
    nr = rd.read_varint()
    id2relation = [rd.read_string() for _ in range(nr)]
    vocab = Vocab({s: i for i, s in enumerate(id2entity)},
                  {s: i for i, s in enumerate(id2relation)},
                  id2entity, id2relation)
    blocks = [_read_triple_block(rd) for _ in range(6)]
    return DatasetBundle(vocab, *blocks)


def persist_dataset(bundle: DatasetBundle, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_dataset(bundle))


def load_dataset(path) -> DatasetBundle:
    if not os.path.isfile(path):
        raise MissingFile(str(path))
    with open(path, "rb") as fh:
        return deserialize_dataset(fh.read())
