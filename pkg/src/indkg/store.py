"""Indexed binary store for extracted subgraphs (magic ``IKGS1``).

File layout, all little-endian:

    magic "IKGS1"
    u64 record count
    u64 absolute byte offset per record (the offset table)
    records: varint-encoded payload followed by u32 CRC32 of the payload

A record holds k, the target triple, the node ids with their clamped
(d_h, d_t) pairs, the local edge list, and the k-hop union size used for
pruning statistics. Offsets give O(1) random access; the writer buffers
records and emits the whole file on close so the table can precede the data.
"""

from __future__ import annotations

import zlib

import numpy as np

from . import binio
from .errors import CorruptRecord, EmptyStore, IndexOutOfRange, MissingFile
from .subgraph import CorpusStats, Subgraph

MAGIC = b"IKGS1"


def encode_record(sub: Subgraph) -> bytes:
    buf = bytearray()
    binio.write_varint(buf, sub.k)
    for x in sub.target:
        binio.write_varint(buf, int(x))
    binio.write_varint(buf, sub.union_size)
    binio.write_varint(buf, sub.num_nodes)
    for g, (dh, dt) in zip(sub.nodes.tolist(), sub.dist_pairs.tolist()):
        binio.write_varint(buf, int(g))
        binio.write_varint(buf, int(dh))
        binio.write_varint(buf, int(dt))
    binio.write_varint(buf, len(sub.edges))
    for s, d, r in sub.edges.tolist():
        binio.write_varint(buf, int(s))
        binio.write_varint(buf, int(d))
        binio.write_varint(buf, int(r))
    payload = bytes(buf)
    crc = bytearray()
    binio.write_u32(crc, zlib.crc32(payload))
    return payload + bytes(crc)


def decode_record(data: bytes, index: int) -> Subgraph:
    if len(data) < 4:
        raise CorruptRecord(index)
    payload, stored = data[:-4], data[-4:]
    rd = binio.Reader(stored)
    if zlib.crc32(payload) != rd.read_u32():
        raise CorruptRecord(index)
    rd = binio.Reader(payload)
    k = rd.read_varint()
    target = (rd.read_varint(), rd.read_varint(), rd.read_varint())
    union_size = rd.read_varint()
    n = rd.read_varint()
    nodes = np.empty(n, dtype=np.int64)
    dist_pairs = np.empty((n, 2), dtype=np.int64)
    for i in range(n):
        nodes[i] = rd.read_varint()
        dist_pairs[i, 0] = rd.read_varint()
        dist_pairs[i, 1] = rd.read_varint()
    m = rd.read_varint()
    edges = np.empty((m, 3), dtype=np.int64)
    for i in range(m):
        edges[i, 0] = rd.read_varint()
        edges[i, 1] = rd.read_varint()
        edges[i, 2] = rd.read_varint()
    return Subgraph(target, nodes, dist_pairs, edges, k, union_size)


class StoreWriter:
    """Collects records and writes the finished store on close."""

    def __init__(self, path):
        self.path = path
        self._records: list[bytes] = []
        self._closed = False

    def write(self, sub: Subgraph) -> int:
        if self._closed:
            raise ValueError("writer already closed")
        self._records.append(encode_record(sub))
        return len(self._records) - 1

    @property
    def count(self) -> int:
        return len(self._records)

    def close(self) -> None:
        if self._closed:
            return
        header = bytearray(MAGIC)
        binio.write_u64(header, len(self._records))
        base = len(header) + 8 * len(self._records)
        offset = base
        for rec in self._records:
            binio.write_u64(header, offset)
            offset += len(rec)
        with open(self.path, "wb") as fh:
            fh.write(header)
            for rec in self._records:
                fh.write(rec)
        self._closed = True

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class StoreReader:
    """Random-access reader over a finalized store file."""

    def __init__(self, path):
        import os
        if not os.path.isfile(path):
            raise MissingFile(str(path))
        with open(path, "rb") as fh:
            self._data = fh.read()
        rd = binio.Reader(self._data)
        binio.check_magic(rd, MAGIC)
        self.count = rd.read_u64()
        self._offsets = [rd.read_u64() for _ in range(self.count)]
        self._end = len(self._data)

    def read(self, index: int) -> Subgraph:
        if not (0 <= index < self.count):
            raise IndexOutOfRange(f"record {index} outside [0, {self.count})")
        start = self._offsets[index]
        stop = self._offsets[index + 1] if index + 1 < self.count else self._end
        return decode_record(self._data[start:stop], index)

    def __len__(self) -> int:
        return self.count

    def __iter__(self):
        for i in range(self.count):
            yield self.read(i)


def collect_stats(store: StoreReader) -> CorpusStats:
    """Exact aggregates over every record in the store."""
    if store.count == 0:
        raise EmptyStore("cannot aggregate over an empty store")
    n_nodes, n_edges, pruning = [], [], []
    empty = 0
    for sub in store:
        n_nodes.append(sub.num_nodes)
        n_edges.append(len(sub.edges))
        if len(sub.edges) == 0:
            empty += 1
        if sub.union_size > 0:
            pruning.append(1.0 - sub.num_nodes / sub.union_size)
    return CorpusStats(
        count=store.count,
        max_nodes=int(max(n_nodes)),
        mean_nodes=float(np.mean(n_nodes)),
        max_edges=int(max(n_edges)),
        mean_edges=float(np.mean(n_edges)),
        pruning_ratio=float(np.mean(pruning)) if pruning else 0.0,
        empty_count=empty,
    )
