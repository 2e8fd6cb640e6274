"""BWT inversion: recover the original reads by backward LF-stepping.

Row i of the sorted-suffix order (for i < m) is the 0-suffix of read i+1, so
each read is recovered by walking from row i until a sentinel is read,
accumulating characters right to left.
"""

from __future__ import annotations

import numpy as np

from .model import ModelError, RANK_TABLE, ReadCollection, SENTINEL, SYMBOLS, validate_bwt


class InversionError(ValueError):
    """The byte string is not the BWT of any read collection."""


class OccTable:
    """C array plus checkpointed occurrence counts over a BWT string.

    occ(c, i) counts symbol c in bwt[0, i). Checkpoints every `stride`
    positions keep queries O(stride) worst case with O(n/stride) extra space.
    """

    def __init__(self, bwt: bytes, stride: int = 1 << 16):
        self.bwt = bwt
        self.stride = stride
        ranks = RANK_TABLE_NP[np.frombuffer(bwt, dtype=np.uint8)]
        if (ranks < 0).any():
            off = int(np.argmax(ranks < 0))
            raise ModelError(f"byte {chr(bwt[off])!r} at offset {off} outside alphabet")
        self._ranks = ranks.astype(np.uint8)
        n = len(bwt)
        n_ckpt = n // stride + 1
        self._ckpt = np.zeros((n_ckpt, len(SYMBOLS)), dtype=np.int64)
        totals = np.zeros(len(SYMBOLS), dtype=np.int64)
        for i in range(1, n_ckpt):
            block = self._ranks[(i - 1) * stride:i * stride]
            totals += np.bincount(block, minlength=len(SYMBOLS))
            self._ckpt[i] = totals
        tail = self._ranks[(n_ckpt - 1) * stride:]
        self.counts = self._ckpt[-1] + np.bincount(tail, minlength=len(SYMBOLS))
        # C[r]: number of symbols with rank < r
        self.C = np.zeros(len(SYMBOLS) + 1, dtype=np.int64)
        np.cumsum(self.counts, out=self.C[1:])

    def occ(self, rank: int, i: int) -> int:
        ck = i // self.stride
        base = int(self._ckpt[ck, rank])
        block = self._ranks[ck * self.stride:i]
        return base + int(np.count_nonzero(block == rank))


def lf_map(bwt: bytes | OccTable, i: int) -> int:
    """Map BWT position i to the row of its symbol in sorted-suffix order.

    Sentinel occurrences map to the first m rows in occurrence order.
    """
    table = bwt if isinstance(bwt, OccTable) else OccTable(bwt)
    if not 0 <= i < len(table.bwt):
        raise InversionError(f"position {i} out of range [0, {len(table.bwt)})")
    r = RANK_TABLE[table.bwt[i]]
    if r == 0:
        return table.occ(0, i)
    return int(table.C[r]) + table.occ(r, i)


def invert_bwt(bwt: bytes) -> ReadCollection:
    """Reconstruct the read collection whose BWT is the given string."""
    m = bwt.count(SENTINEL)
    violation = validate_bwt(bwt, m)
    if violation is not None:
        raise InversionError(f"invalid BWT at offset {violation.offset}: {violation.message}")
    if m == 0:
        raise InversionError("no sentinels: not a collection BWT")
    table = OccTable(bwt)
    cap = len(bwt) - m + 1  # any read walk is at most total_length steps
    reads = []
    for idx in range(m):
        row = idx
        chunk = bytearray()
        steps = 0
        while True:
            c = bwt[row]
            if c == SENTINEL:
                break
            chunk.append(c)
            steps += 1
            if steps > cap:
                raise InversionError(
                    f"read {idx + 1}: LF walk exceeded {cap} steps; input is not a valid collection BWT"
                )
            row = lf_map(table, row)
        if not chunk:
            raise InversionError(f"read {idx + 1}: empty read recovered; invalid BWT")
        chunk.reverse()
        reads.append(bytes(chunk))
    recovered = sum(len(r) for r in reads)
    if recovered != len(bwt) - m:
        raise InversionError(
            f"LF walks covered {recovered} of {len(bwt) - m} symbols; input is not a valid collection BWT"
        )
    return ReadCollection(tuple(reads))


def write_fasta(stream, collection: ReadCollection) -> None:
    """FASTA output with `>read_<i>` headers in collection order."""
    for i, read in enumerate(collection.reads, 1):
        stream.write(f">read_{i}\n".encode())
        stream.write(read + b"\n")


RANK_TABLE_NP = np.array(RANK_TABLE, dtype=np.int8)
