"""Staged construction of the collection BWT and SAP-array.

The build runs one stage per suffix length. Stage j inserts, for every read
still active, the symbol preceding its j-suffix into one of sigma+1 partial
BWT segments held on disk, scanning each segment strictly sequentially and
writing the next parity's files. SAP bits for the (j+1)-suffixes are computed
during the same scan with one counter per symbol (A) plus a generic
interval counter (Z): the bit is 1 exactly when the previous occurrence of the
inserted symbol lies in the same SAP-interval as the insertion point.

Per-read resident state is a handful of numpy scalars (cursor position,
target segment, next symbol, pending SAP bit); segment data is never held
in RAM beyond one chunk.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .model import (
    RANK_TABLE,
    SAP_MAGIC,
    SENTINEL,
    SIGMA,
    SYMBOLS,
    ModelError,
    ReadCollection,
)

_NSEG = SIGMA + 1

_RANK_LUT = np.full(256, -1, dtype=np.int8)
for _i, _c in enumerate(SYMBOLS):
    _RANK_LUT[_c] = _i


class BuildError(RuntimeError):
    """Engine failure: bad workdir, corrupted working files, or I/O trouble."""


@dataclass
class BuildOptions:
    chunk_size: int = 1 << 22  # records per scan chunk, multiple of 8
    keep_workdir: bool = False

    def __post_init__(self):
        if self.chunk_size < 8 or self.chunk_size % 8:
            raise ValueError("chunk_size must be a positive multiple of 8")


@dataclass
class AccessStats:
    """Access-pattern counters for the sequential-scan contract."""

    sequential_reads: int = 0
    random_accesses: int = 0
    bytes_read: int = 0
    bytes_written: int = 0


_SYMBOL_BYTES = np.frombuffer(SYMBOLS, dtype=np.uint8)


@dataclass
class PackedReads:
    """Read collection with bases nibble-packed, two symbol ranks per byte.

    Half a byte per base keeps the resident read state well below the read
    length in bytes; the engine re-derives each stage's preceding symbol with
    a vectorized nibble gather. Offsets are int32, which bounds collections
    at 2^31 symbols including end markers.
    """

    packed: np.ndarray  # uint8, low nibble first
    starts: np.ndarray  # int32 flat offset of each read
    lengths: np.ndarray  # int32

    @classmethod
    def from_collection(cls, collection: ReadCollection) -> "PackedReads":
        return cls.from_reads(collection.reads)

    @classmethod
    def from_reads(cls, reads) -> "PackedReads":
        lengths = np.fromiter((len(r) for r in reads), dtype=np.int64, count=len(reads))
        if len(lengths) == 0:
            raise ModelError("empty read collection")
        if (lengths == 0).any():
            raise ModelError(f"read {int(np.argmax(lengths == 0)) + 1} is empty")
        if int(lengths.sum()) + len(lengths) > np.iinfo(np.int32).max:
            raise ModelError("collection exceeds the 2^31 symbol limit")
        bases = np.frombuffer(b"".join(reads), dtype=np.uint8)
        ranks = _RANK_LUT[bases]
        if (ranks <= 0).any():
            off = int(np.argmax(ranks <= 0))
            raise ModelError(f"invalid read byte {chr(int(bases[off]))!r} at flat offset {off}")
        starts = np.zeros(len(lengths), dtype=np.int64)
        np.cumsum(lengths[:-1], out=starts[1:])
        return cls(cls.pack_ranks(ranks.astype(np.uint8)),
                   starts.astype(np.int32), lengths.astype(np.int32))

    @staticmethod
    def pack_ranks(ranks: np.ndarray) -> np.ndarray:
        """Pack symbol ranks into nibbles; callers building large collections
        chunkwise can append packed pieces as long as each piece is even."""
        if ranks.size % 2:
            ranks = np.concatenate([ranks, np.zeros(1, dtype=np.uint8)])
        pairs = ranks.reshape(-1, 2)
        return (pairs[:, 0] | (pairs[:, 1] << 4)).astype(np.uint8)

    def symbols_at(self, idx: np.ndarray) -> np.ndarray:
        """Symbol bytes at flat base offsets via nibble gather."""
        b = self.packed[idx >> 1]
        nib = np.where(idx & 1, b >> 4, b & 0x0F).astype(np.uint8)
        return _SYMBOL_BYTES[nib]

    @property
    def m(self) -> int:
        return len(self.lengths)

    @property
    def total_length(self) -> int:
        return int(self.lengths.sum(dtype=np.int64))


class _SeqReader:
    """Sequential-only file reader; any backwards or skipped read would count
    as a random access, which the engine asserts never happens."""

    def __init__(self, path, stats: AccessStats):
        self._fh = open(path, "rb")
        self._offset = 0
        self._stats = stats

    def read(self, n: int) -> bytes:
        data = self._fh.read(n)
        self._stats.sequential_reads += 1
        self._stats.bytes_read += len(data)
        if self._fh.tell() != self._offset + len(data):
            self._stats.random_accesses += 1
        self._offset += len(data)
        return data

    def close(self):
        self._fh.close()


class _SapSegmentWriter:
    """Packed SAP stream writer with a bit carry across chunk writes.

    The record count is known before a segment scan starts, so the header is
    written up front and the file stays append-only.
    """

    def __init__(self, path, total_bits: int, stats: AccessStats):
        self._fh = open(path, "wb")
        header = SAP_MAGIC + struct.pack("<Q", total_bits)
        self._fh.write(header)
        stats.bytes_written += len(header)
        self._carry = np.zeros(0, dtype=np.uint8)
        self._stats = stats

    def write_bits(self, bits: np.ndarray):
        if self._carry.size:
            bits = np.concatenate([self._carry, bits])
        whole = bits.size - (bits.size % 8)
        payload = np.packbits(bits[:whole], bitorder="little").tobytes()
        self._fh.write(payload)
        self._stats.bytes_written += len(payload)
        self._carry = bits[whole:].copy()

    def close(self):
        if self._carry.size:
            payload = np.packbits(self._carry, bitorder="little").tobytes()
            self._fh.write(payload)
            self._stats.bytes_written += len(payload)
        self._fh.close()


@njit(cache=True)
def _merge_scan(old_sym, old_bit, new_base, ins_pos, ins_sym, ins_bit,
                i0, i1, is_final, rank_lut, A, Z, occ,
                new_sym, new_bit, next_pos, next_sap):
    """Merge one chunk of a segment with the insertions that land in it.

    Insert positions are expressed in the coordinates of the segment being
    written (they count same-stage insertions), so each insertion fires when
    the running written-record count reaches it; new_base is that count at
    chunk entry. Counters: Z counts SAP-interval starts up to and including
    the current record; A[r] holds Z as it was at the last record carrying
    symbol rank r; occ[r] counts symbol occurrences across the whole new
    partial BWT, which is exactly the next stage's insert position for a
    cursor that wrote r. Returns (records written, insertions consumed).
    """
    w = 0
    ii = i0
    z = Z[0]
    for t in range(old_sym.shape[0]):
        while ii < i1 and ins_pos[ii] == new_base + w:
            c = ins_sym[ii]
            b = ins_bit[ii]
            if b == 0:
                z += 1
            r = rank_lut[c]
            next_sap[ii] = 1 if A[r] == z else 0
            next_pos[ii] = occ[r]
            A[r] = z
            occ[r] += 1
            new_sym[w] = c
            new_bit[w] = b
            w += 1
            ii += 1
        s = old_sym[t]
        b = old_bit[t]
        if b == 0:
            z += 1
        r = rank_lut[s]
        A[r] = z
        occ[r] += 1
        new_sym[w] = s
        new_bit[w] = b
        w += 1
    if is_final:
        while ii < i1 and ins_pos[ii] == new_base + w:
            c = ins_sym[ii]
            b = ins_bit[ii]
            if b == 0:
                z += 1
            r = rank_lut[c]
            next_sap[ii] = 1 if A[r] == z else 0
            next_pos[ii] = occ[r]
            A[r] = z
            occ[r] += 1
            new_sym[w] = c
            new_bit[w] = b
            w += 1
            ii += 1
    Z[0] = z
    return w, ii


class BcrEngine:
    """One staged build bound to an exclusive working directory."""

    def __init__(self, reads: PackedReads, workdir, options: BuildOptions | None = None):
        self.reads = reads
        self.workdir = os.fspath(workdir)
        self.options = options or BuildOptions()
        self.stats = AccessStats()
        self.seg_lengths = np.zeros(_NSEG, dtype=np.int64)
        self._parity = 0

    # -- working files ----------------------------------------------------

    def _seg_path(self, h: int, parity: int, kind: str) -> str:
        return os.path.join(self.workdir, f"seg.{h}.{parity}.{kind}")

    def _write_manifest(self, stage: int):
        lines = [f"stage={stage}", f"m={self.reads.m}", f"parity={self._parity}"]
        for h in range(_NSEG):
            lines.append(f"seg.{h}.len={int(self.seg_lengths[h])}")
        path = os.path.join(self.workdir, "manifest.txt")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def _prepare_workdir(self):
        os.makedirs(self.workdir, exist_ok=True)
        if os.listdir(self.workdir):
            raise BuildError(f"workdir {self.workdir!r} is not empty")
        for h in range(_NSEG):
            for parity in (0, 1):
                open(self._seg_path(h, parity, "bwt"), "wb").close()
                with open(self._seg_path(h, parity, "sap"), "wb") as fh:
                    fh.write(SAP_MAGIC + struct.pack("<Q", 0))

    # -- stages -----------------------------------------------------------

    def build(self) -> None:
        """Run every stage; leaves the final segments on disk."""
        reads = self.reads
        self._prepare_workdir()

        m = reads.m
        # stage-0 cursors: every read inserts its last base into segment 0;
        # all 0-suffixes coincide, so their SAP bits are 0 then all 1.
        # int32 cursors: positions and read indices are bounded by the total
        # symbol count, which the 2^31 limit on collections keeps in range
        if reads.total_length + m > np.iinfo(np.int32).max:
            raise BuildError("collection exceeds the 2^31 symbol limit")
        cur_read = np.arange(m, dtype=np.int32)
        cur_seg = np.zeros(m, dtype=np.uint8)
        cur_pos = np.arange(m, dtype=np.int32)
        cur_sym = reads.symbols_at(reads.starts + reads.lengths - 1)
        cur_bit = np.ones(m, dtype=np.uint8)
        cur_bit[0] = 0

        max_len = int(reads.lengths.max())
        for stage in range(max_len + 1):
            next_pos, next_sap = self._run_stage(cur_read, cur_seg, cur_pos, cur_sym, cur_bit)
            self._write_manifest(stage)
            if stage == max_len:
                break
            # cursors for stage+1: reads of length >= stage+1 are still live
            alive = reads.lengths[cur_read] >= stage + 1
            cur_seg = _RANK_LUT[cur_sym[alive]].astype(np.uint8)
            cur_read = cur_read[alive]
            cur_pos = next_pos[alive]
            cur_bit = next_sap[alive]
            del next_pos, next_sap, alive
            k = reads.lengths[cur_read]
            # symbol preceding the (stage+1)-suffix; sentinel for full reads
            idx = k - np.int32(stage + 2)
            np.maximum(idx, 0, out=idx)
            idx += reads.starts[cur_read]
            cur_sym = reads.symbols_at(idx)
            cur_sym[k == np.int32(stage + 1)] = SENTINEL

    def _run_stage(self, cur_read, cur_seg, cur_pos, cur_sym, cur_bit):
        # cursors stay in read order between stages, so a stable sort on
        # (segment, position) keeps the read-index tie-break for free
        key = (cur_seg.astype(np.int64) << 32) | cur_pos.astype(np.int64)
        order = np.argsort(key, kind="stable")
        del key
        seg_s = cur_seg[order]
        pos_s = np.ascontiguousarray(cur_pos[order])
        sym_s = np.ascontiguousarray(cur_sym[order])
        bit_s = np.ascontiguousarray(cur_bit[order])

        n_ins = len(order)
        next_pos_s = np.zeros(n_ins, dtype=np.int32)
        next_sap_s = np.zeros(n_ins, dtype=np.uint8)

        bounds = np.searchsorted(seg_s, np.arange(_NSEG + 1), side="left")
        occ = np.zeros(_NSEG, dtype=np.int32)
        old_parity, new_parity = self._parity, 1 - self._parity
        chunk = self.options.chunk_size

        for h in range(_NSEG):
            i0, i1 = int(bounds[h]), int(bounds[h + 1])
            old_len = int(self.seg_lengths[h])
            new_len = old_len + (i1 - i0)
            A = np.zeros(_NSEG, dtype=np.int64)
            Z = np.zeros(1, dtype=np.int64)

            bwt_in = _SeqReader(self._seg_path(h, old_parity, "bwt"), self.stats)
            sap_in = _SeqReader(self._seg_path(h, old_parity, "sap"), self.stats)
            header = sap_in.read(12)
            if header[:4] != SAP_MAGIC or struct.unpack("<Q", header[4:])[0] != old_len:
                raise BuildError(f"corrupted working file {self._seg_path(h, old_parity, 'sap')!r}")
            bwt_out = open(self._seg_path(h, new_parity, "bwt"), "wb")
            sap_out = _SapSegmentWriter(self._seg_path(h, new_parity, "sap"), new_len, self.stats)

            done = 0
            written = 0
            ii = i0
            while True:
                take = min(chunk, old_len - done)
                old_sym = np.frombuffer(bwt_in.read(take), dtype=np.uint8)
                if old_sym.size != take:
                    raise BuildError(f"short read on {self._seg_path(h, old_parity, 'bwt')!r}")
                nbytes = (take + 7) // 8
                packed = np.frombuffer(sap_in.read(nbytes), dtype=np.uint8)
                old_bit = np.unpackbits(packed, bitorder="little")[:take] if nbytes else \
                    np.zeros(0, dtype=np.uint8)
                is_final = done + take >= old_len

                cap = take + (i1 - ii)
                new_sym = np.empty(cap, dtype=np.uint8)
                new_bit = np.empty(cap, dtype=np.uint8)
                w, ii = _merge_scan(
                    old_sym, old_bit, written, pos_s, sym_s, bit_s,
                    ii, i1, is_final, _RANK_LUT, A, Z, occ,
                    new_sym, new_bit, next_pos_s, next_sap_s,
                )
                bwt_out.write(new_sym[:w].tobytes())
                self.stats.bytes_written += w
                sap_out.write_bits(new_bit[:w])
                done += take
                written += w
                if is_final:
                    break
            if ii != i1:
                raise BuildError(f"cursor ordering violation in segment {h}")

            bwt_in.close()
            sap_in.close()
            bwt_out.close()
            sap_out.close()
            self.seg_lengths[h] = new_len

        self._parity = 1 - self._parity
        # undo the stage sort so outputs line up with the caller's cursors
        next_pos = np.empty_like(next_pos_s)
        next_sap = np.empty_like(next_sap_s)
        next_pos[order] = next_pos_s
        next_sap[order] = next_sap_s
        return next_pos, next_sap

    # -- output -----------------------------------------------------------

    def finalize_to_files(self, bwt_path, sap_path) -> None:
        """Concatenate the final segments, validating counts along the way."""
        reads = self.reads
        n_expected = reads.total_length + reads.m
        if int(self.seg_lengths.sum()) != n_expected:
            raise BuildError(
                f"segment lengths sum to {int(self.seg_lengths.sum())}, expected {n_expected}"
            )
        sentinels = 0
        total_bits = 0
        with open(bwt_path, "wb") as out:
            for h in range(_NSEG):
                rd = _SeqReader(self._seg_path(h, self._parity, "bwt"), self.stats)
                while True:
                    block = rd.read(self.options.chunk_size)
                    if not block:
                        break
                    sentinels += block.count(SENTINEL)
                    out.write(block)
                rd.close()
        if sentinels != reads.m:
            raise BuildError(f"final BWT has {sentinels} sentinels, expected {reads.m}")
        sap_writer = _SapSegmentWriter(sap_path, n_expected, self.stats)
        for h in range(_NSEG):
            seg_len = int(self.seg_lengths[h])
            rd = _SeqReader(self._seg_path(h, self._parity, "sap"), self.stats)
            header = rd.read(12)
            if struct.unpack("<Q", header[4:])[0] != seg_len:
                raise BuildError(f"segment {h} SAP length mismatch at finalize")
            remaining = seg_len
            while remaining > 0:
                take = min(self.options.chunk_size, remaining)
                packed = np.frombuffer(rd.read((take + 7) // 8), dtype=np.uint8)
                sap_writer.write_bits(np.unpackbits(packed, bitorder="little")[:take])
                remaining -= take
            rd.close()
            total_bits += seg_len
        sap_writer.close()
        if total_bits != n_expected:
            raise BuildError("SAP bit count mismatch at finalize")

    def cleanup(self):
        for h in range(_NSEG):
            for parity in (0, 1):
                for kind in ("bwt", "sap"):
                    path = self._seg_path(h, parity, kind)
                    if os.path.exists(path):
                        os.remove(path)
        manifest = os.path.join(self.workdir, "manifest.txt")
        if os.path.exists(manifest):
            os.remove(manifest)


def build_to_files(reads: PackedReads | ReadCollection, workdir, bwt_path, sap_path,
                   options: BuildOptions | None = None) -> BcrEngine:
    """Build the BWT and SAP of a collection, writing .bwt/.sap files.

    Returns the engine so callers can inspect access statistics. Working files
    are removed on success unless the options ask for retention.
    """
    if isinstance(reads, ReadCollection):
        reads = PackedReads.from_collection(reads)
    engine = BcrEngine(reads, workdir, options)
    engine.build()
    engine.finalize_to_files(bwt_path, sap_path)
    if not engine.options.keep_workdir:
        engine.cleanup()
    return engine


def build_bwt_sap(collection: ReadCollection | PackedReads, workdir,
                  options: BuildOptions | None = None) -> tuple[bytes, bytearray]:
    """In-memory convenience wrapper around build_to_files."""
    from .model import read_bwt, read_sap

    bwt_path = os.path.join(os.fspath(workdir), "out.bwt")
    sap_path = os.path.join(os.fspath(workdir), "out.sap")
    seg_dir = os.path.join(os.fspath(workdir), "segments")
    build_to_files(collection, seg_dir, bwt_path, sap_path, options)
    return read_bwt(bwt_path), read_sap(sap_path)
