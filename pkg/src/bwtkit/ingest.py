"""Data ingestion and experiment input generation.

FASTA/FASTQ streaming parsers (Phred+33 qualities), bwa-style quality
trimming, and a seeded shotgun read simulator with uniform substitution
error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import BinaryIO, Iterator

import numpy as np

from .model import ModelError, ReadCollection, normalize_bases

MAX_PHRED = 93
HIGH_QUAL = 40
LOW_QUAL = 2


class ParseError(ValueError):
    """Malformed FASTA/FASTQ input; message carries the line number."""


@dataclass(frozen=True)
class QualityRead:
    bases: bytes
    quals: tuple[int, ...]

    def __post_init__(self):
        if len(self.bases) != len(self.quals):
            raise ModelError(
                f"quality length {len(self.quals)} != base length {len(self.bases)}"
            )
        if any(q < 0 or q > MAX_PHRED for q in self.quals):
            raise ModelError("Phred score out of range [0, 93]")


def parse_fasta(stream: BinaryIO) -> ReadCollection:
    """Read a FASTA stream; multi-line sequences are concatenated."""
    reads = []
    header_line = None
    chunks: list[bytes] = []
    for lineno, raw in enumerate(stream, 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(b">"):
            if header_line is not None:
                if not chunks:
                    raise ParseError(f"line {header_line}: record has no sequence")
                reads.append(_bases_at(b"".join(chunks), header_line))
            header_line = lineno
            chunks = []
        else:
            if header_line is None:
                raise ParseError(f"line {lineno}: sequence data before any '>' header")
            chunks.append(line)
    if header_line is not None:
        if not chunks:
            raise ParseError(f"line {header_line}: record has no sequence")
        reads.append(_bases_at(b"".join(chunks), header_line))
    if not reads:
        raise ParseError("no FASTA records found")
    return ReadCollection(tuple(reads))


def _bases_at(raw: bytes, lineno: int) -> bytes:
    try:
        return normalize_bases(raw)
    except ModelError as exc:
        raise ParseError(f"line {lineno}: {exc}") from exc


def parse_fastq(stream: BinaryIO) -> list[QualityRead]:
    """Read a FASTQ stream (4-line records, Phred+33 qualities)."""
    out = []
    lineno = 0
    it = iter(stream)
    while True:
        try:
            header = next(it)
        except StopIteration:
            break
        lineno += 1
        header = header.strip()
        if not header:
            continue
        if not header.startswith(b"@"):
            raise ParseError(f"line {lineno}: expected '@' header, got {header[:20]!r}")
        try:
            seq = next(it).strip()
            lineno += 1
            plus = next(it).strip()
            lineno += 1
            qual = next(it).strip()
            lineno += 1
        except StopIteration:
            raise ParseError(f"line {lineno}: truncated FASTQ record") from None
        if not plus.startswith(b"+"):
            raise ParseError(f"line {lineno - 1}: expected '+' separator")
        if len(qual) != len(seq):
            raise ParseError(
                f"line {lineno}: quality length {len(qual)} != sequence length {len(seq)}"
            )
        bases = _bases_at(seq, lineno - 3)
        quals = tuple(q - 33 for q in qual)
        if any(q < 0 or q > MAX_PHRED for q in quals):
            raise ParseError(f"line {lineno}: quality character out of Phred+33 range")
        out.append(QualityRead(bases, quals))
    if not out:
        raise ParseError("no FASTQ records found")
    return out


def write_fastq(stream: BinaryIO, reads: list[QualityRead]) -> None:
    for i, qr in enumerate(reads, 1):
        stream.write(f"@read_{i}\n".encode())
        stream.write(qr.bases + b"\n+\n")
        stream.write(bytes(q + 33 for q in qr.quals) + b"\n")


# --- quality trimming ----------------------------------------------------


def trim_bwa(read: QualityRead, threshold: int = 15) -> QualityRead:
    """Trim the low-quality 3' end of a read, bwa style.

    Keeps the prefix of length p maximizing sum(threshold - q_i) over the
    removed suffix, taking the longest prefix on ties and trimming only when
    that maximum is positive. May return an empty read; callers drop those.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    quals = read.quals
    # suffix sums s(p) for p = L down to 0; track max with largest-p tie-break
    best = 0
    best_p = len(quals)
    s = 0
    for p in range(len(quals) - 1, -1, -1):
        s += threshold - quals[p]
        if s > best:
            best = s
            best_p = p
    if best <= 0:
        return read
    return QualityRead(read.bases[:best_p], read.quals[:best_p])


# --- read simulation -----------------------------------------------------


@dataclass(frozen=True)
class SimulationSpec:
    reference: bytes
    coverage: float
    read_length: int
    error_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.coverage <= 0:
            raise ModelError("coverage must be positive")
        if not 0 <= self.error_rate < 1:
            raise ModelError("error_rate must be in [0, 1)")
        if not 1 <= self.read_length <= len(self.reference):
            raise ModelError("read_length must be in [1, reference length]")

    @property
    def read_count(self) -> int:
        return math.ceil(self.coverage * len(self.reference) / self.read_length)


_ACGT = np.frombuffer(b"ACGT", dtype=np.uint8)


def random_reference(length: int, seed: int = 0) -> bytes:
    rng = np.random.default_rng(seed)
    return rng.choice(_ACGT, size=length).tobytes()


def simulate_reads(spec: SimulationSpec) -> list[QualityRead]:
    """Sample reads uniformly from the forward strand of the reference.

    Each base is substituted independently with probability error_rate,
    uniformly over the three other ACGT bases. Substituted positions get a
    fixed low quality so trimming experiments have signal; everything else
    gets a fixed high quality. Deterministic for a given seed
    (numpy PCG64 via default_rng).
    """
    ref = np.frombuffer(normalize_bases(spec.reference), dtype=np.uint8)
    rng = np.random.default_rng(spec.seed)
    n = spec.read_count
    L = spec.read_length
    starts = rng.integers(0, len(ref) - L + 1, size=n)
    out = []
    high = (HIGH_QUAL,) * L
    for s in starts:
        bases = ref[s:s + L].copy()
        if spec.error_rate > 0:
            hits = np.flatnonzero(rng.random(L) < spec.error_rate)
            if hits.size:
                # shift by 1..3 within ACGT, never reproducing the original
                cur = np.searchsorted(_ACGT, bases[hits])
                cur[bases[hits] == ord("N")] = 0  # N substitutes to any base
                offs = rng.integers(1, 4, size=hits.size)
                bases[hits] = _ACGT[(cur + offs) % 4]
            quals = list(high)
            for h in hits.tolist():
                quals[h] = LOW_QUAL
            out.append(QualityRead(bases.tobytes(), tuple(quals)))
        else:
            out.append(QualityRead(bases.tobytes(), high))
    return out


def collection_of(reads: list[QualityRead]) -> ReadCollection:
    """Drop empty reads and strip qualities."""
    kept = tuple(r.bases for r in reads if r.bases)
    if not kept:
        raise ModelError("no nonempty reads")
    return ReadCollection(kept)
