"""Core types shared by every module: alphabet, reads, BWT strings, SAP arrays
and run lists, plus the on-disk formats for .bwt and .sap files.

All byte sequences are plain ``bytes``; reads never contain the sentinel and a
collection BWT contains exactly one sentinel per read.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

SENTINEL = ord(b"$")

# Fixed symbol order: sentinel strictly smallest, then the DNA alphabet with N.
SYMBOLS = b"$ACGNT"
SIGMA = len(SYMBOLS) - 1  # non-sentinel symbols

RANK = {c: i for i, c in enumerate(SYMBOLS)}
# 256-entry lookup, -1 for bytes outside the alphabet
RANK_TABLE = [-1] * 256
for _i, _c in enumerate(SYMBOLS):
    RANK_TABLE[_c] = _i

_UPPER = bytes(range(256)).upper()

SAP_MAGIC = b"SAP1"


class ModelError(ValueError):
    """Malformed reads, BWT strings, or SAP arrays."""


def rank_of(symbol: int) -> int:
    r = RANK_TABLE[symbol]
    if r < 0:
        raise ModelError(f"byte {symbol:#04x} is not in the alphabet {SYMBOLS!r}")
    return r


def normalize_bases(raw: bytes) -> bytes:
    """Upcase a read and reject anything outside ACGNT.

    Lowercase input is accepted; any other byte (including IUPAC ambiguity
    codes other than N) is an error rather than being mapped to N.
    """
    bases = raw.translate(_UPPER)
    for off, b in enumerate(bases):
        if RANK_TABLE[b] <= 0:  # sentinel or foreign byte
            raise ModelError(f"invalid base {chr(b)!r} at offset {off}")
    return bases


@dataclass(frozen=True)
class ReadCollection:
    """Ordered multiset of reads; position defines the end-marker rank."""

    reads: tuple[bytes, ...]

    def __post_init__(self):
        if not self.reads:
            raise ModelError("a read collection must contain at least one read")
        for idx, r in enumerate(self.reads):
            if not r:
                raise ModelError(f"read {idx + 1} is empty")
            for off, b in enumerate(r):
                if RANK_TABLE[b] <= 0:
                    raise ModelError(
                        f"read {idx + 1}: invalid base {chr(b)!r} at offset {off}"
                    )

    @classmethod
    def from_strings(cls, reads: Sequence[bytes | str]) -> "ReadCollection":
        out = []
        for r in reads:
            if isinstance(r, str):
                r = r.encode("ascii")
            out.append(normalize_bases(r))
        return cls(tuple(out))

    @property
    def m(self) -> int:
        return len(self.reads)

    @property
    def total_length(self) -> int:
        return sum(len(r) for r in self.reads)

    @property
    def max_length(self) -> int:
        return max(len(r) for r in self.reads)

    def __iter__(self) -> Iterator[bytes]:
        return iter(self.reads)


@dataclass(frozen=True)
class Violation:
    offset: int
    message: str


def validate_bwt(bwt: bytes, m: int) -> Violation | None:
    """Check alphabet membership and sentinel count of a candidate BWT.

    Returns None when the string is well formed, otherwise a report carrying
    the first offending byte offset (or the string length for count errors).
    """
    sentinels = 0
    for off, b in enumerate(bwt):
        r = RANK_TABLE[b]
        if r < 0:
            return Violation(off, f"byte {chr(b)!r} outside alphabet")
        if r == 0:
            sentinels += 1
    if sentinels != m:
        return Violation(len(bwt), f"expected {m} sentinels, found {sentinels}")
    return None


# --- runs ---------------------------------------------------------------


def runs(data: bytes) -> list[tuple[int, int]]:
    """Maximal-run decomposition of a byte string as (symbol, length) pairs."""
    out: list[tuple[int, int]] = []
    prev = -1
    count = 0
    for b in data:
        if b == prev:
            count += 1
        else:
            if count:
                out.append((prev, count))
            prev = b
            count = 1
    if count:
        out.append((prev, count))
    return out


def run_concat(run_list: Sequence[tuple[int, int]]) -> bytes:
    return b"".join(bytes([sym]) * length for sym, length in run_list)


# --- SAP arrays ---------------------------------------------------------


def sap_intervals(sap: Sequence[int]) -> list[tuple[int, int]]:
    """Half-open SAP-interval ranges of a SAP bit array.

    Each interval starts at a 0 bit; interior bits are all 1. Rejects arrays
    that begin with a 1 bit (no position precedes the first).
    """
    if len(sap) == 0:
        raise ModelError("SAP array is empty")
    if sap[0] != 0:
        raise ModelError("SAP array must start with a 0 bit")
    out = []
    start = 0
    for i in range(1, len(sap)):
        if sap[i] == 0:
            out.append((start, i))
            start = i
    out.append((start, len(sap)))
    return out


def pack_sap(bits: Sequence[int]) -> bytes:
    """Serialize SAP bits: magic, u64 LE bit count, bits packed LSB-first."""
    arr = np.asarray(bits, dtype=np.uint8)
    payload = np.packbits(arr, bitorder="little").tobytes()
    return SAP_MAGIC + struct.pack("<Q", len(arr)) + payload


def unpack_sap(blob: bytes) -> bytearray:
    if blob[:4] != SAP_MAGIC:
        raise ModelError("bad SAP file magic")
    if len(blob) < 12:
        raise ModelError("truncated SAP header")
    (count,) = struct.unpack_from("<Q", blob, 4)
    need = (count + 7) // 8
    payload = blob[12:]
    if len(payload) < need:
        raise ModelError(f"SAP payload truncated: need {need} bytes, have {len(payload)}")
    bits = np.unpackbits(np.frombuffer(payload[:need], dtype=np.uint8), bitorder="little")
    return bytearray(bits[:count].tobytes())


def write_bwt(path, bwt: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(bwt)


def read_bwt(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def write_sap(path, bits: Sequence[int]) -> None:
    with open(path, "wb") as fh:
        fh.write(pack_sap(bits))


def read_sap(path) -> bytearray:
    with open(path, "rb") as fh:
        return unpack_sap(fh.read())
