"""Second-stage compression of BWT byte streams.

Pipeline stages: run-length tokenization, move-to-front, canonical Huffman
coding over a joint (symbol, run-length-bucket) token alphabet, and a
self-describing container. Run-length buckets are {1, 2, 3, 4-7, 8-15, ...};
lengths inside a bucket are emitted as raw remainder bits after the token's
Huffman code.

Container layout (bit-exact):
    magic "BTC1" | profile (1 byte) | original_length (u64 LE)
    | table_entry_count (u16 LE) | one code length byte per token
    | payload bits, MSB-first within bytes, zero-padded.
Token order is symbol-rank major, bucket minor; raw-huff uses one token per
alphabet symbol (no buckets).
"""

from __future__ import annotations

import heapq
import shutil
import struct
import subprocess
from dataclasses import dataclass

import numpy as np

from .model import RANK_TABLE, SYMBOLS

MAGIC = b"BTC1"

PROFILES = {"raw-huff": 0, "rle-huff": 1, "mtf-rle-huff": 2}
PROFILE_NAMES = {v: k for k, v in PROFILES.items()}

NSYM = len(SYMBOLS)
# bucket 0,1,2 hold exact lengths 1,2,3; bucket k>=3 holds [2^(k-1), 2^k-1]
# with k-1 remainder bits. 48 buckets cover any run length below 2^47.
NBUCKETS = 48
NTOKENS_RLE = NSYM * NBUCKETS

_RANK_LUT = np.full(256, -1, dtype=np.int16)
for _i, _c in enumerate(SYMBOLS):
    _RANK_LUT[_c] = _i


class CodecError(ValueError):
    """Malformed input to an encoder or a corrupted compressed blob."""


@dataclass(frozen=True)
class Metrics:
    input_bases: int
    compressed_bits: int

    @property
    def bpb(self) -> float:
        return self.compressed_bits / self.input_bases


def bits_per_base(input_bases: int, compressed_bytes: int) -> Metrics:
    """bpb accounting; bases exclude sentinels so pipelines stay comparable."""
    if input_bases <= 0:
        raise CodecError("bits-per-base is undefined for zero input bases")
    return Metrics(input_bases, compressed_bytes * 8)


# --- run-length stage ----------------------------------------------------


def _runs_np(data: bytes) -> tuple[np.ndarray, np.ndarray]:
    arr = np.frombuffer(data, dtype=np.uint8)
    if arr.size == 0:
        return np.zeros(0, dtype=np.uint8), np.zeros(0, dtype=np.int64)
    edges = np.flatnonzero(np.diff(arr)) + 1
    starts = np.concatenate([[0], edges])
    ends = np.concatenate([edges, [arr.size]])
    return arr[starts], (ends - starts).astype(np.int64)


def rle_encode(data: bytes) -> bytes:
    """Token stream of (symbol byte, varint run length) pairs.

    Varints are 7 bits per byte, little-endian groups, high bit = continue.
    """
    syms, lens = _runs_np(data)
    out = bytearray()
    for s, l in zip(syms.tolist(), lens.tolist()):
        out.append(s)
        while l >= 0x80:
            out.append((l & 0x7F) | 0x80)
            l >>= 7
        out.append(l)
    return bytes(out)


def rle_decode(tokens: bytes) -> bytes:
    out = bytearray()
    i = 0
    n = len(tokens)
    while i < n:
        sym = tokens[i]
        i += 1
        length = 0
        shift = 0
        while True:
            if i >= n:
                raise CodecError("truncated varint in RLE stream")
            b = tokens[i]
            i += 1
            length |= (b & 0x7F) << shift
            shift += 7
            if not b & 0x80:
                break
        if length == 0:
            raise CodecError("zero-length run in RLE stream")
        out.extend(bytes([sym]) * length)
    return bytes(out)


# --- move-to-front stage -------------------------------------------------


def mtf_encode(data: bytes, alphabet: bytes = SYMBOLS) -> bytes:
    """MTF index stream; the initial list is the alphabet in canonical order."""
    table = bytearray(alphabet)
    out = bytearray(len(data))
    for i, b in enumerate(data):
        idx = table.find(b)
        if idx < 0:
            raise CodecError(f"byte {chr(b)!r} at offset {i} outside alphabet")
        out[i] = idx
        if idx:
            del table[idx]
            table.insert(0, b)
    return bytes(out)


def mtf_decode(indices: bytes, alphabet: bytes = SYMBOLS) -> bytes:
    table = bytearray(alphabet)
    out = bytearray(len(indices))
    for i, idx in enumerate(indices):
        if idx >= len(table):
            raise CodecError(f"MTF index {idx} at offset {i} out of range")
        b = table[idx]
        out[i] = b
        if idx:
            del table[idx]
            table.insert(0, b)
    return bytes(out)


# --- token model ---------------------------------------------------------


def _bucketize(lens: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized (bucket, remainder-bit count, remainder) for run lengths."""
    if lens.size and int(lens.max()) >= 1 << (NBUCKETS - 1):
        raise CodecError("run length exceeds the token model")
    exp = np.frexp(lens.astype(np.float64))[1]  # bit length, exact below 2^53
    bucket = np.where(lens <= 3, lens - 1, exp).astype(np.int32)
    nbits = np.maximum(bucket - 1, 0).astype(np.int32)
    nbits[lens <= 3] = 0
    rem = np.where(lens <= 3, 0, lens - (np.int64(1) << np.maximum(exp - 1, 0)))
    return bucket, nbits, rem.astype(np.int64)


def _bucket_base(bucket: int) -> tuple[int, int]:
    """(base length, remainder-bit count) of a bucket index."""
    if bucket <= 2:
        return bucket + 1, 0
    return 1 << (bucket - 1), bucket - 1


def _rank_bytes(data: bytes) -> np.ndarray:
    ranks = _RANK_LUT[np.frombuffer(data, dtype=np.uint8)]
    if (ranks < 0).any():
        off = int(np.argmax(ranks < 0))
        raise CodecError(f"byte {chr(data[off])!r} at offset {off} outside alphabet")
    return ranks


# --- canonical Huffman ---------------------------------------------------


def _code_lengths(freqs: dict[int, int]) -> dict[int, int]:
    if not freqs:
        raise CodecError("cannot build a code for an empty token stream")
    if len(freqs) == 1:
        return {next(iter(freqs)): 1}
    heap = [(f, i, (tok,)) for i, (tok, f) in enumerate(sorted(freqs.items()))]
    heapq.heapify(heap)
    lengths = {tok: 0 for tok in freqs}
    tie = len(heap)
    while len(heap) > 1:
        fa, _, ta = heapq.heappop(heap)
        fb, _, tb = heapq.heappop(heap)
        for tok in ta + tb:
            lengths[tok] += 1
        heapq.heappush(heap, (fa + fb, tie, ta + tb))
        tie += 1
    return lengths


def _canonical_codes(lengths: dict[int, int]) -> dict[int, tuple[int, int]]:
    """token -> (code value, bit length), canonical order (length, token)."""
    codes = {}
    code = 0
    prev_len = 0
    for tok in sorted(lengths, key=lambda t: (lengths[t], t)):
        ln = lengths[tok]
        code <<= ln - prev_len
        codes[tok] = (code, ln)
        code += 1
        prev_len = ln
    return codes


class _BitReader:
    def __init__(self, payload: bytes):
        self._bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))
        self.pos = 0

    def read(self, nbits: int) -> int:
        if self.pos + nbits > self._bits.size:
            raise CodecError("payload underrun")
        value = 0
        for b in self._bits[self.pos:self.pos + nbits]:
            value = (value << 1) | int(b)
        self.pos += nbits
        return value

    def read_bit(self) -> int:
        if self.pos >= self._bits.size:
            raise CodecError("payload underrun")
        b = int(self._bits[self.pos])
        self.pos += 1
        return b

    def remaining(self) -> int:
        return self._bits.size - self.pos


def _pack_payload(codes: dict[int, tuple[int, int]], tok: np.ndarray,
                  nbits: np.ndarray, rem: np.ndarray) -> bytes:
    """Emit Huffman codes plus raw remainder bits, MSB-first, chunkwise."""
    code_strs = {t: format(v, f"0{ln}b") for t, (v, ln) in codes.items()}
    parts: list[str] = []
    step = 1 << 20
    for lo in range(0, tok.size, step):
        chunk = []
        for t, nb, r in zip(tok[lo:lo + step].tolist(),
                            nbits[lo:lo + step].tolist(),
                            rem[lo:lo + step].tolist()):
            chunk.append(code_strs[t])
            if nb:
                chunk.append(format(r, f"0{nb}b"))
        parts.append("".join(chunk))
    bits = "".join(parts)
    arr = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
    return np.packbits(arr).tobytes()


def huffman_encode(tok: np.ndarray, nbits: np.ndarray, rem: np.ndarray,
                   n_token_space: int, profile: int, original_length: int) -> bytes:
    """Build a container blob from a token stream (ids, remainder bits)."""
    if tok.size == 0:
        raise CodecError("refusing to encode an empty token stream")
    counts = np.bincount(tok, minlength=n_token_space)
    freqs = {int(t): int(counts[t]) for t in np.flatnonzero(counts)}
    lengths = _code_lengths(freqs)
    if max(lengths.values()) > 255:
        raise CodecError("code length overflow")
    codes = _canonical_codes(lengths)
    payload = _pack_payload(codes, tok, nbits, rem)
    table = bytes(lengths.get(t, 0) for t in range(n_token_space))
    return (MAGIC + bytes([profile]) + struct.pack("<Q", original_length)
            + struct.pack("<H", n_token_space) + table + payload)


def _parse_container(blob: bytes) -> tuple[int, int, dict[int, int], _BitReader]:
    if len(blob) < 15:
        raise CodecError("blob too short for a container header")
    if blob[:4] != MAGIC:
        raise CodecError("bad magic")
    profile = blob[4]
    if profile not in PROFILE_NAMES:
        raise CodecError(f"unknown profile byte {profile}")
    (original_length,) = struct.unpack_from("<Q", blob, 5)
    (n_tokens,) = struct.unpack_from("<H", blob, 13)
    expect = NSYM if profile == PROFILES["raw-huff"] else NTOKENS_RLE
    if n_tokens != expect:
        raise CodecError(f"table entry count {n_tokens} does not match profile")
    if len(blob) < 15 + n_tokens:
        raise CodecError("truncated code table")
    lengths = {tok: blob[15 + tok] for tok in range(n_tokens) if blob[15 + tok]}
    if not lengths:
        raise CodecError("empty code table")
    if len(lengths) > 1:
        kraft = sum(2 ** (255 - ln) for ln in lengths.values())
        if kraft > 2 ** 255:
            raise CodecError("code table violates the Kraft inequality")
    return profile, original_length, lengths, _BitReader(blob[15 + n_tokens:])


class _Decoder:
    """Canonical Huffman decoder driven by (first code, first index) per length."""

    def __init__(self, lengths: dict[int, int]):
        self.by_rank = sorted(lengths, key=lambda t: (lengths[t], t))
        first_code: dict[int, int] = {}
        first_rank: dict[int, int] = {}
        count_by_len: dict[int, int] = {}
        code = 0
        prev_len = 0
        for rank, tok in enumerate(self.by_rank):
            ln = lengths[tok]
            code <<= ln - prev_len
            if ln not in first_code:
                first_code[ln] = code
                first_rank[ln] = rank
            count_by_len[ln] = count_by_len.get(ln, 0) + 1
            code += 1
            prev_len = ln
        self.first_code = first_code
        self.first_rank = first_rank
        self.count_by_len = count_by_len

    def decode_one(self, reader: _BitReader) -> int:
        code = 0
        ln = 0
        while True:
            code = (code << 1) | reader.read_bit()
            ln += 1
            if ln > 255:
                raise CodecError("code longer than any table entry")
            if ln in self.first_code:
                offset = code - self.first_code[ln]
                if 0 <= offset < self.count_by_len[ln]:
                    return self.by_rank[self.first_rank[ln] + offset]


def huffman_decode(blob: bytes) -> bytes:
    """Decode a container back to the original byte stream."""
    profile, original_length, lengths, reader = _parse_container(blob)
    decoder = _Decoder(lengths)
    out = bytearray()
    if profile == PROFILES["raw-huff"]:
        while len(out) < original_length:
            tok = decoder.decode_one(reader)
            if tok >= NSYM:
                raise CodecError("token outside the raw alphabet")
            out.append(SYMBOLS[tok])
    else:
        while len(out) < original_length:
            tok = decoder.decode_one(reader)
            sym_rank, bucket = divmod(tok, NBUCKETS)
            base, nb = _bucket_base(bucket)
            length = base + (reader.read(nb) if nb else 0)
            if len(out) + length > original_length:
                raise CodecError("run overshoots the declared length")
            if profile == PROFILES["mtf-rle-huff"]:
                out.extend(bytes([sym_rank]) * length)
            else:
                out.extend(bytes([SYMBOLS[sym_rank]]) * length)
    if reader.remaining() >= 8:
        raise CodecError("trailing garbage after payload")
    if np.any(reader._bits[reader.pos:]):
        raise CodecError("nonzero padding bits")
    if profile == PROFILES["mtf-rle-huff"]:
        return mtf_decode(bytes(out))
    return bytes(out)


def compress(data: bytes, profile: str = "rle-huff") -> bytes:
    """Compress a byte stream over the $ACGNT alphabet into a container."""
    if profile not in PROFILES:
        raise CodecError(f"unknown profile {profile!r}")
    if not data:
        raise CodecError("refusing to compress empty input")
    pid = PROFILES[profile]
    if profile == "raw-huff":
        ranks = _rank_bytes(data)
        return huffman_encode(ranks.astype(np.int32),
                              np.zeros(ranks.size, dtype=np.int32),
                              np.zeros(ranks.size, dtype=np.int64),
                              NSYM, pid, len(data))
    if profile == "rle-huff":
        syms, lens = _runs_np(data)
        sym_ranks = _rank_bytes(syms.tobytes())
    else:  # mtf-rle-huff: MTF first, then runs over the index stream
        indices = mtf_encode(data)
        syms, lens = _runs_np(indices)
        sym_ranks = syms.astype(np.int16)
    bucket, nbits, rem = _bucketize(lens)
    tok = (sym_ranks.astype(np.int32) * NBUCKETS + bucket).astype(np.int32)
    return huffman_encode(tok, nbits, rem, NTOKENS_RLE, pid, len(data))


def decompress(blob: bytes) -> bytes:
    return huffman_decode(blob)


# --- external compressor pipe -------------------------------------------


def external_compress(data: bytes, command: list[str]) -> int:
    """Pipe bytes through an external compressor, returning the output size.

    Metrics only; never part of the decode path. Missing programs and nonzero
    exits are reported, not skipped.
    """
    if not command:
        raise CodecError("empty external compressor command")
    if shutil.which(command[0]) is None:
        raise CodecError(f"external compressor {command[0]!r} not found")
    proc = subprocess.run(command, input=data, stdout=subprocess.PIPE,
                          stderr=subprocess.PIPE)
    if proc.returncode != 0:
        err = proc.stderr.decode(errors="replace").strip()
        raise CodecError(f"{command[0]} exited {proc.returncode}: {err}")
    return len(proc.stdout)
