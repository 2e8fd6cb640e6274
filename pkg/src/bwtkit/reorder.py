"""Compression-boosting reorderings: permuting BWT symbols inside
SAP-intervals and explicit reverse-lexicographic sorting of a collection.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import ModelError, ReadCollection, SYMBOLS, runs, sap_intervals
from .oracle import oracle_rlo_permutation


class PermutationStrategy(Enum):
    SORT_ASCENDING = "sort"
    RUN_EXTENSION = "runext"


def sap_permute(bwt: bytes, sap, strategy: PermutationStrategy = PermutationStrategy.SORT_ASCENDING) -> bytes:
    """Rearrange symbols within each SAP-interval of a BWT.

    SORT_ASCENDING sorts each interval's symbols in alphabet order, which
    bounds the interval's run count by its number of distinct symbols.
    RUN_EXTENSION first emits copies of the symbol that ended the previous
    output run, then the remainder ascending; it looks back exactly one run.

    Single sequential pass; only one interval is buffered at a time.
    """
    if len(bwt) != len(sap):
        raise ModelError(f"BWT length {len(bwt)} != SAP length {len(sap)}")
    out = bytearray(len(bwt))
    w = 0
    last = -1  # symbol ending the previous output run
    for start, end in sap_intervals(sap):
        counts = [0] * len(SYMBOLS)
        for b in bwt[start:end]:
            r = _rank(b)
            counts[r] += 1
        emit_order = range(len(SYMBOLS))
        if strategy is PermutationStrategy.RUN_EXTENSION and last >= 0 and counts[last]:
            emit_order = [last] + [r for r in range(len(SYMBOLS)) if r != last]
        for r in emit_order:
            if counts[r]:
                out[w:w + counts[r]] = bytes([SYMBOLS[r]]) * counts[r]
                w += counts[r]
                last = r
    return bytes(out)


def _rank(b: int) -> int:
    from .model import RANK_TABLE

    r = RANK_TABLE[b]
    if r < 0:
        raise ModelError(f"byte {chr(b)!r} outside alphabet")
    return r


def rlo_sort(collection: ReadCollection) -> ReadCollection:
    """Reorder reads so their reversed texts are in ascending order."""
    perm = oracle_rlo_permutation(collection)
    return ReadCollection(tuple(collection.reads[i - 1] for i in perm))


@dataclass(frozen=True)
class RunStats:
    length: int
    run_count: int
    mean_run_length: float
    # per SAP-interval (run count, distinct symbol count phi); None without SAP
    interval_stats: tuple[tuple[int, int], ...] | None = None


def run_stats(bwt: bytes, sap=None) -> RunStats:
    run_list = runs(bwt)
    count = len(run_list)
    mean = (len(bwt) / count) if count else 0.0
    interval_stats = None
    if sap is not None:
        if len(sap) != len(bwt):
            raise ModelError("SAP length mismatch")
        per = []
        for start, end in sap_intervals(sap):
            chunk = bwt[start:end]
            per.append((len(runs(chunk)), len(set(chunk))))
        interval_stats = tuple(per)
    return RunStats(len(bwt), count, mean, interval_stats)
