"""Reference constructor of the collection BWT, SAP-array and RLO permutation
by explicit suffix enumeration.

This materializes every suffix and sorts them, so it is quadratic-ish in total
input size and intended for inputs up to ~10^5 bases. It exists as ground
truth: the staged engine, the permuters and the inverter are all tested
against it.
"""

from __future__ import annotations

from .model import SENTINEL, ReadCollection


def oracle_bwt_sap(collection: ReadCollection) -> tuple[bytes, bytearray]:
    """BWT and SAP bits of a collection by sorting all suffixes.

    Suffix keys exclude end markers; equal keys tie-break by read index
    (end markers compare equal among themselves, ranked by read position).
    Plain bytes comparison gives sentinel-smallest semantics because a proper
    prefix sorts before its extensions.
    """
    records: list[tuple[bytes, int, int]] = []  # (key, read_index, preceding)
    for idx, read in enumerate(collection.reads):
        k = len(read)
        # suffix of length j: read[k-j:]; preceded by read[k-j-1], or the
        # sentinel for the full-read suffix; the empty suffix is preceded by
        # the read's last base.
        for j in range(k + 1):
            key = read[k - j:]
            preceding = SENTINEL if j == k else read[k - j - 1]
            records.append((key, idx, preceding))
    records.sort(key=lambda rec: (rec[0], rec[1]))

    bwt = bytes(rec[2] for rec in records)
    sap = bytearray(len(records))
    for i in range(1, len(records)):
        sap[i] = 1 if records[i][0] == records[i - 1][0] else 0
    return bwt, sap


def oracle_rlo_permutation(collection: ReadCollection) -> tuple[int, ...]:
    """1-based read order after sorting reads by reversed text, stable on ties."""
    order = sorted(range(collection.m), key=lambda i: collection.reads[i][::-1])
    return tuple(i + 1 for i in order)
