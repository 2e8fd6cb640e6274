import pytest
from hypothesis import given, strategies as st

from bwtkit.model import (
    ModelError,
    ReadCollection,
    normalize_bases,
    pack_sap,
    run_concat,
    runs,
    sap_intervals,
    unpack_sap,
    validate_bwt,
)

from conftest import TOY_BWT

alphabet_bytes = st.binary(max_size=200).map(
    lambda raw: bytes(b"$ACGNT"[b % 6] for b in raw))


def test_runs_empty():
    assert runs(b"") == []


def test_runs_two_blocks():
    assert runs(b"AAAACCC") == [(ord("A"), 4), (ord("C"), 3)]


def test_runs_toy_collection_b1_segment():
    # direct scan of the second partial-BWT segment of the worked example
    expected = [(ord("T"), 1), (ord("G"), 1), (ord("T"), 1), (ord("G"), 1),
                (ord("C"), 1), (ord("T"), 1), (ord("G"), 2)]
    assert runs(b"TGTGCTGG") == expected


@given(alphabet_bytes)
def test_runs_roundtrip(data):
    rl = runs(data)
    assert run_concat(rl) == data
    for (a, la), (b, lb) in zip(rl, rl[1:]):
        assert a != b
    assert all(length >= 1 for _, length in rl)


def test_sap_intervals_single():
    assert sap_intervals([0, 1, 1, 1]) == [(0, 4)]


def test_sap_intervals_singletons():
    assert sap_intervals([0, 0, 0]) == [(0, 1), (1, 2), (2, 3)]


def test_sap_intervals_toy_collection_b1_bits():
    bits = [0, 0, 1, 1, 0, 0, 1, 0]
    assert sap_intervals(bits) == [(0, 1), (1, 4), (4, 5), (5, 7), (7, 8)]


def test_sap_intervals_rejects_leading_one():
    with pytest.raises(ModelError):
        sap_intervals([1, 0])


@given(st.lists(st.integers(0, 1), min_size=1, max_size=100).map(lambda b: [0] + b))
def test_sap_intervals_partition(bits):
    ranges = sap_intervals(bits)
    assert ranges[0][0] == 0
    assert ranges[-1][1] == len(bits)
    for (_, e1), (s2, _) in zip(ranges, ranges[1:]):
        assert e1 == s2
    for s, e in ranges:
        assert bits[s] == 0
        assert all(bits[i] == 1 for i in range(s + 1, e))


def test_validate_ok():
    assert validate_bwt(b"A$", 1) is None


def test_validate_bad_byte_offset():
    v = validate_bwt(b"AXA$", 1)
    assert v is not None and v.offset == 1


def test_validate_toy_collection():
    assert validate_bwt(TOY_BWT, 4) is None


def test_validate_sentinel_count():
    v = validate_bwt(b"AC$", 2)
    assert v is not None


def test_normalize_upcases():
    assert normalize_bases(b"acgtn") == b"ACGTN"


def test_normalize_rejects_iupac():
    with pytest.raises(ModelError, match="offset 2"):
        normalize_bases(b"ACRT")


def test_collection_rejects_sentinel_in_read():
    with pytest.raises(ModelError):
        ReadCollection.from_strings(["AC$T"])


def test_collection_rejects_empty():
    with pytest.raises(ModelError):
        ReadCollection(tuple())
    with pytest.raises(ModelError):
        ReadCollection.from_strings(["ACGT", ""])


def test_collection_counts(toy_collection):
    assert toy_collection.m == 4
    assert toy_collection.total_length == 28
    assert toy_collection.max_length == 7


@given(st.lists(st.integers(0, 1), min_size=0, max_size=100))
def test_sap_file_roundtrip(bits):
    assert list(unpack_sap(pack_sap(bits))) == bits


def test_sap_file_rejects_bad_magic():
    with pytest.raises(ModelError):
        unpack_sap(b"XXXX" + b"\x00" * 8)


def test_sap_file_rejects_truncation():
    blob = pack_sap([0, 1] * 20)
    with pytest.raises(ModelError):
        unpack_sap(blob[:-2])
