import os
import random
import struct

import numpy as np
import pytest

from bwtkit.bcr import (
    BcrEngine,
    BuildError,
    BuildOptions,
    PackedReads,
    build_bwt_sap,
    build_to_files,
)
from bwtkit.model import ModelError, ReadCollection, read_bwt, read_sap
from bwtkit.oracle import oracle_bwt_sap

from conftest import TOY_BWT, TOY_SAP, random_collection


def build(coll, tmp_path, **opts):
    return build_bwt_sap(coll, tmp_path / "build", BuildOptions(**opts) if opts else None)


def test_toy_collection(toy_collection, tmp_path):
    bwt, sap = build(toy_collection, tmp_path)
    assert bwt == TOY_BWT
    assert sap == TOY_SAP


def test_single_read(tmp_path):
    bwt, sap = build(ReadCollection.from_strings(["A"]), tmp_path)
    assert bwt == b"A$"
    assert list(sap) == [0, 0]


def test_stage0_segment_contents(toy_collection, tmp_path):
    # after the first stage the sentinel segment holds the last base of each
    # read in read order with SAP bits 0,1,1,...
    reads = PackedReads.from_collection(toy_collection)
    engine = BcrEngine(reads, tmp_path / "w")
    engine._prepare_workdir()
    m = reads.m
    next_pos, next_sap = engine._run_stage(
        np.arange(m, dtype=np.int64),
        np.zeros(m, dtype=np.uint8),
        np.arange(m, dtype=np.int64),
        reads.symbols_at(reads.starts + reads.lengths - 1),
        np.concatenate([[0], np.ones(m - 1)]).astype(np.uint8),
    )
    seg0 = read_bwt(engine._seg_path(0, 1, "bwt"))
    assert seg0 == b"TTTT"
    with open(engine._seg_path(0, 1, "sap"), "rb") as fh:
        blob = fh.read()
    assert struct.unpack("<Q", blob[4:12])[0] == 4
    assert blob[12] == 0b1110  # bits 0,1,1,1 LSB-first
    # all four reads end in T: their 1-suffixes are identical
    assert list(next_sap) == [0, 1, 1, 1]
    assert list(next_pos) == [0, 1, 2, 3]


def test_variable_lengths(tmp_path):
    coll = ReadCollection.from_strings(["CG", "AT"])
    bwt, sap = build(coll, tmp_path)
    obwt, osap = oracle_bwt_sap(coll)
    assert bwt == obwt and sap == osap
    assert bwt[:2] == b"GT"
    assert list(sap[:2]) == [0, 1]


def test_matches_oracle_randomized(tmp_path):
    rng = random.Random(5)
    for i in range(150):
        coll = random_collection(rng)
        bwt, sap = build_bwt_sap(coll, tmp_path / f"c{i}")
        obwt, osap = oracle_bwt_sap(coll)
        assert bwt == obwt, coll.reads
        assert sap == osap, coll.reads


def test_small_chunks_force_boundaries(tmp_path):
    # chunk size 8 exercises every chunk-boundary path in the merge scan
    rng = random.Random(9)
    for i in range(25):
        coll = random_collection(rng, max_reads=12, max_len=12)
        bwt, sap = build_bwt_sap(coll, tmp_path / f"c{i}", BuildOptions(chunk_size=8))
        obwt, osap = oracle_bwt_sap(coll)
        assert bwt == obwt and sap == osap


def test_output_length_identity(tmp_path):
    rng = random.Random(3)
    for i in range(10):
        coll = random_collection(rng)
        bwt, _ = build_bwt_sap(coll, tmp_path / f"c{i}")
        assert len(bwt) == coll.total_length + coll.m
        assert bwt.count(ord("$")) == coll.m


def test_workdir_must_be_empty(tmp_path, toy_collection):
    wd = tmp_path / "w"
    wd.mkdir()
    (wd / "stale").write_text("x")
    with pytest.raises(BuildError, match="not empty"):
        build_to_files(toy_collection, wd, tmp_path / "o.bwt", tmp_path / "o.sap")


def test_workdir_cleanup_and_retention(tmp_path, toy_collection):
    wd = tmp_path / "w1"
    build_to_files(toy_collection, wd, tmp_path / "a.bwt", tmp_path / "a.sap")
    assert os.listdir(wd) == []
    wd2 = tmp_path / "w2"
    build_to_files(toy_collection, wd2, tmp_path / "b.bwt", tmp_path / "b.sap",
                   BuildOptions(keep_workdir=True))
    kept = os.listdir(wd2)
    assert "manifest.txt" in kept
    manifest = (wd2 / "manifest.txt").read_text()
    assert "m=4" in manifest and "stage=7" in manifest


def test_output_files_match_in_memory(tmp_path, toy_collection):
    build_to_files(toy_collection, tmp_path / "w", tmp_path / "o.bwt", tmp_path / "o.sap")
    assert read_bwt(tmp_path / "o.bwt") == TOY_BWT
    assert read_sap(tmp_path / "o.sap") == TOY_SAP


def test_sequential_access_contract(tmp_path, toy_collection):
    engine = build_to_files(toy_collection, tmp_path / "w", tmp_path / "o.bwt", tmp_path / "o.sap")
    assert engine.stats.random_accesses == 0
    assert engine.stats.sequential_reads > 0


def test_rejects_bad_read_bytes():
    with pytest.raises(ModelError):
        PackedReads.from_reads([b"ACGT", b"AXGT"])


def test_rejects_empty_reads():
    with pytest.raises(ModelError):
        PackedReads.from_reads([b"ACGT", b""])
