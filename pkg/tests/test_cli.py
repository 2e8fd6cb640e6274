import io

import pytest

from bwtkit import cli
from bwtkit.codec import decompress
from bwtkit.ingest import parse_fastq
from bwtkit.model import read_sap

from conftest import TOY_BWT, TOY_BWT_PERMUTED, TOY_READS, TOY_SAP


@pytest.fixture
def toy_fasta(tmp_path):
    path = tmp_path / "reads.fa"
    path.write_bytes(b"".join(f">r{i}\n{r}\n".encode()
                              for i, r in enumerate(TOY_READS, 1)))
    return path


def run_cli(*argv):
    return cli.run([str(a) for a in argv])


def build_toy_collection(tmp_path, toy_fasta):
    bwt = tmp_path / "out.bwt"
    sap = tmp_path / "out.sap"
    rc = run_cli("bwt", "--in", toy_fasta, "--workdir", tmp_path / "wd",
                 "--out", bwt, "--sap", sap)
    assert rc == 0
    return bwt, sap


def test_bwt_command(tmp_path, toy_fasta):
    bwt, sap = build_toy_collection(tmp_path, toy_fasta)
    assert bwt.read_bytes() == TOY_BWT
    assert bytes(read_sap(str(sap))) == bytes(TOY_SAP)


def test_permute_command(tmp_path, toy_fasta):
    bwt, sap = build_toy_collection(tmp_path, toy_fasta)
    out = tmp_path / "perm.bwt"
    assert run_cli("permute", "--in", bwt, "--sap", sap, "--out", out) == 0
    assert out.read_bytes() == TOY_BWT_PERMUTED


def test_compress_decompress_roundtrip(tmp_path, toy_fasta):
    bwt, _ = build_toy_collection(tmp_path, toy_fasta)
    blob = tmp_path / "out.btc"
    back = tmp_path / "back.bwt"
    assert run_cli("compress", "--in", bwt, "--profile", "mtf-rle-huff",
                   "--out", blob) == 0
    assert decompress(blob.read_bytes()) == TOY_BWT
    assert run_cli("decompress", "--in", blob, "--out", back) == 0
    assert back.read_bytes() == TOY_BWT


def test_invert_command(tmp_path, toy_fasta):
    bwt, _ = build_toy_collection(tmp_path, toy_fasta)
    out = tmp_path / "rec.fa"
    assert run_cli("invert", "--in", bwt, "--out", out) == 0
    expected = b"".join(f">read_{i}\n{r}\n".encode()
                        for i, r in enumerate(TOY_READS, 1))
    assert out.read_bytes() == expected


def test_rlo_command(tmp_path, toy_fasta):
    out = tmp_path / "rlo.fa"
    assert run_cli("rlo", "--in", toy_fasta, "--out", out) == 0
    bodies = [l for l in out.read_bytes().splitlines() if not l.startswith(b">")]
    assert sorted(bodies) == sorted(r.encode() for r in TOY_READS)
    assert bodies == sorted(bodies, key=lambda r: r[::-1])


def test_trim_command(tmp_path):
    fq = tmp_path / "in.fq"
    fq.write_bytes(b"@r1\nACGTAC\n+\nIIII##\n@r2\nAC\n+\n##\n")
    out = tmp_path / "trim.fq"
    assert run_cli("trim", "--in", fq, "--out", out) == 0
    reads = parse_fastq(io.BytesIO(out.read_bytes()))
    assert len(reads) == 1
    assert reads[0].bases == b"ACGT"


def test_simulate_command(tmp_path):
    out = tmp_path / "sim.fq"
    assert run_cli("simulate", "--random-ref", 1000, "--coverage", 2,
                   "--read-length", 50, "--seed", 3, "--out", out) == 0
    reads = parse_fastq(io.BytesIO(out.read_bytes()))
    assert len(reads) == 40
    assert all(len(r.bases) == 50 for r in reads)


def test_stats_command(tmp_path, toy_fasta, capsys):
    bwt, sap = build_toy_collection(tmp_path, toy_fasta)
    assert run_cli("stats", "--in", bwt, "--sap", sap,
                   "--oracle", toy_fasta) == 0
    text = capsys.readouterr().out
    assert "runs=18" in text
    assert "oracle_match=yes" in text


def test_stats_csv(tmp_path, toy_fasta):
    bwt, _ = build_toy_collection(tmp_path, toy_fasta)
    out = tmp_path / "stats.csv"
    assert run_cli("stats", "--in", bwt, "--csv", "--out", out) == 0
    header, row = out.read_text().strip().splitlines()
    assert header.split(",")[:2] == ["length", "runs"]
    assert row.split(",")[:2] == ["32", "18"]


def test_experiment_command(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run_cli("experiment", "--coverages", "1", "--read-lengths", "40",
                   "--errors", "0", "--ref-length", 2000, "--seed", 1,
                   "--out", out) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "dataset,pipeline,input_bases,compressed_bytes,bpb"
    assert len(lines) == 5  # raw, bwt, bwt-sap, bwt-rlo


def test_usage_error_exit_code():
    assert run_cli("bwt") == 1
    assert run_cli("no-such-command") == 1


def test_data_error_exit_code(tmp_path):
    bad = tmp_path / "bad.fa"
    bad.write_bytes(b">r\nACQT\n")
    assert run_cli("bwt", "--in", bad, "--workdir", tmp_path / "wd",
                   "--out", tmp_path / "o.bwt", "--sap", tmp_path / "o.sap") == 2


def test_io_error_exit_code(tmp_path):
    assert run_cli("compress", "--in", tmp_path / "missing.bwt",
                   "--out", tmp_path / "o.btc") == 3
