"""Desk-scale experiment harness: simulate read sets, run the compression
pipelines (raw, BWT, BWT-SAP, BWT-RLO) and emit bits-per-base CSV rows.
"""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass, field

from .bcr import BuildOptions, PackedReads, build_bwt_sap
from .codec import bits_per_base, compress
from .ingest import SimulationSpec, collection_of, random_reference, simulate_reads
from .model import ReadCollection
from .oracle import oracle_rlo_permutation
from .reorder import PermutationStrategy, sap_permute

CSV_FIELDS = ("dataset", "pipeline", "input_bases", "compressed_bytes", "bpb")

PIPELINES = ("raw", "bwt", "bwt-sap", "bwt-rlo")


@dataclass(frozen=True)
class PipelineRow:
    dataset: str
    pipeline: str
    input_bases: int
    compressed_bytes: int

    @property
    def bpb(self) -> float:
        return bits_per_base(self.input_bases, self.compressed_bytes).bpb

    def as_csv(self) -> dict:
        return {
            "dataset": self.dataset,
            "pipeline": self.pipeline,
            "input_bases": self.input_bases,
            "compressed_bytes": self.compressed_bytes,
            "bpb": f"{self.bpb:.6f}",
        }


def _rlo_reads(reads: list[bytes]) -> list[bytes]:
    order = sorted(range(len(reads)), key=lambda i: reads[i][::-1])
    return [reads[i] for i in order]


def run_pipelines(reads: list[bytes], dataset: str, profile: str = "rle-huff",
                  workdir: str | None = None,
                  pipelines: tuple[str, ...] = PIPELINES) -> list[PipelineRow]:
    """Compress one read set through the requested pipelines.

    `reads` is a plain list of base strings so callers can avoid building a
    full ReadCollection for large simulated sets.
    """
    total = sum(len(r) for r in reads)
    rows = []
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        bwt = sap = None
        if any(p in pipelines for p in ("bwt", "bwt-sap")):
            bwt, sap = build_bwt_sap(PackedReads.from_reads(reads), os.path.join(tmp, "fwd"))
        for pipeline in pipelines:
            if pipeline == "raw":
                blob = compress(b"".join(reads), profile)
            elif pipeline == "bwt":
                blob = compress(bwt, profile)
            elif pipeline == "bwt-sap":
                permuted = sap_permute(bwt, sap, PermutationStrategy.SORT_ASCENDING)
                blob = compress(permuted, profile)
            elif pipeline == "bwt-rlo":
                rlo_bwt, _ = build_bwt_sap(
                    PackedReads.from_reads(_rlo_reads(reads)), os.path.join(tmp, "rlo"))
                blob = compress(rlo_bwt, profile)
            else:
                raise ValueError(f"unknown pipeline {pipeline!r}")
            rows.append(PipelineRow(dataset, pipeline, total, len(blob)))
    return rows


@dataclass
class SweepConfig:
    reference_length: int = 100_000
    coverages: tuple[float, ...] = (10, 20, 40, 60)
    read_lengths: tuple[int, ...] = (100,)
    error_rates: tuple[float, ...] = (0.0,)
    seed: int = 0
    profile: str = "rle-huff"
    pipelines: tuple[str, ...] = PIPELINES

    @classmethod
    def from_keyvalues(cls, lines) -> "SweepConfig":
        cfg = cls()
        for lineno, raw in enumerate(lines, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"spec line {lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "reference_length":
                cfg.reference_length = int(value)
            elif key == "coverages":
                cfg.coverages = tuple(float(v) for v in value.split(","))
            elif key == "read_lengths":
                cfg.read_lengths = tuple(int(v) for v in value.split(","))
            elif key == "error_rates":
                cfg.error_rates = tuple(float(v) for v in value.split(","))
            elif key == "seed":
                cfg.seed = int(value)
            elif key == "profile":
                cfg.profile = value
            elif key == "pipelines":
                cfg.pipelines = tuple(value.split(","))
            else:
                raise ValueError(f"spec line {lineno}: unknown key {key!r}")
        return cfg


def run_sweep(cfg: SweepConfig, workdir: str | None = None) -> list[PipelineRow]:
    """One row per (coverage, read length, error rate, pipeline)."""
    reference = random_reference(cfg.reference_length, cfg.seed)
    rows = []
    for read_length in cfg.read_lengths:
        for error_rate in cfg.error_rates:
            for coverage in cfg.coverages:
                spec = SimulationSpec(reference, coverage, read_length,
                                      error_rate, cfg.seed)
                reads = [qr.bases for qr in simulate_reads(spec)]
                name = f"cov{coverage:g}_len{read_length}_err{error_rate:g}"
                rows.extend(run_pipelines(reads, name, cfg.profile, workdir,
                                          cfg.pipelines))
    return rows


def write_csv(stream, rows: list[PipelineRow]) -> None:
    writer = csv.DictWriter(stream, fieldnames=CSV_FIELDS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row.as_csv())
