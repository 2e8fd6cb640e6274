"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O error.
Every subcommand accepts '-' for standard input/output where a single
stream suffices; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import io
import os
import sys
import tempfile

from . import bcr, codec, experiment, ingest, invert, model, reorder
from .reorder import PermutationStrategy

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3

EXTERNAL_ENV = "BWTKIT_EXTERNAL"


class _UsageError(Exception):
    pass


def _open_in(path: str):
    if path == "-":
        return io.BytesIO(sys.stdin.buffer.read())
    return open(path, "rb")


def _write_out(path: str, data: bytes):
    if path == "-":
        sys.stdout.buffer.write(data)
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def _read_collection(path: str, fmt: str) -> model.ReadCollection:
    with _open_in(path) as fh:
        data = fh.read()
    if fmt == "auto":
        fmt = "fastq" if data[:1] == b"@" else "fasta"
    if fmt == "fastq":
        reads = ingest.parse_fastq(io.BytesIO(data))
        return ingest.collection_of(reads)
    return ingest.parse_fasta(io.BytesIO(data))


def _strategy(name: str) -> PermutationStrategy:
    return {
        "sap-sort": PermutationStrategy.SORT_ASCENDING,
        "sap-runext": PermutationStrategy.RUN_EXTENSION,
    }[name]


# --- subcommands ---------------------------------------------------------


def _cmd_bwt(args) -> int:
    collection = _read_collection(args.infile, args.format)
    workdir = args.workdir
    options = bcr.BuildOptions(keep_workdir=args.keep_workdir)
    engine = bcr.build_to_files(collection, workdir, args.out, args.sap, options)
    print(f"bwt: {engine.reads.total_length + engine.reads.m} symbols, "
          f"m={engine.reads.m}", file=sys.stderr)
    return EXIT_OK


def _cmd_permute(args) -> int:
    bwt = model.read_bwt(args.infile) if args.infile != "-" else sys.stdin.buffer.read()
    sap = model.read_sap(args.sap)
    out = reorder.sap_permute(bwt, sap, _strategy(args.strategy))
    _write_out(args.out, out)
    return EXIT_OK


def _cmd_rlo(args) -> int:
    collection = _read_collection(args.infile, args.format)
    ordered = reorder.rlo_sort(collection)
    buf = io.BytesIO()
    invert.write_fasta(buf, ordered)
    _write_out(args.out, buf.getvalue())
    return EXIT_OK


def _cmd_compress(args) -> int:
    with _open_in(args.infile) as fh:
        data = fh.read()
    _write_out(args.out, codec.compress(data, args.profile))
    return EXIT_OK


def _cmd_decompress(args) -> int:
    with _open_in(args.infile) as fh:
        blob = fh.read()
    _write_out(args.out, codec.decompress(blob))
    return EXIT_OK


def _cmd_invert(args) -> int:
    with _open_in(args.infile) as fh:
        bwt = fh.read()
    collection = invert.invert_bwt(bwt)
    buf = io.BytesIO()
    invert.write_fasta(buf, collection)
    _write_out(args.out, buf.getvalue())
    return EXIT_OK


def _cmd_trim(args) -> int:
    with _open_in(args.infile) as fh:
        reads = ingest.parse_fastq(fh)
    trimmed = [ingest.trim_bwa(r, args.threshold) for r in reads]
    kept = [r for r in trimmed if r.bases]
    dropped = len(trimmed) - len(kept)
    if dropped:
        print(f"trim: dropped {dropped} empty reads", file=sys.stderr)
    buf = io.BytesIO()
    ingest.write_fastq(buf, kept)
    _write_out(args.out, buf.getvalue())
    return EXIT_OK


def _cmd_simulate(args) -> int:
    if args.ref:
        with _open_in(args.ref) as fh:
            reference = ingest.parse_fasta(fh).reads[0]
    else:
        reference = ingest.random_reference(args.random_ref, args.seed)
    spec = ingest.SimulationSpec(reference, args.coverage, args.read_length,
                                 args.error, args.seed)
    reads = ingest.simulate_reads(spec)
    buf = io.BytesIO()
    ingest.write_fastq(buf, reads)
    _write_out(args.out, buf.getvalue())
    return EXIT_OK


def _cmd_stats(args) -> int:
    with _open_in(args.infile) as fh:
        bwt = fh.read()
    sap = model.read_sap(args.sap) if args.sap else None
    if args.oracle:
        collection = _read_collection(args.oracle, "auto")
        from .oracle import oracle_bwt_sap

        obwt, osap = oracle_bwt_sap(collection)
        match = "yes" if (obwt == bwt and (sap is None or bytes(osap) == bytes(sap))) else "no"
    stats = reorder.run_stats(bwt, sap)
    pairs = [
        ("length", stats.length),
        ("runs", stats.run_count),
        ("mean_run_length", f"{stats.mean_run_length:.4f}"),
    ]
    if stats.interval_stats is not None:
        pairs.append(("sap_intervals", len(stats.interval_stats)))
        pairs.append(("max_interval_runs", max(r for r, _ in stats.interval_stats)))
    if args.oracle:
        pairs.append(("oracle_match", match))
    command = args.external or os.environ.get(EXTERNAL_ENV)
    if command:
        size = codec.external_compress(bwt, command.split())
        pairs.append(("external_bytes", size))
    if args.csv:
        lines = [",".join(str(k) for k, _ in pairs), ",".join(str(v) for _, v in pairs)]
    else:
        lines = [f"{k}={v}" for k, v in pairs]
    _write_out(args.out, ("\n".join(lines) + "\n").encode())
    return EXIT_OK


def _cmd_experiment(args) -> int:
    if args.spec:
        with open(args.spec) as fh:
            cfg = experiment.SweepConfig.from_keyvalues(fh)
    else:
        cfg = experiment.SweepConfig()
    if args.coverages:
        cfg.coverages = tuple(float(v) for v in args.coverages.split(","))
    if args.read_lengths:
        cfg.read_lengths = tuple(int(v) for v in args.read_lengths.split(","))
    if args.errors:
        cfg.error_rates = tuple(float(v) for v in args.errors.split(","))
    if args.ref_length:
        cfg.reference_length = args.ref_length
    if args.seed is not None:
        cfg.seed = args.seed
    if args.profile:
        cfg.profile = args.profile
    rows = experiment.run_sweep(cfg)
    buf = io.StringIO()
    experiment.write_csv(buf, rows)
    _write_out(args.out, buf.getvalue().encode())
    return EXIT_OK


# --- parser --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bwtkit",
                                     description="BWT-based read set compression toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bwt", help="build the BWT and SAP-array of a read set")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=("auto", "fasta", "fastq"), default="auto")
    p.add_argument("--workdir", required=True)
    p.add_argument("--out", required=True, help="output .bwt path")
    p.add_argument("--sap", required=True, help="output .sap path")
    p.add_argument("--keep-workdir", action="store_true")
    p.set_defaults(func=_cmd_bwt)

    p = sub.add_parser("permute", help="permute BWT symbols within SAP-intervals")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--sap", required=True)
    p.add_argument("--strategy", choices=("sap-sort", "sap-runext"), default="sap-sort")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_permute)

    p = sub.add_parser("rlo", help="sort reads into reverse lexicographic order")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=("auto", "fasta", "fastq"), default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_rlo)

    p = sub.add_parser("compress", help="compress a .bwt stream into a .btc blob")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--profile", choices=sorted(codec.PROFILES), default="rle-huff")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_compress)

    p = sub.add_parser("decompress", help="decode a .btc blob")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_decompress)

    p = sub.add_parser("invert", help="recover reads from a .bwt file as FASTA")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_invert)

    p = sub.add_parser("trim", help="bwa-style quality trimming of FASTQ")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--threshold", type=int, default=15)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_trim)

    p = sub.add_parser("simulate", help="simulate shotgun reads as FASTQ")
    p.add_argument("--ref", help="reference FASTA (first record)")
    p.add_argument("--random-ref", type=int, default=100_000,
                   help="length of a seeded random reference when --ref is absent")
    p.add_argument("--coverage", type=float, required=True)
    p.add_argument("--read-length", type=int, required=True)
    p.add_argument("--error", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("stats", help="run statistics of a .bwt (+ optional .sap)")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--sap")
    p.add_argument("--csv", action="store_true")
    p.add_argument("--oracle", help="small reads file to cross-check against the reference constructor")
    p.add_argument("--external", help="external compressor command for size comparison")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("experiment", help="coverage/error/length sweep, CSV output")
    p.add_argument("--spec", help="key=value sweep spec file")
    p.add_argument("--coverages")
    p.add_argument("--read-lengths")
    p.add_argument("--errors")
    p.add_argument("--ref-length", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--profile", choices=sorted(codec.PROFILES))
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_experiment)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (model.ModelError, ingest.ParseError, codec.CodecError,
            invert.InversionError, bcr.BuildError, ValueError, KeyError) as exc:
        print(f"bwtkit: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"bwtkit: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
