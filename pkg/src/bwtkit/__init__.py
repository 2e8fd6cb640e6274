"""Lossless BWT-based compression toolkit for DNA read collections."""

from .model import ReadCollection, runs, sap_intervals, validate_bwt
from .oracle import oracle_bwt_sap, oracle_rlo_permutation
from .bcr import BuildOptions, PackedReads, build_bwt_sap, build_to_files
from .reorder import PermutationStrategy, rlo_sort, run_stats, sap_permute
from .invert import invert_bwt, lf_map
from .codec import compress, decompress, bits_per_base, external_compress

__all__ = [
    "ReadCollection", "runs", "sap_intervals", "validate_bwt",
    "oracle_bwt_sap", "oracle_rlo_permutation",
    "BuildOptions", "PackedReads", "build_bwt_sap", "build_to_files",
    "PermutationStrategy", "rlo_sort", "run_stats", "sap_permute",
    "invert_bwt", "lf_map",
    "compress", "decompress", "bits_per_base", "external_compress",
]

__version__ = "0.1.0"
