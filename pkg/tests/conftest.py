import random

import pytest

from bwtkit.model import ReadCollection

TOY_READS = ("TAGACCT", "GATACCT", "TACCACT", "GAGACCT")
TOY_BWT = b"TTTTTGTGCTGGCAAAACCACAA$$CCCC$A$"
TOY_BWT_PERMUTED = b"TTTTTGGTCGTGCAAAAACCCAA$$CCCC$A$"
# segment-wise: 0111 | 00110010 | 000110111 | 0100 | 0111000
TOY_SAP = bytearray(int(c) for c in "01110011001000011011101000111000")

RLO_READS = ("TACCACT", "GAGACCT", "TAGACCT", "GATACCT")


@pytest.fixture
def toy_collection():
    return ReadCollection.from_strings(TOY_READS)


def random_collection(rng: random.Random, max_reads=40, max_len=16) -> ReadCollection:
    """Random ACGT collection with ~5% N, occasional duplicate reads."""
    m = rng.randint(1, max_reads)
    reads = []
    for _ in range(m):
        length = rng.randint(1, max_len)
        reads.append("".join(
            "N" if rng.random() < 0.05 else rng.choice("ACGT")
            for _ in range(length)))
    if m > 1 and rng.random() < 0.3:
        reads[rng.randrange(m)] = reads[rng.randrange(m)]
    return ReadCollection.from_strings(reads)


CRITERION_LINES = []


def pytest_terminal_summary(terminalreporter):
    """Surface the acceptance pass/fail lines after capture ends."""
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
