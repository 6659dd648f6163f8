from fractions import Fraction

import pytest

from archscale import (
    build_capacity_table,
    load_architecture,
    synthesize_scale_ladder,
)
from archscale.cli import reference_architecture_path


@pytest.fixture(scope="session")
def reference_arch():
    return load_architecture(reference_architecture_path())


@pytest.fixture(scope="session")
def reference_table(reference_arch):
    return build_capacity_table(reference_arch)


@pytest.fixture(scope="session")
def reference_ladder(reference_table):
    return synthesize_scale_ladder(
        Fraction(60), [Fraction(x) for x in (60, 150, 240, 330)], reference_table)


# Instance counts of the reference deployment ladder: per service, the base
# count followed by the four delta increments.  Frozen here as the oracle
# for table-reproduction tests.
REFERENCE_COUNTS = {
    "MessageReceiver": (1, 1, 0, 1, 1),
    "MessageParser": (1, 1, 0, 1, 1),
    "HeaderAnalyser": (1, 0, 0, 0, 0),
    "LinkAnalyser": (1, 0, 0, 0, 0),
    "TextAnalyser": (1, 0, 0, 0, 0),
    "SentimentAnalyser": (2, 1, 3, 2, 2),
    "VirusScanner": (1, 1, 2, 1, 2),
    "AttachmentManager": (1, 0, 1, 0, 1),
    "ImageAnalyser": (1, 0, 1, 0, 1),
    "NSFWDetector": (1, 1, 2, 1, 2),
    "ImageRecognizer": (1, 1, 2, 1, 2),
    "MessageAnalyser": (1, 1, 2, 1, 2),
}

SCALE_TARGETS = (Fraction(60), Fraction(120), Fraction(210), Fraction(300), Fraction(390))
