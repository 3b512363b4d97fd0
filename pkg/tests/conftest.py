import random

import pytest

from typolex.inventory import PhonemeInventory, SamplerConfig, sample_inventory
from typolex.phoible import bundled_phoible_path, parse_phoible_csv
from typolex.semantics import load_ontology


@pytest.fixture(scope="session")
def db():
    return parse_phoible_csv(bundled_phoible_path())


@pytest.fixture(scope="session")
def inventory(db):
    return sample_inventory(db, SamplerConfig(seed=7))


@pytest.fixture(scope="session")
def tiny_inventory(db):
    """Hand-picked inventory with known sonority and place classes."""
    return PhonemeInventory.from_segments(db, ["p", "t", "k", "m", "n", "s", "l", "r", "j", "w"], ["a", "i", "u"])


@pytest.fixture(scope="session")
def ontology():
    return load_ontology()


@pytest.fixture
def rng():
    return random.Random(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
