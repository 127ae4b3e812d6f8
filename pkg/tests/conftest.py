import json
import sys
from pathlib import Path

import numpy as np
import pytest

TESTS_DIR = Path(__file__).resolve().parent
REPO_ROOT = TESTS_DIR.parent
sys.path.insert(0, str(TESTS_DIR))  # make `oracles` importable


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return REPO_ROOT / "corpus"


@pytest.fixture(scope="session")
def metric_fixtures() -> dict:
    return json.loads((TESTS_DIR / "data" / "metric_fixtures.json").read_text())


@pytest.fixture(scope="session")
def midi_reference() -> dict:
    return json.loads((TESTS_DIR / "data" / "001_ref.json").read_text())


def random_melody(rng: np.random.Generator, min_notes=12, max_notes=40,
                  low=30, high=100):
    """Grid-aligned random melody for property tests."""
    from melodykit.midi_io import Melody, NoteEvent

    count = int(rng.integers(min_notes, max_notes + 1))
    notes = [
        NoteEvent(int(rng.integers(low, high + 1)), int(rng.choice([1, 2, 4, 8, 16])))
        for _ in range(count)
    ]
    return Melody(tuple(notes))
