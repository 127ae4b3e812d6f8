"""Deterministic toy material for convergence and memorization checks."""

from __future__ import annotations

from .dataset import Corpus
from .midi_io import Melody, NoteEvent


def toy_melody() -> Melody:
    """A 200-note song in which every (pitch, duration) token is unique.

    Unique tokens make the next-token function deterministic, so a model
    that memorizes the song can continue it exactly from any 1-token context.
    """
    notes = [NoteEvent(36 + (i % 60), 1 + (i // 60)) for i in range(200)]
    return Melody(tuple(notes))


def toy_corpus(copies: int = 160) -> Corpus:
    """The toy song repeated; enough tokens for default batch/seq settings."""
    song = toy_melody()
    return Corpus(
        melodies=tuple(song for _ in range(copies)),
        names=tuple(f"toy_{i:03d}" for i in range(copies)),
    )
