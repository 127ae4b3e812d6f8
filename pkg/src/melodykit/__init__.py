"""Monophonic melody generation and geometric tonality evaluation workbench."""

from .midi_io import Melody, NoteEvent, RawNote, parse_midi, quantize, write_midi
from .metrics import MetricStats, MetricTriple, SpanConfig, corpus_stats, evaluate

__version__ = "0.1.0"

__all__ = [
    "Melody",
    "NoteEvent",
    "RawNote",
    "parse_midi",
    "quantize",
    "write_midi",
    "MetricStats",
    "MetricTriple",
    "SpanConfig",
    "corpus_stats",
    "evaluate",
    "__version__",
]
