"""Rhythm-aware geometric tonality metrics over sliding onset-grid spans.

A melody is laid out on a 16-cells-per-bar grid (pitch+1 at onsets, zero
elsewhere) and scored with three tonality indicators, each averaged over
sliding windows of `n` cells stepped by `m`:

  CMM   mean absolute semitone interval between consecutive onsets (1 ideal)
  LM    closeness of each span's distinct-pitch count to the 5..8 range
  CENTR share of each span's onsets taken by its most frequent pitch
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .midi_io import Melody


@dataclass(frozen=True)
class SpanConfig:
    """Sliding-window geometry: window of n cells advanced by m cells."""

    n: int = 32
    m: int = 4

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.m > self.n:
            raise ValueError(f"invalid span config n={self.n} m={self.m}")


@dataclass(frozen=True)
class MetricTriple:
    cmm: float
    lm: float
    centr: float

    def as_dict(self) -> dict:
        return {"cmm": self.cmm, "lm": self.lm, "centr": self.centr}

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.cmm, self.lm, self.centr)


@dataclass(frozen=True)
class MetricStats:
    """Per-metric mean and population standard deviation."""

    mean: MetricTriple
    std: MetricTriple
    count: int

    def as_dict(self) -> dict:
        return {
            "cmm": {"mean": self.mean.cmm, "std": self.std.cmm},
            "lm": {"mean": self.mean.lm, "std": self.std.lm},
            "centr": {"mean": self.mean.centr, "std": self.std.centr},
            "count": self.count,
        }


def to_onset_grid(melody: Melody) -> list[int]:
    """Resolution-16 grid: cells[t] = pitch+1 at onsets, 0 elsewhere."""
    if not melody.notes:
        raise ValueError("cannot build an onset grid from an empty melody")
    grid = [0] * melody.total_duration
    t = 0
    for note in melody.notes:
        grid[t] = note.pitch + 1
        t += note.duration
    return grid


def span_count(song_len: int, cfg: SpanConfig = SpanConfig()) -> int:
    """Number of sliding windows covering a grid of `song_len` cells."""
    if song_len < 1:
        raise ValueError("song_len must be >= 1")
    if song_len <= cfg.n:
        return 1
    return (song_len - cfg.n) // cfg.m + 1


def spans(grid: list[int], cfg: SpanConfig = SpanConfig()) -> list[list[int]]:
    """Window i covers cells [i*m, i*m+n); the final window runs to the grid
    end so every cell is observed."""
    if not grid:
        raise ValueError("empty grid")
    count = span_count(len(grid), cfg)
    out = []
    for i in range(count):
        start = i * cfg.m
        end = len(grid) if i == count - 1 else start + cfg.n
        out.append(grid[start:end])
    return out


def _span_onsets(span: list[int]) -> list[int]:
    return [cell - 1 for cell in span if cell > 0]


def cmm(grid: list[int], cfg: SpanConfig = SpanConfig(), *, global_mode: bool = False) -> float:
    """Conjunct melodic motion: mean |pitch step| between consecutive onsets.

    Scored per span by default; `global_mode` averages over the whole melody
    instead (the two agree on constant-interval melodies).
    """
    all_onsets = _span_onsets(grid)
    if len(all_onsets) < 2:
        raise ValueError("cmm needs at least 2 onsets")
    global_mean = sum(
        abs(b - a) for a, b in zip(all_onsets, all_onsets[1:])
    ) / (len(all_onsets) - 1)
    if global_mode:
        return global_mean
    scores = []
    for span in spans(grid, cfg):
        onsets = _span_onsets(span)
        if len(onsets) < 2:
            continue
        scores.append(
            sum(abs(b - a) for a, b in zip(onsets, onsets[1:])) / (len(onsets) - 1)
        )
    if not scores:
        return global_mean
    return sum(scores) / len(scores)


def lm(grid: list[int], cfg: SpanConfig = SpanConfig()) -> float:
    """Limited macroharmony: distinct onset pitches per span scored against
    the 5..8 sweet spot (5/d below, 1 inside, d/8 above)."""
    scores = []
    for span in spans(grid, cfg):
        d = len(set(_span_onsets(span)))
        if d == 0:
            continue
        if d < 5:
            scores.append(5.0 / d)
        elif d <= 8:
            scores.append(1.0)
        else:
            scores.append(d / 8.0)
    if not scores:
        raise ValueError("no span contains an onset")
    return sum(scores) / len(scores)


def centr(grid: list[int], cfg: SpanConfig = SpanConfig()) -> float:
    """Centricity: mean modal-pitch share of onsets per span."""
    scores = []
    for span in spans(grid, cfg):
        onsets = _span_onsets(span)
        if not onsets:
            continue
        counts: dict[int, int] = {}
        for p in onsets:
            counts[p] = counts.get(p, 0) + 1
        # modal pitch; ties go to the lower pitch (reporting only)
        modal = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
        scores.append(modal[1] / len(onsets))
    if not scores:
        raise ValueError("no span contains an onset")
    return sum(scores) / len(scores)


def evaluate(
    melody: Melody, cfg: SpanConfig = SpanConfig(), *, cmm_global: bool = False
) -> MetricTriple:
    """Score one melody with all three metrics."""
    if len(melody) < 2:
        raise ValueError("evaluate needs a melody of at least 2 notes")
    grid = to_onset_grid(melody)
    return MetricTriple(
        cmm=cmm(grid, cfg, global_mode=cmm_global),
        lm=lm(grid, cfg),
        centr=centr(grid, cfg),
    )


@dataclass
class CorpusEvaluation:
    triples: list[MetricTriple]
    stats: MetricStats
    skipped: int
    config: SpanConfig = field(default_factory=SpanConfig)

    def as_dict(self) -> dict:
        return {
            "per_melody": [t.as_dict() for t in self.triples],
            "stats": self.stats.as_dict(),
            "skipped": self.skipped,
            "config": {"n": self.config.n, "m": self.config.m},
        }


def aggregate(triples: list[MetricTriple]) -> MetricStats:
    """Mean and population std of a list of metric triples."""
    if not triples:
        raise ValueError("no triples to aggregate")
    k = len(triples)
    means = [sum(t.as_tuple()[i] for t in triples) / k for i in range(3)]
    stds = [
        math.sqrt(sum((t.as_tuple()[i] - means[i]) ** 2 for t in triples) / k)
        for i in range(3)
    ]
    return MetricStats(mean=MetricTriple(*means), std=MetricTriple(*stds), count=k)


def corpus_stats(
    melodies: list[Melody], cfg: SpanConfig = SpanConfig(), *, cmm_global: bool = False
) -> CorpusEvaluation:
    """Evaluate every melody; unevaluable ones are skipped and counted."""
    triples = []
    skipped = 0
    for melody in melodies:
        try:
            triples.append(evaluate(melody, cfg, cmm_global=cmm_global))
        except ValueError:
            skipped += 1
    if not triples:
        raise ValueError("no evaluable melodies in corpus")
    return CorpusEvaluation(
        triples=triples, stats=aggregate(triples), skipped=skipped, config=cfg
    )
