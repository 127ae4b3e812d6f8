"""Seeded sampling, batch song generation, and model comparison.

Sampling runs in two phases: the seed is fed through the network to set the
recurrent state, then tokens are drawn one at a time from the temperature-
scaled softmax and fed back. Interval-encoded models are decoded back to
absolute pitches anchored at the seed's first pitch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .dataset import (
    KIND_INTERVAL,
    TokenVocab,
    decode_intervals,
    interval_tokens,
    melody_tokens,
)
from .metrics import (
    CorpusEvaluation,
    MetricTriple,
    SpanConfig,
    aggregate,
    corpus_stats,
)
from .midi_io import Melody, NoteEvent

ARGMAX_TEMPERATURE = 0.01  # at or below this, sampling switches to argmax

DEFAULT_SEED_MELODY = Melody.from_pairs([(62, 8), (64, 4), (65, 4)])  # D4 half, E4/F4 quarters


@dataclass(frozen=True)
class SamplerConfig:
    seed_melody: Melody = DEFAULT_SEED_MELODY
    notes_to_generate: int = 30
    temperature: float = 1.0
    rng_seed: int = 0
    songs: int = 100

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.notes_to_generate < 0 or self.songs < 1:
            raise ValueError("notes_to_generate >= 0 and songs >= 1 required")


def _seed_tokens(vocab: TokenVocab, seed_melody: Melody) -> list:
    interval_vocab = any(t.kind == KIND_INTERVAL for t in vocab.tokens)
    toks = interval_tokens(seed_melody) if interval_vocab else melody_tokens(seed_melody)
    for tok in toks:
        if tok not in vocab:
            raise KeyError(f"seed token {tok} is not in the model vocabulary")
    return toks


def sample(
    params: dict,
    cfg: nn.ModelConfig,
    vocab: TokenVocab,
    sampler: SamplerConfig,
    rng: np.random.Generator | None = None,
) -> Melody:
    """Generate one melody: the seed followed by `notes_to_generate` notes."""
    if rng is None:
        rng = np.random.default_rng(sampler.rng_seed)
    seed_toks = _seed_tokens(vocab, sampler.seed_melody)
    interval_vocab = seed_toks[0].kind == KIND_INTERVAL

    state = nn.zero_state(cfg, batch=1)
    indices = [vocab.index_of(t) for t in seed_toks]
    logits = None
    # phase 1: warm the state on the seed
    for idx in indices:
        _, logits, state, _ = nn.forward_sequence(params, cfg, state, [[idx]])
    generated = []
    for _ in range(sampler.notes_to_generate):
        row = logits[0, -1, :].astype(np.float64)
        if sampler.temperature <= ARGMAX_TEMPERATURE:
            idx = int(np.argmax(row))
        else:
            scaled = row / sampler.temperature
            scaled -= scaled.max()
            p = np.exp(scaled)
            p /= p.sum()
            idx = int(rng.choice(len(p), p=p))
        generated.append(idx)
        _, logits, state, _ = nn.forward_sequence(params, cfg, state, [[idx]])

    all_tokens = seed_toks + [vocab.token_of(i) for i in generated]
    if interval_vocab:
        melody, _ = decode_intervals(all_tokens, sampler.seed_melody.notes[0].pitch)
        return melody
    return Melody(tuple(NoteEvent(t.value, t.duration) for t in all_tokens))


def generate_corpus(
    params: dict, cfg: nn.ModelConfig, vocab: TokenVocab, sampler: SamplerConfig
) -> list[Melody]:
    """Generate `songs` melodies on independent per-song RNG streams."""
    melodies = []
    for song_index in range(sampler.songs):
        rng = np.random.default_rng([sampler.rng_seed, song_index])
        melodies.append(sample(params, cfg, vocab, sampler, rng=rng))
    return melodies


def representative(triples: list[MetricTriple]) -> int:
    """Index of the triple nearest (Euclidean) to the mean; ties go low."""
    if not triples:
        raise ValueError("no triples")
    stats = aggregate(triples)
    mean = np.array(stats.mean.as_tuple())
    dists = [float(np.linalg.norm(np.array(t.as_tuple()) - mean)) for t in triples]
    return int(np.argmin(dists))


@dataclass
class GenerationReport:
    name: str
    evaluation: CorpusEvaluation
    representative_index: int
    sampler: SamplerConfig = field(default_factory=SamplerConfig)

    @property
    def representative_triple(self) -> MetricTriple:
        return self.evaluation.triples[self.representative_index]

    def as_dict(self) -> dict:
        d = self.evaluation.as_dict()
        d.update(
            {
                "name": self.name,
                "representative_index": self.representative_index,
                "representative": self.representative_triple.as_dict(),
                "sampler": {
                    "seed_melody": self.sampler.seed_melody.to_pairs(),
                    "notes_to_generate": self.sampler.notes_to_generate,
                    "temperature": self.sampler.temperature,
                    "rng_seed": self.sampler.rng_seed,
                    "songs": self.sampler.songs,
                },
            }
        )
        return d


def report_from_melodies(
    name: str,
    melodies: list[Melody],
    sampler: SamplerConfig,
    span_cfg: SpanConfig = SpanConfig(),
) -> GenerationReport:
    evaluation = corpus_stats(melodies, span_cfg)
    rep = representative(evaluation.triples)
    return GenerationReport(
        name=name, evaluation=evaluation, representative_index=rep, sampler=sampler
    )


def _flag_best(reports: list[GenerationReport]) -> dict[str, int]:
    """Best mean per metric: CMM and LM closest to 1, CENTR maximal."""
    cmms = [r.evaluation.stats.mean.cmm for r in reports]
    lms = [r.evaluation.stats.mean.lm for r in reports]
    centrs = [r.evaluation.stats.mean.centr for r in reports]
    return {
        "cmm": int(np.argmin([abs(v - 1.0) for v in cmms])),
        "lm": int(np.argmin([abs(v - 1.0) for v in lms])),
        "centr": int(np.argmax(centrs)),
    }


def compare_models(reports: list[GenerationReport]) -> tuple[str, dict]:
    """Aligned comparison table (text) and its JSON twin, best means flagged."""
    if not reports:
        raise ValueError("no reports to compare")
    flags = _flag_best(reports)
    header = f"{'model':<20} {'CMM':>16} {'LM':>16} {'CENTR':>16}"
    lines = [header, "-" * len(header)]
    rows = []
    for i, rep in enumerate(reports):
        stats = rep.evaluation.stats
        cells = {}
        for metric in ("cmm", "lm", "centr"):
            mean = getattr(stats.mean, metric)
            std = getattr(stats.std, metric)
            mark = " *" if flags[metric] == i else "  "
            cells[metric] = f"{mean:.2f} +/- {std:.2f}{mark}"
        lines.append(
            f"{rep.name:<20} {cells['cmm']:>16} {cells['lm']:>16} {cells['centr']:>16}"
        )
        rows.append(
            {
                "name": rep.name,
                "stats": stats.as_dict(),
                "best": [m for m in ("cmm", "lm", "centr") if flags[m] == i],
            }
        )
    table = "\n".join(lines)
    return table, {"rows": rows, "best": flags}


def save_manifest(path, melodies: list[Melody], report: GenerationReport) -> None:
    manifest = {
        "songs": [f"song_{i:03d}.mid" for i in range(len(melodies))],
        "report": report.as_dict(),
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
