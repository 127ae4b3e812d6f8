"""Corpus cleaning and the three training encodings (control, db12, interval).

Each encoding turns a melody corpus into a flat token-index stream X with
next-token targets Y (X shifted by one, wrapping at the end) and a
deterministic token vocabulary.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .midi_io import Melody, NoteEvent

log = logging.getLogger(__name__)

MAGIC = b"MMTD"
FORMAT_VERSION = 1
VARIANTS = ("control", "interval", "db12")
_VARIANT_CODE = {name: i for i, name in enumerate(VARIANTS)}

KIND_ABSOLUTE = "absolute"
KIND_INTERVAL = "interval"
_KIND_CODE = {KIND_ABSOLUTE: 0, KIND_INTERVAL: 1}
_KIND_NAME = {v: k for k, v in _KIND_CODE.items()}


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    """Either an absolute (pitch, duration) or interval (delta, duration) tuple."""

    kind: str
    value: int
    duration: int

    def __post_init__(self):
        if self.kind == KIND_ABSOLUTE and not 0 <= self.value <= 127:
            raise ValueError(f"absolute pitch out of range: {self.value}")
        if self.kind == KIND_INTERVAL and not -127 <= self.value <= 127:
            raise ValueError(f"interval delta out of range: {self.value}")
        if self.kind not in _KIND_CODE:
            raise ValueError(f"unknown token kind {self.kind!r}")
        if not 1 <= self.duration <= 16:
            raise ValueError(f"duration out of range: {self.duration}")


@dataclass(frozen=True)
class Corpus:
    melodies: tuple[Melody, ...]
    names: tuple[str, ...]

    def __post_init__(self):
        if len(self.melodies) != len(self.names):
            raise ValueError("melodies and names must be parallel")
        object.__setattr__(self, "melodies", tuple(self.melodies))
        object.__setattr__(self, "names", tuple(self.names))

    def __len__(self):
        return len(self.melodies)


class TokenVocab:
    """Bijection token <-> index, ordered ascending by (value, duration)."""

    def __init__(self, tokens):
        ordered = sorted(set(tokens), key=lambda t: (t.value, t.duration))
        self._tokens = ordered
        self._index = {tok: i for i, tok in enumerate(ordered)}

    def __len__(self):
        return len(self._tokens)

    def __eq__(self, other):
        return isinstance(other, TokenVocab) and self._tokens == other._tokens

    def index_of(self, token: Token) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise KeyError(f"token {token} not in vocabulary") from None

    def token_of(self, index: int) -> Token:
        return self._tokens[index]

    def __contains__(self, token: Token) -> bool:
        return token in self._index

    @property
    def tokens(self) -> list[Token]:
        return list(self._tokens)


@dataclass
class EncodedDataset:
    variant: str
    X: np.ndarray  # uint32 token indices
    vocab: TokenVocab
    song_boundaries: list[int] = field(default_factory=list)

    @property
    def Y(self) -> np.ndarray:
        """X shifted left by one; the final target wraps to X[0]."""
        return np.concatenate([self.X[1:], self.X[:1]])

    def __eq__(self, other):
        return (
            isinstance(other, EncodedDataset)
            and self.variant == other.variant
            and np.array_equal(self.X, other.X)
            and self.vocab == other.vocab
            and self.song_boundaries == other.song_boundaries
        )


def clean(corpus: Corpus) -> Corpus:
    """Keep melodies with at least 12 notes and all durations at most 16."""
    kept_m, kept_n = [], []
    for melody, name in zip(corpus.melodies, corpus.names):
        if len(melody) >= 12 and all(n.duration <= 16 for n in melody):
            kept_m.append(melody)
            kept_n.append(name)
    return Corpus(tuple(kept_m), tuple(kept_n))


def melody_tokens(melody: Melody) -> list[Token]:
    return [Token(KIND_ABSOLUTE, n.pitch, n.duration) for n in melody.notes]


def interval_tokens(melody: Melody) -> list[Token]:
    """Leading (0, d1) anchor followed by pitch deltas with their durations."""
    notes = melody.notes
    toks = [Token(KIND_INTERVAL, 0, notes[0].duration)]
    for prev, cur in zip(notes, notes[1:]):
        toks.append(Token(KIND_INTERVAL, cur.pitch - prev.pitch, cur.duration))
    return toks


def decode_intervals(tokens: list[Token], start_pitch: int) -> tuple[Melody, int]:
    """Reconstruct a melody from interval tokens anchored at start_pitch.

    The first token's delta is ignored (it only carries the first duration).
    Out-of-range pitches are clamped to 0..127; returns (melody, clamp count).
    """
    if not tokens:
        raise ValueError("no tokens to decode")
    if not 0 <= start_pitch <= 127:
        raise ValueError(f"start_pitch out of range: {start_pitch}")
    clamped = 0
    pitch = start_pitch
    notes = [NoteEvent(pitch, tokens[0].duration)]
    for tok in tokens[1:]:
        pitch += tok.value
        if pitch < 0 or pitch > 127:
            pitch = min(127, max(0, pitch))
            clamped += 1
        notes.append(NoteEvent(pitch, tok.duration))
    if clamped:
        log.warning("decode_intervals clamped %d out-of-range pitches", clamped)
    return Melody(tuple(notes)), clamped


def _encode(variant: str, songs: list[list[Token]]) -> EncodedDataset:
    if not songs:
        raise DatasetError("empty corpus")
    all_tokens = [tok for song in songs for tok in song]
    vocab = TokenVocab(all_tokens)
    X = np.array([vocab.index_of(t) for t in all_tokens], dtype=np.uint32)
    boundaries = []
    pos = 0
    for song in songs:
        boundaries.append(pos)
        pos += len(song)
    return EncodedDataset(variant=variant, X=X, vocab=vocab, song_boundaries=boundaries)


def build_control(corpus: Corpus) -> EncodedDataset:
    """Concatenated absolute tokens of the original songs."""
    if not corpus.melodies:
        raise DatasetError("empty corpus")
    return _encode("control", [melody_tokens(m) for m in corpus.melodies])


def build_db12(corpus: Corpus) -> EncodedDataset:
    """Each song at all 12 upward chromatic transpositions (+0..+11).

    Copies whose transposed pitch would exceed 127 are dropped with a warning.
    """
    if not corpus.melodies:
        raise DatasetError("empty corpus")
    songs = []
    dropped = 0
    for melody, name in zip(corpus.melodies, corpus.names):
        top = max(n.pitch for n in melody.notes)
        for k in range(12):
            if top + k > 127:
                dropped += 1
                continue
            songs.append(melody_tokens(melody.transpose(k)))
        if top + 11 > 127:
            log.warning("%s: dropped transpositions above +%d", name, 127 - top)
    if dropped:
        log.warning("db12: %d out-of-range transposed copies dropped", dropped)
    return _encode("db12", songs)


def build_intervals(corpus: Corpus) -> EncodedDataset:
    """Relative-change encoding: pitch deltas with absolute durations."""
    if not corpus.melodies:
        raise DatasetError("empty corpus")
    return _encode("interval", [interval_tokens(m) for m in corpus.melodies])


BUILDERS = {
    "control": build_control,
    "db12": build_db12,
    "interval": build_intervals,
}


def split_train_val(
    ds: EncodedDataset, val_fraction: float
) -> tuple[EncodedDataset, EncodedDataset]:
    """Deterministic split at the song boundary nearest (1-f)*|X|."""
    if not 0 < val_fraction < 0.5:
        raise ValueError(f"val_fraction must be in (0, 0.5), got {val_fraction}")
    if len(ds.song_boundaries) < 2:
        raise DatasetError("need at least 2 songs to split")
    target = (1.0 - val_fraction) * len(ds.X)
    candidates = ds.song_boundaries[1:]  # never split at 0
    cut = min(candidates, key=lambda b: (abs(b - target), b))
    train = EncodedDataset(
        variant=ds.variant,
        X=ds.X[:cut].copy(),
        vocab=ds.vocab,
        song_boundaries=[b for b in ds.song_boundaries if b < cut],
    )
    val = EncodedDataset(
        variant=ds.variant,
        X=ds.X[cut:].copy(),
        vocab=ds.vocab,
        song_boundaries=[b - cut for b in ds.song_boundaries if b >= cut],
    )
    return train, val


def save_dataset(ds: EncodedDataset, path: str | Path) -> None:
    """Write the binary dataset file plus a JSON mirror alongside."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HB", FORMAT_VERSION, _VARIANT_CODE[ds.variant]))
        fh.write(struct.pack("<I", len(ds.vocab)))
        for tok in ds.vocab.tokens:
            fh.write(struct.pack("<BhB", _KIND_CODE[tok.kind], tok.value, tok.duration))
        fh.write(struct.pack("<Q", len(ds.X)))
        fh.write(ds.X.astype("<u4").tobytes())
        fh.write(struct.pack("<I", len(ds.song_boundaries)))
        for b in ds.song_boundaries:
            fh.write(struct.pack("<Q", b))
    mirror = {
        "variant": ds.variant,
        "vocab": [[t.kind, t.value, t.duration] for t in ds.vocab.tokens],
        "X": [int(i) for i in ds.X],
        "song_boundaries": ds.song_boundaries,
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(mirror))


def load_dataset(path: str | Path) -> EncodedDataset:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise DatasetError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    pos = 4
    version, variant_code = struct.unpack_from("<HB", data, pos)
    pos += 3
    if version != FORMAT_VERSION:
        raise DatasetError(f"unsupported dataset version {version}")
    try:
        variant = VARIANTS[variant_code]
    except IndexError:
        raise DatasetError(f"unknown variant code {variant_code}") from None
    (vocab_size,) = struct.unpack_from("<I", data, pos)
    pos += 4
    tokens = []
    for _ in range(vocab_size):
        kind, value, duration = struct.unpack_from("<BhB", data, pos)
        pos += 4
        tokens.append(Token(_KIND_NAME[kind], value, duration))
    (xlen,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    if pos + 4 * xlen > len(data):
        raise DatasetError(f"corrupt length field: {xlen} tokens past end of file")
    X = np.frombuffer(data, dtype="<u4", count=xlen, offset=pos).astype(np.uint32)
    pos += 4 * xlen
    (nb,) = struct.unpack_from("<I", data, pos)
    pos += 4
    boundaries = [struct.unpack_from("<Q", data, pos + 8 * i)[0] for i in range(nb)]
    vocab = TokenVocab(tokens)
    if len(vocab) != vocab_size:
        raise DatasetError("duplicate tokens in stored vocabulary")
    if X.size and int(X.max()) >= vocab_size:
        raise DatasetError("token index out of vocabulary range")
    return EncodedDataset(variant=variant, X=X, vocab=vocab, song_boundaries=boundaries)
