#!/usr/bin/env python3
"""Generate the bundled mini-corpus of monophonic MIDI files.

Deterministic random-walk melodies; rerunning reproduces the same files.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from melodykit.midi_io import Melody, NoteEvent, write_midi

DURATIONS = [1, 2, 2, 4, 4, 4, 8, 16]
SCALE = [0, 2, 4, 5, 7, 9, 11]  # major scale offsets


def make_melody(rng: np.random.Generator) -> Melody:
    root = int(rng.integers(55, 70))
    degree = int(rng.integers(0, 7))
    octave = 0
    notes = []
    for _ in range(int(rng.integers(24, 48))):
        pitch = root + octave * 12 + SCALE[degree]
        pitch = min(108, max(36, pitch))
        notes.append(NoteEvent(pitch, int(rng.choice(DURATIONS))))
        step = int(rng.choice([-2, -1, -1, 1, 1, 2]))
        degree += step
        while degree < 0:
            degree += 7
            octave -= 1
        while degree >= 7:
            degree -= 7
            octave += 1
        octave = max(-1, min(2, octave))
    return Melody(tuple(notes))


def main():
    out = Path(__file__).resolve().parents[1] / "corpus"
    out.mkdir(exist_ok=True)
    rng = np.random.default_rng(20240601)
    melodies = [make_melody(rng) for _ in range(12)]
    # one song opens with the default sampler seed (D4 half, E4/F4 quarters)
    # so the seed's tokens exist in every dataset vocabulary
    opening = [NoteEvent(62, 8), NoteEvent(64, 4), NoteEvent(65, 4)]
    melodies.append(Melody(tuple(opening) + make_melody(rng).notes))
    for i, melody in enumerate(melodies, start=1):
        path = out / f"{i:03d}.mid"
        path.write_bytes(write_midi(melody))
        print(f"{path.name}: {len(melody)} notes, "
              f"pitch {min(n.pitch for n in melody)}..{max(n.pitch for n in melody)}")


if __name__ == "__main__":
    main()
