#!/usr/bin/env python3
"""Freeze brute-force metric triples for the committed fixture melodies."""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from oracles import brute_triple  # noqa: E402


def fixture_melodies():
    fixtures = {}
    # constant pitch, quarter notes over 4 bars
    fixtures["constant_pitch"] = [(60, 4)] * 16
    # chromatic scale C4..B4 in quarters (3 bars, every step one semitone)
    fixtures["chromatic_quarters"] = [(60 + i, 4) for i in range(12)]
    # major arpeggio repeated over 3 bars
    fixtures["arpeggio"] = [(60, 4), (64, 4), (67, 4)] * 4
    # the three-note sampler seed
    fixtures["seed_melody"] = [(62, 8), (64, 4), (65, 4)]
    # two-bar alternation of two pitches in eighths
    fixtures["alternating_eighths"] = [(60, 2), (67, 2)] * 8
    # whole-note drones on shifting pitches
    fixtures["whole_note_drift"] = [(60 + 2 * i, 16) for i in range(6)]
    # wide leaps, mixed durations
    fixtures["wide_leaps"] = [(48, 4), (72, 2), (50, 8), (74, 2), (52, 4), (76, 4),
                             (54, 1), (78, 1), (56, 2), (80, 16)]
    # twelve-tone row in sixteenths, four times
    fixtures["twelve_tone_sixteenths"] = [(60 + i, 1) for i in range(12)] * 4
    # descending minor scale in halves
    fixtures["descending_halves"] = [(72, 8), (70, 8), (69, 8), (67, 8),
                                     (65, 8), (63, 8), (62, 8), (60, 8)]
    # uneven phrase: repeated motif with a long tail note
    fixtures["motif_with_tail"] = ([(64, 2), (66, 2), (67, 4), (64, 2), (66, 2),
                                    (69, 4)] * 3 + [(64, 16)])
    return fixtures


def main():
    out = {}
    for name, pairs in fixture_melodies().items():
        cmm, lm, centr = brute_triple(pairs)
        out[name] = {
            "pairs": pairs,
            "cmm": cmm,
            "lm": lm,
            "centr": centr,
        }
        print(f"{name:<24} cmm={cmm:.6f} lm={lm:.6f} centr={centr:.6f}")
    path = ROOT / "tests" / "data" / "metric_fixtures.json"
    path.write_text(json.dumps(out, indent=1))
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
