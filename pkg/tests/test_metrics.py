import numpy as np
import pytest

import oracles
from conftest import random_melody
from melodykit.metrics import (
    MetricTriple,
    SpanConfig,
    aggregate,
    centr,
    cmm,
    corpus_stats,
    evaluate,
    lm,
    span_count,
    spans,
    to_onset_grid,
)
from melodykit.midi_io import Melody


def grid_of(pairs):
    return to_onset_grid(Melody.from_pairs(pairs))


class TestOnsetGrid:
    def test_two_quarters(self):
        assert grid_of([(60, 4), (62, 4)]) == [61, 0, 0, 0, 63, 0, 0, 0]

    def test_sampler_seed_layout(self):
        grid = grid_of([(62, 8), (64, 4), (65, 4)])
        assert len(grid) == 16
        assert [i for i, c in enumerate(grid) if c] == [0, 8, 12]

    def test_whole_note(self):
        grid = grid_of([(60, 16)])
        assert len(grid) == 16 and grid[0] == 61 and not any(grid[1:])

    def test_empty_melody(self):
        with pytest.raises(ValueError):
            to_onset_grid(Melody())


class TestSpanCount:
    def test_single_span(self):
        assert span_count(32) == 1

    def test_aligned(self):
        assert span_count(48) == 5

    def test_unaligned(self):
        assert span_count(50) == 5

    def test_matches_brute_force_defaults(self):
        for length in range(1, 201):
            assert span_count(length) == oracles.brute_span_count(length, 32, 4)

    def test_matches_brute_force_random_configs(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            n = int(rng.integers(1, 64))
            m = int(rng.integers(1, n + 1))
            cfg = SpanConfig(n=n, m=m)
            for length in range(1, 201):
                assert span_count(length, cfg) == oracles.brute_span_count(length, n, m)


class TestSpans:
    def test_whole_grid_single_window(self):
        grid = list(range(1, 33))
        assert spans(grid) == [grid]

    def test_window_starts(self):
        grid = list(range(1, 49))
        wins = spans(grid)
        assert len(wins) == 5
        assert [w[0] for w in wins] == [grid[s] for s in (0, 4, 8, 12, 16)]

    def test_full_coverage(self):
        for length in range(33, 201):
            grid = list(range(1, length + 1))
            covered = set()
            wins = spans(grid)
            assert len(wins) == span_count(length)
            pos = 0
            for i, win in enumerate(wins):
                start = i * 4
                covered.update(range(start, start + len(win)))
            assert covered == set(range(length))


class TestCmm:
    def test_chromatic_scale_is_one(self):
        assert cmm(grid_of([(60 + i, 4) for i in range(12)])) == 1.0

    def test_constant_pitch_is_zero(self):
        assert cmm(grid_of([(60, 4)] * 12)) == 0.0

    def test_needs_two_onsets(self):
        with pytest.raises(ValueError):
            cmm(grid_of([(60, 16)]))

    def test_global_mode(self):
        grid = grid_of([(60, 4), (64, 4), (67, 4)] * 4)
        # intervals: 4,3,7 repeating over 11 steps
        assert cmm(grid, global_mode=True) == pytest.approx((4 * (4 + 3 + 7) - 7) / 11)


class TestLm:
    def test_five_distinct_is_perfect(self):
        assert lm(grid_of([(60 + i, 4) for i in range(5)] * 2)) == 1.0

    def test_constant_pitch(self):
        assert lm(grid_of([(60, 4)] * 12)) == 5.0

    def test_twelve_tone_bar(self):
        grid = grid_of([(60 + i, 1) for i in range(12)] * 4)
        # the first full 32-cell windows hold two full rows: d = 12 -> 1.5
        assert lm(grid[:32], SpanConfig()) == 1.5


class TestCentr:
    def test_constant_pitch(self):
        assert centr(grid_of([(60, 4)] * 12)) == 1.0

    def test_modal_ratio(self):
        assert centr(grid_of([(60, 4), (62, 4), (60, 4), (64, 4)])) == 0.5


class TestEvaluate:
    def test_constant_pitch_triple(self):
        triple = evaluate(Melody.from_pairs([(60, 4)] * 16))
        assert triple.as_tuple() == (0.0, 5.0, 1.0)

    def test_chromatic_scale(self):
        triple = evaluate(Melody.from_pairs([(60 + i, 4) for i in range(12)]))
        assert triple.cmm == 1.0
        assert triple.centr < 0.2

    def test_fixture_melodies(self, metric_fixtures):
        for name, fx in metric_fixtures.items():
            triple = evaluate(Melody.from_pairs(fx["pairs"]))
            assert triple.cmm == pytest.approx(fx["cmm"], abs=1e-9), name
            assert triple.lm == pytest.approx(fx["lm"], abs=1e-9), name
            assert triple.centr == pytest.approx(fx["centr"], abs=1e-9), name

    def test_matches_oracle_on_random_melodies(self):
        rng = np.random.default_rng(22)
        for _ in range(30):
            melody = random_melody(rng)
            triple = evaluate(melody)
            expected = oracles.brute_triple(melody.to_pairs())
            assert triple.as_tuple() == pytest.approx(expected, abs=1e-12)

    def test_transposition_invariance_bitwise(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            melody = random_melody(rng, low=40, high=90)
            base = evaluate(melody)
            for k in (-12, -5, 3, 7, 12):
                assert evaluate(melody.transpose(k)) == base

    def test_determinism(self):
        melody = Melody.from_pairs([(60, 4), (67, 2), (64, 8), (62, 2)] * 4)
        assert evaluate(melody) == evaluate(melody)


class TestCorpusStats:
    def test_repeated_melody(self):
        melody = Melody.from_pairs([(60 + i, 4) for i in range(12)])
        result = corpus_stats([melody] * 100)
        assert result.stats.count == 100
        assert result.stats.std.as_tuple() == (0.0, 0.0, 0.0)
        assert result.stats.mean == evaluate(melody)

    def test_two_point_statistics(self):
        stats = aggregate([MetricTriple(1, 1, 1), MetricTriple(3, 3, 0.5)])
        assert stats.mean.as_tuple() == (2.0, 2.0, 0.75)
        assert stats.std.as_tuple() == (1.0, 1.0, 0.25)

    def test_unevaluable_melodies_skipped(self):
        good = Melody.from_pairs([(60 + i, 4) for i in range(12)])
        bad = Melody.from_pairs([(60, 16)])  # single note
        result = corpus_stats([good, bad, good])
        assert result.skipped == 1
        assert result.stats.count == 2

    def test_all_unevaluable(self):
        with pytest.raises(ValueError):
            corpus_stats([Melody.from_pairs([(60, 16)])])

    def test_report_schema(self):
        melody = Melody.from_pairs([(60 + i, 4) for i in range(12)])
        d = corpus_stats([melody]).as_dict()
        assert set(d) == {"per_melody", "stats", "skipped", "config"}
        assert d["config"] == {"n": 32, "m": 4}
        assert set(d["stats"]["cmm"]) == {"mean", "std"}
