"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings.
"""

import json
import time

import numpy as np
import pytest

import oracles
from conftest import random_melody
from melodykit import nn, training
from melodykit.cli import main
from melodykit.dataset import (
    BUILDERS,
    build_control,
    clean,
    decode_intervals,
    interval_tokens,
)
from melodykit.generate import SamplerConfig, representative, sample
from melodykit.metrics import MetricTriple, SpanConfig, evaluate, span_count
from melodykit.midi_io import Melody, melody_from_midi, parse_midi, quantize, write_midi
from melodykit.toy import toy_corpus, toy_melody

PASS_LINE = "ACCEPTANCE {num:>2} {name:<32} PASS ({elapsed:.1f}s)"


def report(num, name, t0):
    print("\n" + PASS_LINE.format(num=num, name=name, elapsed=time.time() - t0))


@pytest.fixture(scope="module")
def bundled_corpus(corpus_dir):
    melodies, names = [], []
    for path in sorted(corpus_dir.glob("*.mid")):
        melodies.append(melody_from_midi(path.read_bytes()))
        names.append(path.name)
    from melodykit.dataset import Corpus

    return clean(Corpus(tuple(melodies), tuple(names)))


def test_01_span_count_oracle():
    t0 = time.time()
    for length in range(1, 201):
        assert span_count(length) == oracles.brute_span_count(length, 32, 4)
    rng = np.random.default_rng(101)
    for _ in range(20):
        n = int(rng.integers(1, 80))
        m = int(rng.integers(1, n + 1))
        cfg = SpanConfig(n=n, m=m)
        for length in range(1, 201):
            assert span_count(length, cfg) == oracles.brute_span_count(length, n, m)
    assert time.time() - t0 < 1.0
    report(1, "span-count oracle", t0)


def test_02_gradient_correctness():
    t0 = time.time()
    for cell in ("lstm", "gru"):
        for layers in (1, 2):
            cfg = nn.ModelConfig(vocab_size=12, cell_type=cell, hidden_units=16,
                                 embedding_dim=8, num_layers=layers)
            result = nn.grad_check(cfg, seq_len=5, fd_h=1e-5)
            assert result.max_error < 1e-5, (cell, layers, result.block_errors)
    assert time.time() - t0 < 30.0
    report(2, "gradient correctness", t0)


def test_03_convergence_and_memorization():
    t0 = time.time()
    data = build_control(toy_corpus(160))
    model = nn.ModelConfig(vocab_size=len(data.vocab), cell_type="lstm",
                           hidden_units=64, seed=0)
    cfg = training.TrainConfig(model=model, epochs=200, checkpoint_every=10**6)
    curve, final, _ = training.train(cfg, data)
    reached = [r.epoch for r in curve if r.train_loss < 0.15]
    assert reached and reached[0] <= 300, "train loss never fell below 0.15"

    song = toy_melody()
    sampler = SamplerConfig(seed_melody=Melody(song.notes[:3]),
                            notes_to_generate=30, temperature=0.001)
    generated = sample(final.params, model, data.vocab, sampler)
    assert generated.notes == song.notes[:33]
    assert time.time() - t0 < 300.0
    report(3, "convergence + memorization", t0)


def test_04_metric_oracles(metric_fixtures):
    t0 = time.time()
    assert len(metric_fixtures) == 10
    for name, fx in metric_fixtures.items():
        triple = evaluate(Melody.from_pairs(fx["pairs"]))
        for metric in ("cmm", "lm", "centr"):
            assert abs(getattr(triple, metric) - fx[metric]) < 1e-9, (name, metric)
    constant = evaluate(Melody.from_pairs([(60, 4)] * 16))
    assert constant.as_tuple() == (0.0, 5.0, 1.0)
    chromatic = evaluate(Melody.from_pairs([(60 + i, 4) for i in range(12)]))
    assert chromatic.cmm == 1.0
    report(4, "metric oracles", t0)


def test_05_transposition_invariance():
    t0 = time.time()
    rng = np.random.default_rng(105)
    for _ in range(50):
        melody = random_melody(rng, low=35, high=95)
        base = evaluate(melody)
        low = min(n.pitch for n in melody)
        high = max(n.pitch for n in melody)
        for _ in range(5):
            k = int(rng.integers(-low, 127 - high + 1))
            assert evaluate(melody.transpose(k)) == base
    report(5, "transposition invariance", t0)


def test_06_dataset_properties(bundled_corpus):
    t0 = time.time()
    built = {name: builder(bundled_corpus) for name, builder in BUILDERS.items()}
    for name, data in built.items():
        X, Y = data.X, data.Y
        assert np.array_equal(Y[:-1], X[1:]), name
        assert Y[-1] == X[0], name
    assert max(n.pitch for m in bundled_corpus.melodies for n in m) <= 115
    assert len(built["db12"].song_boundaries) == 12 * len(built["control"].song_boundaries)
    assert len(built["db12"].X) == 12 * len(built["control"].X)
    for melody in bundled_corpus.melodies:
        restored, clamped = decode_intervals(interval_tokens(melody),
                                             melody.notes[0].pitch)
        assert clamped == 0 and restored == melody
    report(6, "dataset properties", t0)


def test_07_midi_roundtrip(corpus_dir, midi_reference):
    t0 = time.time()
    rng = np.random.default_rng(107)
    for _ in range(100):
        melody = random_melody(rng)
        notes, ppq = parse_midi(write_midi(melody))
        assert quantize(notes, ppq) == melody
    notes, ppq = parse_midi((corpus_dir / "001.mid").read_bytes())
    dumped = [[n.onset_ticks, n.duration_ticks, n.pitch] for n in notes]
    assert ppq == midi_reference["ppq"]
    assert dumped == midi_reference["notes"]
    report(7, "midi roundtrip", t0)


def test_08_representative_selection():
    t0 = time.time()
    rng = np.random.default_rng(108)
    triples = [MetricTriple(*rng.uniform(0, 3, 3)) for _ in range(100)]
    assert representative(triples) == \
        oracles.brute_representative([t.as_tuple() for t in triples])
    # tie case: duplicated nearest-to-mean triples resolve to the lowest index
    tied = [MetricTriple(2.0, 2.0, 0.5)] * 4 + [MetricTriple(1.0, 3.0, 0.1)]
    assert representative(tied) == oracles.brute_representative(
        [t.as_tuple() for t in tied]) == 0
    assert representative([MetricTriple(1, 1, 1)] * 7) == 0
    report(8, "representative selection", t0)


def test_09_end_to_end_pipeline(tmp_path, corpus_dir, capsys):
    t0 = time.time()
    data_dir = tmp_path / "data"
    assert main(["prepare", "--in", str(corpus_dir), "--out", str(data_dir)]) == 0

    micro = ["--units", "32", "--epochs", "20", "--batch-size", "8",
             "--seq-len", "25", "--embedding", "16"]
    manifests = []
    for variant in ("control", "interval", "db12"):
        for cell in ("lstm", "gru"):
            run = tmp_path / f"run_{variant}_{cell}"
            rc = main(["train", "--dataset", str(data_dir / f"{variant}.mmtd"),
                       "--out", str(run), "--cell", cell, *micro])
            assert rc == 0
            songs = tmp_path / f"songs_{variant}_{cell}"
            rc = main(["sample", "--checkpoint", str(run / "final.mmck"),
                       "--dataset", str(data_dir / f"{variant}.mmtd"),
                       "--out", str(songs), "--songs", "100", "--notes", "30",
                       "--name", f"{variant}-{cell}"])
            assert rc == 0
            manifests.append(songs / "manifest.json")

    eval_path = tmp_path / "eval.json"
    rc = main(["evaluate", "--manifest", str(manifests[0]), "--out", str(eval_path)])
    assert rc == 0

    cmp_path = tmp_path / "compare.json"
    rc = main(["compare", *map(str, manifests), "--out", str(cmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "reference corpus baseline" in out
    assert "2.23" in out and "2.05" in out and "0.27" in out

    payload = json.loads(cmp_path.read_text())
    assert len(payload["rows"]) == 6  # 3 variants x 2 cells, Table-3 shaped
    for manifest_path in manifests:
        manifest = json.loads(manifest_path.read_text())
        rep = manifest["report"]
        assert len(rep["per_melody"]) == 100
        assert 0 <= rep["representative_index"] < 100
        for triple in rep["per_melody"]:
            assert all(np.isfinite(v) for v in triple.values())
        melody = melody_from_midi(
            (manifest_path.parent / manifest["songs"][0]).read_bytes())
        assert len(melody) == 33
    assert time.time() - t0 < 600.0
    report(9, "end-to-end pipeline", t0)


def test_10_checkpoint_resume_exactness():
    t0 = time.time()
    data = build_control(toy_corpus(24))
    model = nn.ModelConfig(vocab_size=len(data.vocab), cell_type="gru",
                           hidden_units=24, embedding_dim=16, seed=3)

    def cfg(epochs):
        return training.TrainConfig(model=model, batch_size=8, seq_len=25,
                                    epochs=epochs, checkpoint_every=10**6)

    curve_full, _, _ = training.train(cfg(10), data)
    _, ck, _ = training.train(cfg(4), data)
    curve_resumed, _, _ = training.train(cfg(10), data, resume_from=ck)
    assert [r.epoch for r in curve_resumed] == list(range(5, 11))
    for a, b in zip(curve_full[4:], curve_resumed):
        assert a.train_loss == b.train_loss and a.val_loss == b.val_loss
    report(10, "checkpoint resume exactness", t0)
