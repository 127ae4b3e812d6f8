"""Command-line workbench tying the pipeline together.

Subcommands: prepare, baseline, train, sweep, sample, evaluate, compare,
gradcheck. Report-producing commands write a figure next to the CSV/JSON
output.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import generate as gen
from . import metrics, nn, plots, training
from .midi_io import Melody, melody_from_midi, write_midi

log = logging.getLogger("melodykit")

# Published reference statistics for a large scraped corpus; printed for
# qualitative comparison only, never used as a target.
REFERENCE_BASELINE = {
    "cmm": (2.23, 0.98),
    "lm": (2.05, 1.18),
    "centr": (0.27, 0.14),
}

SWEEP_UNITS = (128, 256, 512, 1024, 2048)


def _load_corpus(path: Path) -> ds.Corpus:
    files = sorted(path.glob("*.mid")) + sorted(path.glob("*.midi"))
    if not files:
        raise FileNotFoundError(f"no MIDI files in {path}")
    melodies, names = [], []
    for f in files:
        melody = melody_from_midi(f.read_bytes())
        if melody.notes:
            melodies.append(melody)
            names.append(f.name)
        else:
            log.warning("%s: no notes after quantization, skipped", f.name)
    return ds.Corpus(tuple(melodies), tuple(names))


def _span_cfg(args) -> metrics.SpanConfig:
    return metrics.SpanConfig(n=args.span_n, m=args.span_m)


def _print_baseline_reference():
    parts = [
        f"{m.upper()} {mu:.2f} +/- {sd:.2f}" for m, (mu, sd) in REFERENCE_BASELINE.items()
    ]
    print("reference corpus baseline (qualitative only): " + ", ".join(parts))


def cmd_prepare(args) -> int:
    corpus = ds.clean(_load_corpus(Path(args.indir)))
    if not corpus.melodies:
        print("error: no melodies survive cleaning", file=sys.stderr)
        return 1
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for variant, builder in ds.BUILDERS.items():
        built = builder(corpus)
        path = out / f"{variant}.mmtd"
        ds.save_dataset(built, path)
        print(f"{path}: {len(built.X)} tokens, vocab {len(built.vocab)}, "
              f"{len(built.song_boundaries)} songs")
    return 0


def cmd_baseline(args) -> int:
    corpus = ds.clean(_load_corpus(Path(args.indir)))
    evaluation = metrics.corpus_stats(list(corpus.melodies), _span_cfg(args))
    stats = evaluation.stats
    for metric in ("cmm", "lm", "centr"):
        mean = getattr(stats.mean, metric)
        std = getattr(stats.std, metric)
        print(f"{metric.upper():>6}: {mean:.2f} +/- {std:.2f}")
    _print_baseline_reference()
    if args.out:
        out = Path(args.out)
        out.write_text(json.dumps(evaluation.as_dict(), indent=2))
        plots.plot_metric_distributions(
            evaluation.triples, out.with_suffix(".png"), title="corpus metrics"
        )
        print(f"wrote {out} and {out.with_suffix('.png')}")
    return 0


def _train_one(dataset_path: Path, cell: str, units: int, args, out_dir: Path):
    data = ds.load_dataset(dataset_path)
    model_cfg = nn.ModelConfig(
        vocab_size=len(data.vocab),
        cell_type=cell,
        hidden_units=units,
        num_layers=args.layers,
        embedding_dim=args.embedding,
        seed=args.model_seed,
    )
    cfg = training.TrainConfig(
        model=model_cfg,
        batch_size=args.batch_size,
        seq_len=args.seq_len,
        epochs=args.epochs,
        optimizer=nn.AdamConfig(lr=args.lr),
        checkpoint_every=args.checkpoint_every,
        val_fraction=args.val_fraction,
    )
    fingerprint = training.dataset_fingerprint(dataset_path)
    resume = training.load_checkpoint(args.resume) if getattr(args, "resume", None) else None
    curve, final, best = training.train(
        cfg, data, out_dir=out_dir, fingerprint=fingerprint, resume_from=resume
    )
    csv_path = out_dir / "curve.csv"
    training.write_curve_csv(curve, csv_path)
    plots.plot_learning_curve(curve, out_dir / "curve.png", title=f"{cell}-{units}")
    training.save_checkpoint(final, out_dir / "final.mmck")
    return curve, final, best


def cmd_train(args) -> int:
    out_dir = Path(args.outdir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    curve, final, best = _train_one(Path(args.dataset), args.cell, args.units, args, out_dir)
    if curve:
        last = curve[-1]
        print(f"trained {len(curve)} epochs in {time.time() - t0:.1f}s: "
              f"train {last.train_loss:.4f} val {last.val_loss:.4f} "
              f"(best val {min(r.val_loss for r in curve):.4f})")
    print(f"wrote {out_dir / 'curve.csv'}, {out_dir / 'curve.png'}, checkpoints in {out_dir}")
    return 0


def cmd_sweep(args) -> int:
    cells = args.cells.split(",")
    units_list = [int(u) for u in args.units.split(",")]
    out_dir = Path(args.outdir)
    out_dir.mkdir(parents=True, exist_ok=True)
    curves = {}
    for cell in cells:
        for units in units_list:
            run_dir = out_dir / f"{cell}_{units}"
            run_dir.mkdir(parents=True, exist_ok=True)
            curve, _, _ = _train_one(Path(args.dataset), cell, units, args, run_dir)
            training.write_curve_csv(curve, out_dir / f"curve_{cell}_{units}.csv")
            curves[f"{cell}-{units}"] = curve
            print(f"{cell}-{units}: final train "
                  f"{curve[-1].train_loss:.4f} val {curve[-1].val_loss:.4f}")
    plots.plot_sweep_curves(curves, out_dir / "sweep_train.png", which="train")
    plots.plot_sweep_curves(curves, out_dir / "sweep_val.png", which="val")
    return 0


def _parse_seed_melody(text: str) -> Melody:
    pairs = []
    for item in text.split(","):
        p, d = item.split(":")
        pairs.append((int(p), int(d)))
    return Melody.from_pairs(pairs)


def cmd_sample(args) -> int:
    ckpt = training.load_checkpoint(args.checkpoint)
    data = ds.load_dataset(args.dataset)
    if len(data.vocab) != ckpt.model_config.vocab_size:
        print(f"error: dataset vocab {len(data.vocab)} != checkpoint vocab "
              f"{ckpt.model_config.vocab_size}", file=sys.stderr)
        return 1
    sampler = gen.SamplerConfig(
        seed_melody=_parse_seed_melody(args.seed_melody),
        notes_to_generate=args.notes,
        temperature=args.temperature,
        rng_seed=args.rng_seed,
        songs=args.songs,
    )
    melodies = gen.generate_corpus(ckpt.params, ckpt.model_config, data.vocab, sampler)
    out_dir = Path(args.outdir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, melody in enumerate(melodies):
        (out_dir / f"song_{i:03d}.mid").write_bytes(write_midi(melody))
    report = gen.report_from_melodies(args.name, melodies, sampler, _span_cfg(args))
    gen.save_manifest(out_dir / "manifest.json", melodies, report)
    plots.plot_metric_distributions(
        report.evaluation.triples, out_dir / "metrics.png", title=args.name
    )
    rep = report.representative_triple
    print(f"{len(melodies)} songs in {out_dir}; representative "
          f"song_{report.representative_index:03d} "
          f"(CMM {rep.cmm:.2f}, LM {rep.lm:.2f}, CENTR {rep.centr:.2f})")
    return 0


def cmd_evaluate(args) -> int:
    if args.manifest:
        manifest = json.loads(Path(args.manifest).read_text())
        base = Path(args.manifest).parent
        melodies = [melody_from_midi((base / s).read_bytes()) for s in manifest["songs"]]
        name = manifest["report"].get("name", "manifest")
    else:
        corpus = _load_corpus(Path(args.indir))
        melodies, name = list(corpus.melodies), Path(args.indir).name
    evaluation = metrics.corpus_stats(melodies, _span_cfg(args))
    stats = evaluation.stats
    for metric in ("cmm", "lm", "centr"):
        print(f"{metric.upper():>6}: {getattr(stats.mean, metric):.2f} "
              f"+/- {getattr(stats.std, metric):.2f}")
    _print_baseline_reference()
    if args.out:
        out = Path(args.out)
        report = {"name": name, **evaluation.as_dict()}
        out.write_text(json.dumps(report, indent=2))
        plots.plot_metric_distributions(evaluation.triples, out.with_suffix(".png"), title=name)
        print(f"wrote {out} and {out.with_suffix('.png')}")
    return 0


def _report_from_json(path: Path) -> gen.GenerationReport:
    d = json.loads(path.read_text())
    triples = [metrics.MetricTriple(**t) for t in d["per_melody"]]
    evaluation = metrics.CorpusEvaluation(
        triples=triples,
        stats=metrics.aggregate(triples),
        skipped=d.get("skipped", 0),
        config=metrics.SpanConfig(**d.get("config", {"n": 32, "m": 4})),
    )
    rep = d.get("representative_index", gen.representative(triples))
    return gen.GenerationReport(
        name=d.get("name", path.stem), evaluation=evaluation, representative_index=rep
    )


def cmd_compare(args) -> int:
    reports = []
    for path in args.reports:
        path = Path(path)
        if path.name == "manifest.json":
            d = json.loads(path.read_text())["report"]
            tmp = path.with_suffix(".report.json")
            tmp.write_text(json.dumps(d))
            reports.append(_report_from_json(tmp))
            tmp.unlink()
        else:
            reports.append(_report_from_json(path))
    table, payload = gen.compare_models(reports)
    print(table)
    _print_baseline_reference()
    if args.out:
        out = Path(args.out)
        out.write_text(json.dumps(payload, indent=2))
        out.with_suffix(".txt").write_text(table + "\n")
        plots.plot_comparison(reports, out.with_suffix(".png"))
        print(f"wrote {out}, {out.with_suffix('.txt')} and {out.with_suffix('.png')}")
    return 0


def cmd_gradcheck(args) -> int:
    ok = True
    for cell in ("lstm", "gru"):
        cfg = nn.ModelConfig(
            vocab_size=12, cell_type=cell, hidden_units=16,
            num_layers=args.layers, embedding_dim=8,
        )
        report = nn.grad_check(cfg, tolerance=args.tolerance)
        status = "ok" if report.passed(args.tolerance) else "FAIL"
        print(f"{cell}: max relative error {report.max_error:.3e} [{status}]")
        ok = ok and report.passed(args.tolerance)
    return 0 if ok else 1


def _add_span_args(p):
    p.add_argument("--span-n", type=int, default=32, help="span size in 16th cells")
    p.add_argument("--span-m", type=int, default=4, help="span step in 16th cells")


def _add_train_args(p):
    p.add_argument("--dataset", required=True, help="path to a .mmtd dataset file")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--seq-len", type=int, default=100)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--embedding", type=int, default=64)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--checkpoint-every", type=int, default=10)
    p.add_argument("--model-seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="melodykit",
        description="Monophonic melody generation and geometric tonality evaluation.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="build the three datasets from a MIDI directory")
    p.add_argument("--in", dest="indir", required=True)
    p.add_argument("--out", dest="outdir", required=True)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("baseline", help="corpus metric statistics")
    p.add_argument("--in", dest="indir", required=True)
    p.add_argument("--out", default=None, help="JSON report path (PNG written alongside)")
    _add_span_args(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("train", help="train one model")
    _add_train_args(p)
    p.add_argument("--cell", choices=nn.CELL_TYPES, default="lstm")
    p.add_argument("--units", type=int, default=128)
    p.add_argument("--out", dest="outdir", required=True)
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="unit-count grid over cell types")
    _add_train_args(p)
    p.add_argument("--cells", default="lstm,gru")
    p.add_argument("--units", default=",".join(str(u) for u in SWEEP_UNITS))
    p.add_argument("--out", dest="outdir", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sample", help="generate songs from a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True, help="dataset file (for the vocabulary)")
    p.add_argument("--out", dest="outdir", required=True)
    p.add_argument("--name", default="model")
    p.add_argument("--songs", type=int, default=100)
    p.add_argument("--notes", type=int, default=30)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--seed-melody", default="62:8,64:4,65:4",
                   help="comma-separated pitch:duration pairs")
    _add_span_args(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("evaluate", help="score MIDI files or a generated corpus")
    p.add_argument("--in", dest="indir", default=None, help="directory of MIDI files")
    p.add_argument("--manifest", default=None, help="manifest.json from `sample`")
    p.add_argument("--out", default=None, help="JSON report path (PNG written alongside)")
    _add_span_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="tabulate metric reports side by side")
    p.add_argument("reports", nargs="+", help="report or manifest JSON files")
    p.add_argument("--out", default=None, help="JSON output path (txt/PNG alongside)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.add_argument("--layers", type=int, default=1)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if args.command == "evaluate" and not (args.indir or args.manifest):
        print("error: evaluate needs --in or --manifest", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
