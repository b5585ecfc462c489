"""Command-line front door: ingest, corpus, train, eval, project, serve, bench."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path


def _cmd_ingest(args) -> int:
    from .midi import parse_midi
    from .pianoroll import save_parts

    data = Path(args.midi).read_bytes()
    parts = parse_midi(data, args.quantization)
    if not any(part.frames.any() for part in parts):
        print("no tracks with notes found", file=sys.stderr)
        return 1
    save_parts(parts, args.out)
    print(f"wrote {len(parts)} parts x {parts[0].n_frames} frames to {args.out}")
    return 0


def _cmd_corpus(args) -> int:
    from .synthetic import make_register_corpus, make_sustain_corpus

    maker = make_register_corpus if args.family == "register" else make_sustain_corpus
    paths = maker(
        args.out,
        n_files=args.files,
        frames=args.frames,
        quantization=args.quantization,
        seed=args.seed,
    )
    print(f"wrote {len(paths)} pair files under {args.out}")
    return 0


def _cmd_train(args) -> int:
    from .training import TrainingConfig, train

    config = TrainingConfig.from_json(args.config)
    paths = sorted(Path(args.corpus).glob("*.json"))
    if not paths:
        print(f"no .json pair files under {args.corpus}", file=sys.stderr)
        return 1
    bundle, log = train(config, paths, out_path=args.out, log_path=args.log)
    best = log["best_epoch"]
    final = log["epochs"][-1] if log["epochs"] else {}
    print(
        f"trained {config.kind} on {len(log['files_read']['train'])} files "
        f"({log['n_training_rows']} rows, orchestra_dim={log['orchestra_dim']}); "
        f"best epoch: {best}; final recon_mse: {final.get('recon_mse')}"
    )
    if args.out:
        print(f"model written to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    from .evaluation import (
        RandomBaseline,
        RepeatBaseline,
        corrupted_piano_eval,
        evaluate_corpus,
        evaluate_model,
    )
    from .models.serialize import load_model

    paths = sorted(Path(args.corpus).glob("*.json"))
    if not paths:
        print(f"no .json pair files under {args.corpus}", file=sys.stderr)
        return 1
    reports = []
    if args.model:
        bundle = load_model(args.model)
        if args.corrupt_piano:
            reports.append(corrupted_piano_eval(bundle, paths, args.granularity))
        else:
            reports.append(evaluate_model(bundle, paths, args.granularity).to_dict())
    if args.baselines:
        for predictor in (RepeatBaseline(), RandomBaseline(seed=args.seed)):
            reports.append(
                evaluate_corpus(predictor, paths, granularity=args.granularity).to_dict()
            )
    if not reports:
        print("nothing to evaluate: pass --model and/or --baselines", file=sys.stderr)
        return 1
    print(json.dumps(reports, indent=2))
    return 0


def _cmd_project(args) -> int:
    from .models.serialize import load_model
    from .pianoroll import load_parts, save_parts, sequence_to_parts, split_pair
    from .projection import project_score

    bundle = load_model(args.model)
    parts = load_parts(args.score)
    if len(parts) == 1:
        piano = parts[0]
    else:
        piano, _ = split_pair(parts)
    seq = project_score(bundle, piano)
    save_parts(sequence_to_parts(seq), args.out)
    print(f"projected {len(seq)} frames onto {len(bundle.layout.parts)} parts -> {args.out}")
    return 0


def _cmd_serve(args) -> int:
    from . import server

    argv = []
    if args.models_dir is not None:
        argv += ["--models-dir", args.models_dir]
    if args.port is not None:
        argv += ["--port", str(args.port)]
    if args.metronome_ms is not None:
        argv += ["--metronome-ms", str(args.metronome_ms)]
    argv += ["--host", args.host]
    return server.main(argv)


def _cmd_bench(args) -> int:
    from .benchmark import benchmark_scale

    scales = ["paper", "desk"] if args.scale == "both" else [args.scale]
    kinds = ("rbm", "crbm", "fgcrbm") if args.kind == "all" else (args.kind,)
    out = [benchmark_scale(scale, kinds=kinds, n_ticks=args.ticks) for scale in scales]
    print(json.dumps(out, indent=2))
    ok = all(r["within_budget"] for block in out for r in block["results"])
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tutti",
        description="Learn to project piano scores onto a full orchestra, live.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="info-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert a MIDI file to the JSON piano-roll format")
    p.add_argument("midi", help="input .mid file")
    p.add_argument("--quantization", type=int, default=8, help="frames per quarter note")
    p.add_argument("--out", required=True, help="output .json path")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("corpus", help="generate a synthetic orchestration corpus")
    p.add_argument("family", choices=["register", "sustain"])
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--files", type=int, default=40)
    p.add_argument("--frames", type=int, default=64)
    p.add_argument("--quantization", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_corpus)

    p = sub.add_parser("train", help="train a model on a corpus of JSON pair files")
    p.add_argument("--config", required=True, help="TrainingConfig JSON")
    p.add_argument("--corpus", required=True, help="directory of pair .json files")
    p.add_argument("--out", help="write the trained model here")
    p.add_argument("--log", help="write the training log JSON here")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score a model and/or baselines on a corpus")
    p.add_argument("--model", help="trained model file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--granularity", choices=["frame", "event"], default="event")
    p.add_argument("--baselines", action="store_true", help="also score repeat/random")
    p.add_argument("--corrupt-piano", action="store_true", help="report the zeroed-piano drop")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("project", help="project a piano score file through a model")
    p.add_argument("--model", required=True)
    p.add_argument("--score", required=True, help="piano part (or pair file) JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("serve", help="run the realtime WebSocket projection server")
    p.add_argument("--models-dir")
    p.add_argument("--port", type=int)
    p.add_argument("--metronome-ms", type=float)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("bench", help="measure tick latency at reference scales")
    p.add_argument("--scale", choices=["paper", "desk", "both"], default="both")
    p.add_argument("--kind", choices=["rbm", "crbm", "fgcrbm", "all"], default="all")
    p.add_argument("--ticks", type=int, default=200)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
