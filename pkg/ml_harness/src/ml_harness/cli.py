"""Command-line interface: train and evaluate the two models.

Exit codes: 0 success, 1 training diverged or missing inputs, 2 invalid
configuration.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields

from .losses import TrainingDiverged
from .training import TrainConfig, load_generator, train_segmenter, train_upsampler


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("manifest", help="path to a generated run's manifest.txt")
    p.add_argument("--out", default="models", help="checkpoint/history directory")
    for f in fields(TrainConfig):
        if f.name == "betas":
            continue
        kind = {"int": int, "float": float, "str": str}[f.type]
        p.add_argument(f"--{f.name.replace('_', '-')}", type=kind, default=None,
                       help=f"default {f.default}")


def _config_from(args) -> TrainConfig:
    values = {}
    for f in fields(TrainConfig):
        if f.name == "betas":
            continue
        v = getattr(args, f.name)
        if v is not None:
            values[f.name] = v
    return TrainConfig(**values)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ml-harness",
        description="train/evaluate the exposure upsampler and segmenter",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("train-upsampler", "train-segmenter"):
        _add_train_flags(sub.add_parser(verb))
    ev = sub.add_parser("evaluate", help="score models across sampling rates")
    ev.add_argument("manifest")
    ev.add_argument("--upsampler", help="upsampler checkpoint")
    ev.add_argument("--segmenter", help="segmenter checkpoint")
    ev.add_argument("--out", default="evaluation.csv", help="output CSV table")
    args = parser.parse_args(argv)

    try:
        if args.verb in ("train-upsampler", "train-segmenter"):
            train = train_upsampler if args.verb == "train-upsampler" else train_segmenter
            result = train(args.manifest, args.out, _config_from(args),
                           log=lambda msg: print(msg, flush=True))
            print(f"checkpoint: {result.checkpoint_path}")
            print(f"history: {result.history_path}")
            return 0
        from .evaluate import evaluate_models, write_table

        upsampler = load_generator(args.upsampler) if args.upsampler else None
        segmenter = load_generator(args.segmenter) if args.segmenter else None
        rows = evaluate_models(args.manifest, upsampler, segmenter)
        write_table(args.out, rows)
        for row in rows:
            parts = [f"{row['mode']:>9s} day {row['rate_days']:g}",
                     f"ssim={row['ssim']:.4f}", f"psnr={row['psnr']:.2f}"]
            parts += [f"dice[{c}]={row[f'dice_{c}']:.4f}"
                      for c in (1, 2, 3, 4) if row[f"dice_{c}"] is not None]
            print("  ".join(parts))
        print(f"table: {args.out}")
        return 0
    except TrainingDiverged as err:
        print(f"aborted: {err}", file=sys.stderr)
        return 1
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except ValueError as err:
        print(f"invalid configuration: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
