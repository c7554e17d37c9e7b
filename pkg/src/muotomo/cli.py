"""Command-line interface.

Verbs:
  generate    run the full pipeline and write a manifest
  evaluate    score predictions against a manifest (image quality or Dice)
  inspect     print a config or manifest summary
  export-png  render every image slice of a run as 16-bit PNG

Exit codes: 0 success, 1 partial failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from .config import ConfigError, load_config, resolved_text
from .manifest import read_manifest
from .pipeline import generate_run
from .rawio import read_raw, write_png16


def _add_generate(sub):
    p = sub.add_parser("generate", help="generate a dataset")
    p.add_argument("--config", help="INI run configuration")
    p.add_argument("--seed", type=int, help="seed base override")
    p.add_argument("--samples", type=int, help="sample count override")
    p.add_argument("--days", type=int, help="exposure days override")
    p.add_argument("--jobs", type=int, help="worker process count")
    p.add_argument("--out", help="output root directory")
    p.add_argument(
        "--print-config", action="store_true",
        help="print the resolved configuration and exit",
    )


def _add_evaluate(sub):
    p = sub.add_parser("evaluate", help="score predictions against a run")
    p.add_argument("manifest", help="path to manifest.txt")
    p.add_argument("predictions", help="root of prediction files (run layout)")
    p.add_argument(
        "--mode", choices=("image_quality", "segmentation"),
        default="image_quality",
    )
    p.add_argument("--out", help="write the metric table to this CSV path")


def _add_inspect(sub):
    p = sub.add_parser("inspect", help="summarize a manifest or config file")
    p.add_argument("path", help="manifest.txt or a run config INI")


def _add_export_png(sub):
    p = sub.add_parser("export-png", help="render slices as 16-bit PNGs")
    p.add_argument("manifest", help="path to manifest.txt")
    p.add_argument("--out", help="destination root (default: alongside slices)")


def _cmd_generate(args) -> int:
    overrides = {
        "seed": args.seed, "samples": args.samples, "days": args.days,
        "jobs": args.jobs, "out": args.out,
    }
    config = load_config(args.config, overrides)
    if args.print_config:
        sys.stdout.write(resolved_text(config))
        return 0
    manifest, code = generate_run(config, log=lambda msg: print(msg, flush=True))
    print(f"wrote {len(manifest.samples) - len(manifest.failures)}"
          f"/{len(manifest.samples)} samples to {config.out}")
    for entry in manifest.failures:
        print(f"failed: {entry.sample_id}: {entry.error}", file=sys.stderr)
    return code


def _cmd_evaluate(args) -> int:
    from . import evaluation

    manifest = read_manifest(args.manifest)
    root = os.path.dirname(os.path.abspath(args.manifest))
    mode = getattr(evaluation, args.mode)
    result = mode(manifest, root, args.predictions)
    for row in result.report.rows:
        parts = [f"day {row['rate_days']:g}", f"n={row['images']}"]
        if not math.isnan(row["ssim"]):
            parts.append(f"ssim={row['ssim']:.4f}")
            parts.append(f"psnr={row['psnr']:.2f}")
        for c, v in row["dice"].items():
            parts.append(f"dice[{c}]={v:.4f}")
        print("  ".join(parts))
    if result.zero_range:
        print(f"skipped {result.zero_range} zero-range ground-truth slices")
    if result.missing:
        print(f"{len(result.missing)} prediction files missing:", file=sys.stderr)
        for path in result.missing[:20]:
            print(f"  {path}", file=sys.stderr)
        if len(result.missing) > 20:
            print(f"  ... and {len(result.missing) - 20} more", file=sys.stderr)
    if args.out:
        result.report.write_csv(args.out)
    return result.exit_code


def _cmd_inspect(args) -> int:
    try:
        manifest = read_manifest(args.path)
    except (ValueError, KeyError):
        config = load_config(args.path)
        sys.stdout.write(resolved_text(config))
        return 0
    print(f"version: {manifest.version}")
    print(f"config_hash: {manifest.config_hash}")
    print(f"day_boundaries: {manifest.day_boundaries}")
    print(f"slices_per_day: {manifest.slices_per_day}")
    print(f"samples: {len(manifest.samples)} ({len(manifest.failures)} failed)")
    for entry in manifest.samples:
        if entry.error:
            print(f"  {entry.sample_id}  seed={entry.seed}  ERROR {entry.error}")
        else:
            print(f"  {entry.sample_id}  seed={entry.seed}  events={entry.events}"
                  f"  dropped={entry.dropped}")
    return 0


def _cmd_export_png(args) -> int:
    manifest = read_manifest(args.manifest)
    root = os.path.dirname(os.path.abspath(args.manifest))
    out_root = args.out or root
    written = 0
    for entry in manifest.samples:
        if entry.error:
            continue
        for day_dir in entry.day_dirs:
            for z in range(manifest.slices_per_day):
                src = os.path.join(root, day_dir, f"slice_{z:03d}.raw")
                image, _ = read_raw(src)
                dst_dir = os.path.join(out_root, day_dir)
                os.makedirs(dst_dir, exist_ok=True)
                write_png16(os.path.join(dst_dir, f"slice_{z:03d}.png"), image)
                written += 1
    print(f"wrote {written} PNGs under {out_root}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="muotomo",
        description="muon scattering tomography dataset toolkit",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    _add_generate(sub)
    _add_evaluate(sub)
    _add_inspect(sub)
    _add_export_png(sub)
    args = parser.parse_args(argv)

    handlers = {
        "generate": _cmd_generate,
        "evaluate": _cmd_evaluate,
        "inspect": _cmd_inspect,
        "export-png": _cmd_export_png,
    }
    try:
        return handlers[args.verb](args)
    except ConfigError as err:
        print(f"invalid configuration: {err}", file=sys.stderr)
        return 2
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
