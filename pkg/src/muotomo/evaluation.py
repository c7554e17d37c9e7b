"""Dataset evaluation against a run manifest.

Image-quality mode scores every prediction slice against the final-day
ground truth of the same sample and z index (SSIM with the ground-truth
max as dynamic range, PSNR likewise).  Segmentation mode scores predicted
label volumes against the generated ground-truth labels with per-class
Dice.  Predictions mirror the run layout under their own root:

    predictions/sample_XXXX/day_DDD/slice_ZZZ.raw   (image_quality)
    predictions/sample_XXXX/labels.raw              (segmentation)

Missing prediction files are listed and skipped; their presence makes the
run a partial failure.  Ground-truth slices with zero dynamic range (no
events ever reached that z) cannot be scored and are counted separately.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .manifest import Manifest
from .materials import CLASS_LABELS
from .metrics import MetricReport, per_class_dice, psnr, ssim
from .rawio import read_raw

FOREGROUND_CLASSES = tuple(range(1, len(CLASS_LABELS)))


@dataclass
class EvalResult:
    report: MetricReport
    missing: list = field(default_factory=list)
    zero_range: int = 0

    @property
    def exit_code(self) -> int:
        return 1 if self.missing else 0


def _slice_paths(root: str, sample_dir: str, n_slices: int):
    for z in range(n_slices):
        yield z, os.path.join(root, sample_dir, f"slice_{z:03d}.raw")


def image_quality(
    manifest: Manifest, manifest_root: str, predictions_root: str
) -> EvalResult:
    """SSIM/PSNR of prediction slices vs the final-day ground truth."""
    result = EvalResult(report=MetricReport())
    per_day: dict = {k: ([], []) for k in range(len(manifest.day_boundaries))}

    for entry in manifest.samples:
        if entry.error:
            continue
        final_dir = entry.day_dirs[-1]
        truth = {}
        for z, path in _slice_paths(manifest_root, final_dir, manifest.slices_per_day):
            truth[z], _ = read_raw(path)
        for k, day_dir in enumerate(entry.day_dirs):
            for z, path in _slice_paths(predictions_root, day_dir, manifest.slices_per_day):
                if not os.path.exists(path):
                    result.missing.append(os.path.relpath(path, predictions_root))
                    continue
                pred, _ = read_raw(path)
                rng_max = float(truth[z].max())
                if rng_max <= 0:
                    result.zero_range += 1
                    continue
                ssims, psnrs = per_day[k]
                ssims.append(ssim(pred, truth[z], rng_max))
                psnrs.append(psnr(pred, truth[z], rng_max))

    for k, day in enumerate(manifest.day_boundaries):
        ssims, psnrs = per_day[k]
        if ssims:
            result.report.add(
                day, float(np.mean(ssims)), float(np.mean(psnrs)), {}, len(ssims)
            )
    return result


def segmentation(
    manifest: Manifest, manifest_root: str, predictions_root: str
) -> EvalResult:
    """Per-class Dice of predicted label volumes vs ground truth."""
    result = EvalResult(report=MetricReport(classes=FOREGROUND_CLASSES))
    scores = {c: [] for c in FOREGROUND_CLASSES}
    images = 0

    for entry in manifest.samples:
        if entry.error:
            continue
        pred_path = os.path.join(predictions_root, entry.labels)
        if not os.path.exists(pred_path):
            result.missing.append(entry.labels)
            continue
        truth, _ = read_raw(os.path.join(manifest_root, entry.labels))
        pred, _ = read_raw(pred_path)
        per_class = per_class_dice(pred, truth, FOREGROUND_CLASSES)
        for c, v in per_class.items():
            scores[c].append(v)
        images += 1

    if images:
        final_day = manifest.day_boundaries[-1] if manifest.day_boundaries else 0.0
        result.report.add(
            final_day, math.nan, math.nan,
            {c: float(np.mean(v)) for c, v in scores.items()}, images,
        )
    return result
