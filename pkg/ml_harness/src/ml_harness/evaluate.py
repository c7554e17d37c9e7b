"""Model evaluation across sampling rates.

For every day boundary and every mode (raw day-k image, and its
upsampled version when an upsampler checkpoint is given) this scores
image quality against the final-day ground truth, and when a segmenter
checkpoint is given, per-class Dice of its predictions on that mode's
images.  One table row per (day, mode): the sampling-rate sweep table.
"""

from __future__ import annotations

import csv

import numpy as np
import torch
from muotomo.metrics import per_class_dice, psnr, ssim

from .data import load_items
from .losses import FOREGROUND
from .models import _FACTOR

TABLE_COLUMNS = ("mode", "rate_days", "images", "ssim", "psnr") + tuple(
    f"dice_{c}" for c in FOREGROUND
)


def infer(model: torch.nn.Module, image: np.ndarray) -> np.ndarray:
    """Run one 2D image through a generator, padding to the U-Net factor."""
    h, w = image.shape
    ph = (-h) % _FACTOR
    pw = (-w) % _FACTOR
    x = np.pad(image.astype(np.float32), ((0, ph), (0, pw)))
    with torch.no_grad():
        out = model(torch.from_numpy(x[None, None]))
    return out[0, :, :h, :w].numpy()


def evaluate_models(manifest_path: str, upsampler=None, segmenter=None) -> list[dict]:
    items, day_values = load_items(manifest_path)
    modes = ["raw"] + (["upsampled"] if upsampler is not None else [])
    rows = []
    for k, day in enumerate(day_values):
        for mode in modes:
            ssims, psnrs = [], []
            dice: dict = {c: [] for c in FOREGROUND}
            for item in items:
                image = item.days[k]
                if mode == "upsampled":
                    image = infer(upsampler, image)[0]
                truth = item.days[-1]
                rng_max = float(truth.max())
                if rng_max > 0:
                    ssims.append(ssim(image, truth, rng_max))
                    psnrs.append(psnr(image, truth, rng_max))
                if segmenter is not None:
                    pred = infer(segmenter, image).argmax(axis=0).astype(np.uint8)
                    for c, v in per_class_dice(pred, item.labels, FOREGROUND).items():
                        dice[c].append(v)
            row = {
                "mode": mode, "rate_days": day, "images": len(items),
                "ssim": float(np.mean(ssims)) if ssims else float("nan"),
                "psnr": float(np.mean(psnrs)) if psnrs else float("nan"),
            }
            for c in FOREGROUND:
                row[f"dice_{c}"] = float(np.mean(dice[c])) if dice[c] else None
            rows.append(row)
    return rows


def write_table(path: str, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
