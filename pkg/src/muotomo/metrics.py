"""Image-quality and segmentation-overlap metrics.

Single-scale SSIM with the standard 11x11 Gaussian window (sigma 1.5,
K1=0.01, K2=0.03, averaged over valid windows only), PSNR with a +inf
sentinel for identical images, and Dice overlap with the empty-empty = 1
convention so that a correct "nothing present" prediction scores perfectly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _check_pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def _window_mean(img: np.ndarray) -> np.ndarray:
    # gaussian_filter with a radius-5 kernel matches the 11x11 window;
    # truncate is given in sigmas
    radius = SSIM_WINDOW // 2
    return gaussian_filter(img, SSIM_SIGMA, mode="constant", truncate=radius / SSIM_SIGMA)


def ssim(a: np.ndarray, b: np.ndarray, dynamic_range: float) -> float:
    """Mean single-scale SSIM over fully valid windows."""
    a, b = _check_pair(a, b)
    if dynamic_range <= 0:
        raise ValueError("dynamic_range must be positive")
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"images must be at least {SSIM_WINDOW} px per side")
    c1 = (SSIM_K1 * dynamic_range) ** 2
    c2 = (SSIM_K2 * dynamic_range) ** 2

    mu_a = _window_mean(a)
    mu_b = _window_mean(b)
    var_a = _window_mean(a * a) - mu_a * mu_a
    var_b = _window_mean(b * b) - mu_b * mu_b
    cov = _window_mean(a * b) - mu_a * mu_b

    score = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    )
    radius = SSIM_WINDOW // 2
    valid = score[radius:-radius, radius:-radius]
    return float(valid.mean())


def psnr(a: np.ndarray, b: np.ndarray, max_value: float) -> float:
    """10 log10(max^2 / MSE); identical images give +inf."""
    a, b = _check_pair(a, b)
    if max_value <= 0:
        raise ValueError("max_value must be positive")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_value * max_value / mse)


def dice(pred: np.ndarray, truth: np.ndarray) -> float:
    """2TP / (2TP + FP + FN); both masks empty scores 1.0."""
    pred = np.asarray(pred).astype(bool)
    truth = np.asarray(truth).astype(bool)
    if pred.shape != truth.shape:
        raise ValueError(f"mask shapes differ: {pred.shape} vs {truth.shape}")
    tp = int(np.logical_and(pred, truth).sum())
    denom = 2 * tp + int(np.logical_xor(pred, truth).sum())
    if denom == 0:
        return 1.0
    return 2.0 * tp / denom


def per_class_dice(pred: np.ndarray, truth: np.ndarray, classes) -> dict:
    """One-hot Dice per foreground class; background (0) is the caller's
    business to exclude from ``classes``."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"label shapes differ: {pred.shape} vs {truth.shape}")
    classes = list(classes)
    known = set(classes) | {0}
    seen = set(np.unique(pred)) | set(np.unique(truth))
    unknown = seen - known
    if unknown:
        raise ValueError(f"labels {sorted(unknown)} outside class set {sorted(known)}")
    return {c: dice(pred == c, truth == c) for c in classes}


@dataclass
class MetricReport:
    """Per-sampling-rate metric averages with image counts."""

    classes: tuple = ()
    rows: list = field(default_factory=list)

    def add(self, rate_days: float, ssim_mean: float, psnr_mean: float,
            dice_means: dict, images: int) -> None:
        self.rows.append(
            {
                "rate_days": rate_days,
                "ssim": ssim_mean,
                "psnr": psnr_mean,
                "dice": dict(dice_means),
                "images": images,
            }
        )

    def write_csv(self, path: str) -> None:
        cols = ["rate_days", "images", "ssim", "psnr"] + [
            f"dice_{c}" for c in self.classes
        ]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for row in self.rows:
                writer.writerow(
                    [row["rate_days"], row["images"], row["ssim"], row["psnr"]]
                    + [row["dice"].get(c, "") for c in self.classes]
                )

    @classmethod
    def read_csv(cls, path: str) -> "MetricReport":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            classes = tuple(
                int(c.split("_", 1)[1]) for c in header if c.startswith("dice_")
            )
            report = cls(classes=classes)
            for line in reader:
                vals = dict(zip(header, line))
                report.add(
                    float(vals["rate_days"]),
                    float(vals["ssim"]),
                    float(vals["psnr"]),
                    {c: float(vals[f"dice_{c}"]) for c in classes if vals[f"dice_{c}"] != ""},
                    int(vals["images"]),
                )
        return report
