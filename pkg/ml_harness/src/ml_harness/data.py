"""Dataset access: image series and label slices out of a generated run.

Runs are consumed through their manifest, raw volumes, and sidecars (the
pipeline's published interface).  Each item is one (sample, z) slice
series: the per-day cumulative images plus the label slice.  The
upsampler view re-draws each item's input day uniformly from the
non-final days (the final day is always the target); the segmenter view
pairs final-day images with label slices.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from muotomo.manifest import read_manifest
from muotomo.rawio import read_raw


@dataclass
class SliceItem:
    sample_id: str
    z: int
    days: list  # one 2D image per day boundary, cumulative
    labels: np.ndarray  # 2D label slice


def load_items(manifest_path: str) -> tuple[list[SliceItem], list[float]]:
    manifest = read_manifest(manifest_path)
    root = os.path.dirname(os.path.abspath(manifest_path))
    if len(manifest.day_boundaries) < 2:
        raise ValueError("need at least two day versions per image")
    items = []
    for entry in manifest.samples:
        if entry.error:
            continue
        labels, _ = read_raw(os.path.join(root, entry.labels))
        stacks: list[list[np.ndarray]] = [[] for _ in range(manifest.slices_per_day)]
        for day_dir in entry.day_dirs:
            for z in range(manifest.slices_per_day):
                img, _ = read_raw(os.path.join(root, day_dir, f"slice_{z:03d}.raw"))
                stacks[z].append(img)
        for z, days in enumerate(stacks):
            items.append(SliceItem(entry.sample_id, z, days, labels[:, :, z]))
    if not items:
        raise ValueError(f"no usable samples in {manifest_path}")
    return items, list(manifest.day_boundaries)


class UpsamplerView:
    """(short-exposure image, final-day image) pairs with day re-draws."""

    def __init__(self, items: list[SliceItem]):
        self.items = items
        self.day_index = np.zeros(len(items), dtype=int)

    def __len__(self) -> int:
        return len(self.items)

    def resample_days(self, rng: np.random.Generator) -> np.ndarray:
        """Draw every item's input day uniformly from the non-final days."""
        n_days = len(self.items[0].days)
        self.day_index = rng.integers(0, n_days - 1, size=len(self.items))
        return self.day_index

    def pair(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        item = self.items[i]
        return item.days[self.day_index[i]], item.days[-1]


class SegmenterView:
    """(final-day image, label slice) pairs."""

    def __init__(self, items: list[SliceItem]):
        self.items = items

    def __len__(self) -> int:
        return len(self.items)

    def resample_days(self, rng: np.random.Generator) -> None:
        return None  # inputs are always the final day

    def pair(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        item = self.items[i]
        return item.days[-1], item.labels


def random_crop_pair(a: np.ndarray, b: np.ndarray, size: int,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    h, w = a.shape
    if b.shape != a.shape:
        raise ValueError("pair shapes differ")
    if h < size or w < size:
        raise ValueError(f"crop {size} exceeds image {h}x{w}")
    i = int(rng.integers(0, h - size + 1))
    j = int(rng.integers(0, w - size + 1))
    return a[i:i + size, j:j + size], b[i:i + size, j:j + size]


def crop_batch(view, indices, size: int, rng: np.random.Generator):
    """Stack random crops: inputs (n,1,size,size) float32, targets (n,size,size).

    Targets keep their native dtype; the caller adds a channel axis for
    image targets or casts to int64 for label targets.
    """
    xs, ys = [], []
    for i in indices:
        a, b = view.pair(int(i))
        ca, cb = random_crop_pair(a, b, size, rng)
        xs.append(ca)
        ys.append(cb)
    return np.stack(xs)[:, None].astype(np.float32), np.stack(ys)
