"""Shared fixtures: a tiny simulated run and synthetic blob items."""

import numpy as np
import pytest
from muotomo.config import RunConfig
from muotomo.pipeline import generate_run

from ml_harness.data import SliceItem


@pytest.fixture(scope="session")
def tiny_manifest(tmp_path_factory):
    """Two samples, three day boundaries, low flux: fast but real files."""
    out = tmp_path_factory.mktemp("tiny_run")
    cfg = RunConfig(samples=2, days=3, seed=33, out=str(out),
                    flux_per_cm2_min=0.05)
    _, code = generate_run(cfg)
    assert code == 0
    return str(out / "manifest.txt")


def make_blob_items(n: int, size: int, seed: int,
                    shuffle_labels: bool = False) -> list:
    """Noisy disk-vs-background images with matching class-1 masks."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[:size, :size]
    images, masks = [], []
    for _ in range(n):
        cy, cx = rng.uniform(size * 0.25, size * 0.75, size=2)
        r = rng.uniform(size * 0.12, size * 0.3)
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
        images.append((rng.normal(0.0, 0.3, (size, size)) + 3.0 * mask)
                      .astype(np.float32))
        masks.append(mask.astype(np.uint8))
    if shuffle_labels:
        masks = [masks[i] for i in rng.permutation(n)]
    return [SliceItem(str(i), 0, [img], m)
            for i, (img, m) in enumerate(zip(images, masks))]


@pytest.fixture(scope="session")
def blob_items():
    return make_blob_items
