"""Run consumption: items, day views, and crop sampling."""

import numpy as np
import pytest
from muotomo.config import RunConfig
from muotomo.pipeline import generate_run
from scipy import stats

from ml_harness.data import (
    SegmenterView, SliceItem, UpsamplerView, crop_batch, load_items,
    random_crop_pair,
)


class TestLoadItems:
    def test_items_cover_every_sample_and_slice(self, tiny_manifest):
        items, day_values = load_items(tiny_manifest)
        assert day_values == [1.0, 2.0, 3.0]
        assert len(items) == 2 * 40  # samples x z slices
        assert {it.sample_id for it in items} == {"sample_0000", "sample_0001"}
        first = items[0]
        assert len(first.days) == 3
        assert first.days[0].shape == first.labels.shape == (100, 100)

    def test_days_are_cumulative(self, tiny_manifest):
        items, _ = load_items(tiny_manifest)
        totals = [sum(float(it.days[k].sum()) for it in items)
                  for k in range(3)]
        assert totals[0] < totals[1] < totals[2]

    def test_single_day_run_rejected(self, tmp_path):
        cfg = RunConfig(samples=1, days=1, seed=5, out=str(tmp_path / "r"),
                        flux_per_cm2_min=0.01)
        _, code = generate_run(cfg)
        assert code == 0
        with pytest.raises(ValueError, match="two day"):
            load_items(str(tmp_path / "r" / "manifest.txt"))

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_items(str(tmp_path / "nope" / "manifest.txt"))


class TestUpsamplerView:
    def test_pairs_use_drawn_day_and_final_target(self, tiny_manifest):
        items, _ = load_items(tiny_manifest)
        view = UpsamplerView(items)
        rng = np.random.default_rng(0)
        view.resample_days(rng)
        for i in (0, len(view) // 2, len(view) - 1):
            x, y = view.pair(i)
            k = view.day_index[i]
            assert x is items[i].days[k]
            assert y is items[i].days[-1]

    def test_redraw_never_selects_final_day(self, tiny_manifest):
        items, _ = load_items(tiny_manifest)
        view = UpsamplerView(items)
        rng = np.random.default_rng(1)
        for _ in range(50):
            drawn = view.resample_days(rng)
            assert drawn.max() < len(items[0].days) - 1
            assert drawn.min() >= 0

    def test_redraw_uniform_over_non_final_days(self, tiny_manifest):
        items, _ = load_items(tiny_manifest)
        view = UpsamplerView(items)
        rng = np.random.default_rng(2)
        counts = np.zeros(2)
        for _ in range(150):
            drawn = view.resample_days(rng)
            counts += np.bincount(drawn, minlength=2)
        p = stats.chisquare(counts).pvalue
        assert p > 0.001, f"day re-draws non-uniform: {counts} p={p:.2e}"


class TestSegmenterView:
    def test_pairs_final_day_with_labels(self, tiny_manifest):
        items, _ = load_items(tiny_manifest)
        view = SegmenterView(items)
        view.resample_days(np.random.default_rng(0))  # no-op by contract
        x, y = view.pair(3)
        assert x is items[3].days[-1]
        assert y is items[3].labels


class TestCrops:
    def test_crop_windows_align_between_pair(self):
        rng = np.random.default_rng(3)
        a = np.arange(100.0 * 80).reshape(100, 80)
        b = a + 1000.0
        ca, cb = random_crop_pair(a, b, 32, rng)
        assert ca.shape == cb.shape == (32, 32)
        assert np.array_equal(cb - ca, np.full((32, 32), 1000.0))
        # contiguous window out of the source, not a gather
        assert float(ca[1, 0] - ca[0, 0]) == 80.0

    def test_crop_is_deterministic_under_seeded_rng(self):
        a = np.arange(64.0 * 64).reshape(64, 64)
        one = random_crop_pair(a, a, 16, np.random.default_rng(9))[0]
        two = random_crop_pair(a, a, 16, np.random.default_rng(9))[0]
        assert np.array_equal(one, two)

    def test_oversized_crop_rejected(self):
        a = np.zeros((48, 48))
        with pytest.raises(ValueError, match="crop"):
            random_crop_pair(a, a, 64, np.random.default_rng(0))

    def test_mismatched_pair_rejected(self):
        with pytest.raises(ValueError, match="pair"):
            random_crop_pair(np.zeros((64, 64)), np.zeros((64, 63)), 32,
                             np.random.default_rng(0))

    def test_crop_batch_shapes_and_dtypes(self, tiny_manifest):
        items, _ = load_items(tiny_manifest)
        rng = np.random.default_rng(4)
        up = UpsamplerView(items)
        up.resample_days(rng)
        x, y = crop_batch(up, np.array([0, 1, 2]), 64, rng)
        assert x.shape == (3, 1, 64, 64) and x.dtype == np.float32
        assert y.shape == (3, 64, 64) and y.dtype == np.float32
        seg = SegmenterView(items)
        x, y = crop_batch(seg, np.array([0, 5]), 64, rng)
        assert x.shape == (2, 1, 64, 64) and x.dtype == np.float32
        assert y.shape == (2, 64, 64) and y.dtype == np.uint8


def test_slice_item_is_plain_data():
    item = SliceItem("s", 2, [np.zeros((4, 4))], np.zeros((4, 4), np.uint8))
    assert item.sample_id == "s" and item.z == 2
