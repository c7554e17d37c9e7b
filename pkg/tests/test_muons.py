import math

import numpy as np
import pytest

from muotomo.muons import ExposureSpec, exposure_count, sample_muons


def spec(**kw):
    base = dict(plane_half=(533.0, 533.0), plane_z=365.0, duration_days=1.0)
    base.update(kw)
    return ExposureSpec(**base)


def test_exposure_count_unit_case():
    # 1 cm^2 plane, 1 minute, flux 1 -> exactly one muon
    s = spec(plane_half=(5.0, 5.0), duration_days=1.0 / 1440.0)
    assert exposure_count(s) == 1


def test_exposure_count_full_plane_day():
    # 106.6 cm * 106.6 cm * 1440 min
    assert exposure_count(spec()) == 16_363_526


def test_exposure_count_zero_duration():
    assert exposure_count(spec(duration_days=0.0)) == 0


def test_exposure_count_overflow():
    with pytest.raises(OverflowError):
        exposure_count(spec(duration_days=1e18))


def test_exposure_count_poisson_mode():
    s = spec(plane_half=(50.0, 50.0), duration_days=0.01)
    mean = s.flux_per_cm2_min * s.area_cm2 * 0.01 * 1440
    draws = [exposure_count(s, seed=k, poisson=True) for k in range(200)]
    assert np.std(draws) > 0
    assert abs(np.mean(draws) - mean) < 5 * math.sqrt(mean / 200)
    assert exposure_count(s, seed=3, poisson=True) == exposure_count(s, seed=3, poisson=True)


def test_directions_point_down_and_bounds():
    s = spec()
    m = sample_muons(s, seed=1, start=0, stop=20000)
    assert (m.direction[:, 2] < 0).all()
    assert np.allclose(np.linalg.norm(m.direction, axis=1), 1.0, atol=1e-12)
    assert (np.abs(m.position[:, 0]) <= 533.0).all()
    assert (np.abs(m.position[:, 1]) <= 533.0).all()
    assert (m.position[:, 2] == 365.0).all()
    assert (m.time >= 0).all() and (m.time < 86400.0).all()
    cos_t = -m.direction[:, 2]
    assert (cos_t >= math.cos(s.zenith_max_rad) - 1e-12).all()


def test_zenith_mean_cosine():
    # E[cos] = 3/4 for the cos^2*sin density on [0, pi/2]
    s = spec(zenith_max_rad=math.pi / 2.0)
    m = sample_muons(s, seed=2, start=0, stop=1_000_000)
    assert abs(float(np.mean(-m.direction[:, 2])) - 0.75) < 1e-3


def test_momentum_spectrum():
    s = spec()
    m = sample_muons(s, seed=3, start=0, stop=1_000_000)
    mean = 3000.0 * math.exp(0.55**2 / 2.0)  # 3489.9
    assert abs(float(np.mean(m.momentum)) / mean - 1.0) < 0.01
    assert (m.momentum >= 100.0).all()
    # rejection must not disturb the median by more than 0.5%
    assert abs(float(np.median(m.momentum)) / 3000.0 - 1.0) < 0.005


def test_azimuth_uniform():
    m = sample_muons(spec(), seed=4, start=0, stop=200_000)
    phi = np.arctan2(m.direction[:, 1], m.direction[:, 0])
    hist, _ = np.histogram(phi, bins=16, range=(-math.pi, math.pi))
    expected = len(phi) / 16
    assert (np.abs(hist - expected) < 5 * math.sqrt(expected)).all()


def test_blocks_partition_independent():
    s = spec()
    whole = sample_muons(s, seed=9, start=0, stop=150_000)
    a = sample_muons(s, seed=9, start=0, stop=70_000)
    b = sample_muons(s, seed=9, start=70_000, stop=150_000)
    assert np.array_equal(whole.position, np.concatenate([a.position, b.position]))
    assert np.array_equal(whole.momentum, np.concatenate([a.momentum, b.momentum]))
    assert np.array_equal(whole.time, np.concatenate([a.time, b.time]))


def test_streams_reproducible_and_seed_keyed():
    s = spec()
    m1 = sample_muons(s, seed=5, start=1000, stop=2000)
    m2 = sample_muons(s, seed=5, start=1000, stop=2000)
    m3 = sample_muons(s, seed=6, start=1000, stop=2000)
    assert np.array_equal(m1.position, m2.position)
    assert not np.array_equal(m1.position, m3.position)


def test_spec_validation():
    with pytest.raises(ValueError):
        spec(plane_half=(0.0, 10.0))
    with pytest.raises(ValueError):
        spec(duration_days=-1.0)
    with pytest.raises(ValueError):
        spec(zenith_max_rad=2.0)
    with pytest.raises(ValueError):
        spec(momentum_median=-5.0)
