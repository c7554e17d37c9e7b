"""Cosmic-ray muon generation.

Muons arrive on a horizontal plane with an integral flux of
1 muon cm^-2 min^-1 (configurable), a zenith-angle density proportional
to cos^2(theta) * sin(theta), and a log-normal momentum spectrum
(median 3000 MeV/c, sigma_log 0.55 by default) truncated below
100 MeV/c by rejection.  Directions point downward.

Generation is partitionable: muons are indexed, and any block
[start, stop) can be drawn independently from its keyed stream with
identical results to a single pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import seeding

__all__ = ["ExposureSpec", "MuonBatch", "exposure_count", "sample_muons", "generation_block_stream"]

_COUNT_LIMIT = 2**63 - 1

# Muons are drawn in fixed-size index blocks; block b always produces the
# same muons for a given seed, however blocks are scheduled.
DEFAULT_BLOCK_SIZE = 65536


@dataclass(frozen=True)
class ExposureSpec:
    """Where, how long, and with what spectrum muons are generated.

    plane_half : (hx, hy) half-extents in mm of the generation plane
    plane_z    : plane height in mm
    duration_days : exposure time
    flux_per_cm2_min : integral flux through the plane
    zenith_max_rad : zenith-angle cutoff
    momentum_median / momentum_sigma_log : log-normal spectrum (MeV/c)
    momentum_min : rejection threshold (MeV/c)
    """

    plane_half: tuple[float, float]
    plane_z: float
    duration_days: float
    flux_per_cm2_min: float = 1.0
    zenith_max_rad: float = math.radians(70.0)
    momentum_median: float = 3000.0
    momentum_sigma_log: float = 0.55
    momentum_min: float = 100.0

    def __post_init__(self) -> None:
        if self.plane_half[0] <= 0 or self.plane_half[1] <= 0:
            raise ValueError("plane half-extents must be positive")
        if self.duration_days < 0 or self.flux_per_cm2_min < 0:
            raise ValueError("duration and flux must be non-negative")
        if not (0.0 < self.zenith_max_rad <= math.pi / 2.0):
            raise ValueError("zenith_max_rad must lie in (0, pi/2]")
        if self.momentum_median <= 0 or self.momentum_sigma_log <= 0:
            raise ValueError("momentum spectrum parameters must be positive")

    @property
    def area_cm2(self) -> float:
        return (2.0 * self.plane_half[0] / 10.0) * (2.0 * self.plane_half[1] / 10.0)


@dataclass
class MuonBatch:
    """Struct-of-arrays muon bundle (positions mm, unit directions,
    momenta MeV/c, time offsets in seconds since exposure start)."""

    position: np.ndarray  # (n, 3)
    direction: np.ndarray  # (n, 3)
    momentum: np.ndarray  # (n,)
    time: np.ndarray  # (n,)

    def __len__(self) -> int:
        return len(self.momentum)


def exposure_count(spec: ExposureSpec, seed: int | None = None, poisson: bool = False) -> int:
    """Number of muons for the exposure.

    Deterministic by default: round(flux * area_cm2 * minutes).  With
    ``poisson=True`` the count is Poisson-distributed about that mean,
    drawn from the (seed, source, -1) stream.
    """
    mean = spec.flux_per_cm2_min * spec.area_cm2 * spec.duration_days * 1440.0
    if mean > _COUNT_LIMIT:
        raise OverflowError(f"exposure of {mean:.3e} muons exceeds the supported count range")
    if not poisson:
        return int(round(mean))
    if seed is None:
        raise ValueError("poisson counts need a seed")
    stream = seeding.keyed_stream(seed, seeding.DOMAIN_SOURCE, 2**32)
    return int(stream.poisson(mean))


def generation_block_stream(seed: int, block: int) -> np.random.Generator:
    return seeding.keyed_stream(seed, seeding.DOMAIN_SOURCE, block)


def sample_muons(spec: ExposureSpec, seed: int, start: int, stop: int,
                 block_size: int = DEFAULT_BLOCK_SIZE) -> MuonBatch:
    """Draw muons with indices [start, stop).

    Blocks of ``block_size`` indices are drawn from independent keyed
    streams, so any partition of the index range yields the same muons.
    """
    if not (0 <= start <= stop):
        raise ValueError("need 0 <= start <= stop")
    if stop == start:
        z = np.zeros((0, 3))
        return MuonBatch(z, z.copy(), np.zeros(0), np.zeros(0))
    parts = []
    for b in range(start // block_size, (stop - 1) // block_size + 1):
        # always draw the whole block, then slice: a partial draw would
        # shift the stream and break partition independence
        batch = _sample_block(spec, generation_block_stream(seed, b), block_size)
        a = max(start - b * block_size, 0)
        z = min(stop - b * block_size, block_size)
        parts.append((batch, a, z))
    pos = np.concatenate([p.position[a:z] for p, a, z in parts])
    dirs = np.concatenate([p.direction[a:z] for p, a, z in parts])
    mom = np.concatenate([p.momentum[a:z] for p, a, z in parts])
    t = np.concatenate([p.time[a:z] for p, a, z in parts])
    return MuonBatch(pos, dirs, mom, t)


def _sample_block(spec: ExposureSpec, rng: np.random.Generator, n: int) -> MuonBatch:
    hx, hy = spec.plane_half
    pos = np.empty((n, 3))
    pos[:, 0] = rng.uniform(-hx, hx, n)
    pos[:, 1] = rng.uniform(-hy, hy, n)
    pos[:, 2] = spec.plane_z

    # zenith: density ~ cos^2 * sin on [0, zenith_max]; inverse CDF on cos^3
    u = rng.uniform(0.0, 1.0, n)
    c3_min = math.cos(spec.zenith_max_rad) ** 3
    cos_t = (1.0 - u * (1.0 - c3_min)) ** (1.0 / 3.0)
    sin_t = np.sqrt(1.0 - cos_t**2)
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    direction = np.column_stack([sin_t * np.cos(phi), sin_t * np.sin(phi), -cos_t])

    mom = spec.momentum_median * np.exp(spec.momentum_sigma_log * rng.standard_normal(n))
    low = mom < spec.momentum_min
    while low.any():  # rejection redraw; vanishingly rare with the defaults
        mom[low] = spec.momentum_median * np.exp(spec.momentum_sigma_log * rng.standard_normal(int(low.sum())))
        low = mom < spec.momentum_min

    time = rng.uniform(0.0, spec.duration_days * 86400.0, n)
    return MuonBatch(pos, direction, mom, time)
