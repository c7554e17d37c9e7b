"""PoCA scattering reconstruction and voxel accumulation.

Each accepted track pair yields one scattering vertex at the midpoint of
the mutual-perpendicular segment between the fitted incoming and outgoing
lines, carrying the full 3D angle between their directions.  Vertices are
binned into the sample's 2 mm voxel grid; each voxel keeps an integer
event count and an integer angle sum in nanoradians.  Integer accumulation
makes merging of per-worker partial grids exactly associative, so a run
partitioned over any number of workers reproduces the single-pass grid
bit for bit.  Voxel readout is the mean angle in milliradians.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rawio

PARALLEL_TOL = 1e-12
NANORAD = 1.0e9


@dataclass(frozen=True)
class ScatterEvent:
    point: np.ndarray
    angle: float
    time_offset: float


def poca_batch(in_point, in_direction, out_point, out_direction):
    """Vertices and angles for arrays of track pairs.

    Returns ``(valid, points, angles)``; pairs whose lines are parallel
    within tolerance on the direction cross product are flagged invalid
    (no event), because the closest-approach midpoint is undefined.
    """
    # extended precision: the numerators cancel to O(angle^2) for
    # near-intersecting lines and double alone leaves only ~1e-9 mm
    p1 = np.asarray(in_point, dtype=np.longdouble)
    d1 = np.asarray(in_direction, dtype=np.longdouble)
    p2 = np.asarray(out_point, dtype=np.longdouble)
    d2 = np.asarray(out_direction, dtype=np.longdouble)

    cross = np.cross(d1, d2)
    cross_norm = np.sqrt(np.sum(cross * cross, axis=-1))
    dot = np.sum(d1 * d2, axis=-1)
    angles = np.arctan2(cross_norm, dot).astype(float)
    valid = cross_norm >= PARALLEL_TOL

    w0 = p1 - p2
    b = dot
    d = np.sum(d1 * w0, axis=-1)
    e = np.sum(d2 * w0, axis=-1)
    # 1 - b^2 cancels catastrophically near parallel; the cross norm squared
    # is the same quantity computed stably
    denom = cross_norm * cross_norm
    safe = np.where(valid, denom, np.longdouble(1.0))
    t = (b * e - d) / safe
    s = (e - b * d) / safe
    c1 = p1 + t[..., None] * d1
    c2 = p2 + s[..., None] * d2
    points = (0.5 * (c1 + c2)).astype(float)
    return valid, points, angles


def poca(pair) -> ScatterEvent | None:
    """Single track pair to ScatterEvent; None for parallel lines."""
    valid, point, angle = poca_batch(
        pair.in_point[None, :],
        pair.in_direction[None, :],
        pair.out_point[None, :],
        pair.out_direction[None, :],
    )
    if not valid[0]:
        return None
    return ScatterEvent(point[0], float(angle[0]), float(pair.time_offset))


@dataclass
class VoxelGrid:
    """Integer running statistic (count, angle sum) on a regular voxel grid."""

    shape: tuple[int, int, int]
    origin: np.ndarray
    voxel_mm: float
    counts: np.ndarray = field(default=None)
    sums_nanorad: np.ndarray = field(default=None)
    dropped: int = 0

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        if self.counts is None:
            self.counts = np.zeros(self.shape, dtype=np.int64)
        if self.sums_nanorad is None:
            self.sums_nanorad = np.zeros(self.shape, dtype=np.int64)

    @classmethod
    def for_sample(cls, sample) -> "VoxelGrid":
        return cls(sample.grid_shape, sample.voxel_origin, sample.voxel_mm)

    def add_events(self, points: np.ndarray, angles: np.ndarray) -> None:
        """Bin events; points outside the volume are dropped and counted."""
        points = np.asarray(points, dtype=float)
        if len(points) == 0:
            return
        ijk = np.floor((points - self.origin) / self.voxel_mm).astype(np.int64)
        nx, ny, nz = self.shape
        inside = (
            (ijk[:, 0] >= 0) & (ijk[:, 0] < nx)
            & (ijk[:, 1] >= 0) & (ijk[:, 1] < ny)
            & (ijk[:, 2] >= 0) & (ijk[:, 2] < nz)
        )
        self.dropped += int((~inside).sum())
        if not inside.any():
            return
        ijk = ijk[inside]
        quanta = np.round(np.asarray(angles, dtype=float)[inside] * NANORAD).astype(np.int64)
        flat = (ijk[:, 0] * ny + ijk[:, 1]) * nz + ijk[:, 2]
        np.add.at(self.counts.ravel(), flat, 1)
        np.add.at(self.sums_nanorad.ravel(), flat, quanta)

    def merge(self, other: "VoxelGrid") -> None:
        """Exact combination of disjoint partial grids (integer addition)."""
        if other.shape != self.shape or other.voxel_mm != self.voxel_mm:
            raise ValueError("cannot merge grids with different layouts")
        self.counts += other.counts
        self.sums_nanorad += other.sums_nanorad
        self.dropped += other.dropped

    def mean_mrad(self) -> np.ndarray:
        """Mean angle per voxel in mrad (float32); zero where count is zero."""
        out = np.zeros(self.shape, dtype=np.float64)
        hit = self.counts > 0
        # nanorad -> mrad is 1e-6
        out[hit] = self.sums_nanorad[hit] / self.counts[hit] * 1e-6
        return out.astype(np.float32)

    @property
    def total_events(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ImageSlice:
    data: np.ndarray
    z_index: int
    cumulative_days: float


def slice_series(points, angles, times_s, day_boundaries, grid: VoxelGrid):
    """Yield (day, [ImageSlice per z]) cumulative snapshots.

    Snapshot for boundary d contains exactly the events with time < d days.
    ``grid`` is mutated in place and holds the final cumulative statistic
    after iteration.
    """
    boundaries = [float(b) for b in day_boundaries]
    if any(b1 >= b2 for b1, b2 in zip(boundaries, boundaries[1:])) or (
        boundaries and boundaries[0] <= 0
    ):
        raise ValueError("day boundaries must be positive and strictly ascending")
    points = np.asarray(points, dtype=float)
    angles = np.asarray(angles, dtype=float)
    days = np.asarray(times_s, dtype=float) / 86400.0
    prev = 0.0
    for day in boundaries:
        sel = (days >= prev) & (days < day)
        grid.add_events(points[sel], angles[sel])
        volume = grid.mean_mrad()
        yield day, [
            ImageSlice(volume[:, :, k], k, day) for k in range(grid.shape[2])
        ]
        prev = day


def write_volume(path: str, volume: np.ndarray, voxel_mm: float, **extra) -> None:
    """Raw float32 X-fastest volume export (mean mrad by convention)."""
    rawio.write_raw(
        path, np.asarray(volume, dtype=np.float32), voxel_mm=voxel_mm,
        units="mrad", **extra,
    )


def write_slice(path: str, image: np.ndarray, voxel_mm: float, **extra) -> None:
    rawio.write_raw(
        path, np.asarray(image, dtype=np.float32), voxel_mm=voxel_mm,
        units="mrad", **extra,
    )
