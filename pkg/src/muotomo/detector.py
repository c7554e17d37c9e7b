"""Four-module scintillating-fiber tracker model.

Two modules above the sample and two below, each with an x-measuring and a
y-measuring fiber plane at 2 mm pitch.  Muon crossings are quantized to
fiber centers, an independent efficiency coin is flipped per plane, and a
muon is kept only when all eight planes fire.  Incoming and outgoing tracks
are then two-point line fits through the quantized crossings on each side.

Geometry convention: the inner modules sit at z = +/- gap/2 and the outer
modules a further ``separation_mm`` outside, so the slab must fit inside
the central gap.  The full-size instrument images 1066 mm x 1066 mm with
533 fibers per plane and a 530 mm inner gap; the lever arm between paired
modules has no forced value, so it is an explicit parameter here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rawio

TRACK_COLUMNS = [
    "in_x", "in_y", "in_z", "in_dx", "in_dy", "in_dz",
    "out_x", "out_y", "out_z", "out_dx", "out_dy", "out_dz",
    "time_s",
]


@dataclass(frozen=True)
class DetectorSpec:
    imaging_half: tuple[float, float] = (533.0, 533.0)
    pitch_mm: float = 2.0
    gap_mm: float = 530.0
    separation_mm: float = 100.0
    efficiency: float = 1.0

    def __post_init__(self):
        if self.pitch_mm <= 0 or self.gap_mm <= 0 or self.separation_mm <= 0:
            raise ValueError("pitch, gap and separation must be positive")
        for h in self.imaging_half:
            if h <= 0:
                raise ValueError("imaging area must be positive")
            n = 2 * h / self.pitch_mm
            if abs(n - round(n)) > 1e-9:
                raise ValueError("fiber pitch must divide the imaging extent")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must be in (0, 1]")

    @property
    def fibers(self) -> tuple[int, int]:
        """Fiber count per plane along x and y."""
        return (
            int(round(2 * self.imaging_half[0] / self.pitch_mm)),
            int(round(2 * self.imaging_half[1] / self.pitch_mm)),
        )

    @property
    def module_z(self) -> tuple[float, float, float, float]:
        """Module planes ordered top to bottom."""
        inner = self.gap_mm / 2.0
        return (inner + self.separation_mm, inner, -inner, -inner - self.separation_mm)


@dataclass(frozen=True)
class TrackPair:
    """Fitted incoming/outgoing lines (point + downward unit direction)."""

    in_point: np.ndarray
    in_direction: np.ndarray
    out_point: np.ndarray
    out_direction: np.ndarray
    time_offset: float


def quantize_hit(x: float, origin: float, pitch: float, fibers: int):
    """Map a crossing coordinate to (fiber index, fiber center) or None.

    The fiber at ``index`` spans [origin + index*pitch, origin + (index+1)*pitch);
    crossings outside the instrumented extent are misses.
    """
    idx = math.floor((x - origin) / pitch)
    if idx < 0 or idx >= fibers:
        return None
    return idx, origin + (idx + 0.5) * pitch


def _quantize_axis(x: np.ndarray, origin: float, pitch: float, fibers: int):
    idx = np.floor((x - origin) / pitch).astype(np.int64)
    ok = (idx >= 0) & (idx < fibers)
    center = origin + (idx + 0.5) * pitch
    return center, ok


def record_and_fit_batch(
    entry_position: np.ndarray,
    entry_direction: np.ndarray,
    exit_position: np.ndarray,
    exit_direction: np.ndarray,
    time_offset: np.ndarray,
    spec: DetectorSpec,
    rng: np.random.Generator | None = None,
):
    """Quantize crossings in all four modules and fit both track lines.

    ``entry_*`` is the muon state on the slab top face (used for the two
    upstream modules, extrapolated back up its incoming line); ``exit_*`` is
    the state on the bottom plane.  Returns ``(accepted, pairs)`` where
    ``accepted`` is a boolean mask over the input muons and ``pairs`` is a
    dict of arrays for the accepted ones (keys: in_point, in_direction,
    out_point, out_direction, time_offset).

    ``rng`` is consumed only when efficiency < 1 (eight draws per muon), so
    default-efficiency runs are insensitive to its presence.
    """
    n = len(entry_position)
    z_planes = spec.module_z
    ox, oy = -spec.imaging_half[0], -spec.imaging_half[1]
    fx, fy = spec.fibers

    points = []
    ok = np.ones(n, dtype=bool)
    for side, (pos, dirn) in enumerate(
        [(entry_position, entry_direction), (exit_position, exit_direction)]
    ):
        with np.errstate(divide="ignore", invalid="ignore"):
            for z in z_planes[2 * side : 2 * side + 2]:
                t = (z - pos[:, 2]) / dirn[:, 2]
                x = pos[:, 0] + t * dirn[:, 0]
                y = pos[:, 1] + t * dirn[:, 1]
                cx, okx = _quantize_axis(x, ox, spec.pitch_mm, fx)
                cy, oky = _quantize_axis(y, oy, spec.pitch_mm, fy)
                ok &= okx & oky & np.isfinite(x) & np.isfinite(y)
                points.append((cx, cy, z))

    if spec.efficiency < 1.0:
        if rng is None:
            raise ValueError("rng stream required when efficiency < 1")
        fired = rng.random((n, 8)) < spec.efficiency
        ok &= fired.all(axis=1)

    def line(upper, lower):
        p1 = np.stack([upper[0][ok], upper[1][ok], np.full(ok.sum(), upper[2])], axis=1)
        p2 = np.stack([lower[0][ok], lower[1][ok], np.full(ok.sum(), lower[2])], axis=1)
        d = p2 - p1
        d /= np.linalg.norm(d, axis=1)[:, None]
        return p2, d

    in_point, in_dir = line(points[0], points[1])
    out_point, out_dir = line(points[2], points[3])
    pairs = {
        "in_point": in_point,
        "in_direction": in_dir,
        "out_point": out_point,
        "out_direction": out_dir,
        "time_offset": np.asarray(time_offset, dtype=float)[ok],
    }
    return ok, pairs


def record_and_fit(
    entry_position,
    entry_direction,
    exit_position,
    exit_direction,
    time_offset: float,
    spec: DetectorSpec,
    rng: np.random.Generator | None = None,
) -> TrackPair | None:
    """Single-muon variant of :func:`record_and_fit_batch`; None = rejected."""
    ok, pairs = record_and_fit_batch(
        np.asarray(entry_position, dtype=float)[None, :],
        np.asarray(entry_direction, dtype=float)[None, :],
        np.asarray(exit_position, dtype=float)[None, :],
        np.asarray(exit_direction, dtype=float)[None, :],
        np.asarray([time_offset], dtype=float),
        spec,
        rng,
    )
    if not ok[0]:
        return None
    return TrackPair(
        pairs["in_point"][0],
        pairs["in_direction"][0],
        pairs["out_point"][0],
        pairs["out_direction"][0],
        float(pairs["time_offset"][0]),
    )


def write_track_pairs(path: str, pairs: dict, **extra) -> None:
    """Track-pair export: one float32 record per accepted muon."""
    table = np.concatenate(
        [
            pairs["in_point"],
            pairs["in_direction"],
            pairs["out_point"],
            pairs["out_direction"],
            pairs["time_offset"][:, None],
        ],
        axis=1,
    )
    rawio.write_records(path, table, TRACK_COLUMNS, **extra)


def read_track_pairs(path: str):
    table, columns, fields = rawio.read_records(path)
    if columns != TRACK_COLUMNS:
        raise ValueError(f"{path}: unexpected columns {columns}")
    pairs = {
        "in_point": table[:, 0:3].astype(float),
        "in_direction": table[:, 3:6].astype(float),
        "out_point": table[:, 6:9].astype(float),
        "out_direction": table[:, 9:12].astype(float),
        "time_offset": table[:, 12].astype(float),
    }
    return pairs, fields
