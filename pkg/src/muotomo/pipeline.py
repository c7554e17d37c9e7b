"""End-to-end dataset generation.

Per sample: draw a randomized geometry, rasterize ground-truth labels,
then push the full exposure through source -> transport -> detector ->
PoCA -> voxel accumulation, writing cumulative per-day image slices.

Muons are processed in fixed blocks of ``block_size``.  Every random draw
in a block comes from streams keyed by (sample seed, domain, block index),
and block results are combined in block order with integer accumulation,
so the artifacts are byte-identical for any --jobs value: parallelism only
changes which process computes a block, never what the block contains.

Per-sample failures are logged, recorded in the manifest, and do not stop
the run (partial-failure exit).
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, rawio
from .config import RunConfig, config_hash, resolved_text
from .detector import record_and_fit_batch
from .geometry import randomize_sample, rasterize_labels, write_geometry
from .manifest import Manifest, SampleEntry, write_manifest
from .materials import CLASS_LABELS
from .muons import exposure_count, sample_muons
from .reconstruction import VoxelGrid, poca_batch, slice_series
from .seeding import DOMAIN_DETECTOR, DOMAIN_TRANSPORT, keyed_stream
from .transport import MaterialField, propagate_batch

# worker-local geometry cache: rebuilding the sample per block would swamp
# the task runtime
_FIELD_CACHE: dict = {}


def _sample_field(config: RunConfig, sample_seed: int):
    key = (sample_seed, config.slab_mm, config.voxel_mm, config.grids,
           config.ducts, config.voids, config.unknowns, config.max_attempts)
    hit = _FIELD_CACHE.get(key)
    if hit is None:
        sample = randomize_sample(
            sample_seed, config.slab_mm, config.voxel_mm, config.randomizer_config()
        )
        hit = MaterialField(sample)
        _FIELD_CACHE.clear()  # one sample in flight at a time
        _FIELD_CACHE[key] = hit
    return hit


def _block_events(args):
    """One block of muons through the full chain; returns PoCA events."""
    config, sample_seed, block_index, start, stop = args
    field = _sample_field(config, sample_seed)
    sample = field.sample
    exposure = config.exposure_spec()
    det = config.detector_spec()

    batch = sample_muons(exposure, sample_seed, start, stop, config.block_size)
    pos, dirn, mom, times = batch.position, batch.direction, batch.momentum, batch.time

    # straight line down to the slab top face
    z_top = sample.half[2]
    t_top = (z_top - pos[:, 2]) / dirn[:, 2]
    at_top = pos + dirn * t_top[:, None]
    hits = (np.abs(at_top[:, 0]) <= sample.half[0]) & (
        np.abs(at_top[:, 1]) <= sample.half[1]
    )

    n = len(pos)
    exit_pos = np.empty((n, 3))
    exit_dir = np.empty((n, 3))
    alive = np.ones(n, dtype=bool)

    if hits.any():
        rng = keyed_stream(sample_seed, DOMAIN_TRANSPORT, block_index)
        e_pos, e_dir, _, e_alive = propagate_batch(
            at_top[hits], dirn[hits], mom[hits], field, rng,
            step_mm=config.step_mm, energy_loss=config.energy_loss,
        )
        exit_pos[hits] = e_pos
        exit_dir[hits] = e_dir
        alive[hits] = e_alive
    misses = ~hits
    if misses.any():
        t_bot = (-z_top - pos[misses, 2]) / dirn[misses, 2]
        exit_pos[misses] = pos[misses] + dirn[misses] * t_bot[:, None]
        exit_dir[misses] = dirn[misses]

    keep = np.flatnonzero(alive)
    det_rng = None
    if det.efficiency < 1.0:
        det_rng = keyed_stream(sample_seed, DOMAIN_DETECTOR, block_index)
    accepted, pairs = record_and_fit_batch(
        pos[keep], dirn[keep], exit_pos[keep], exit_dir[keep], times[keep],
        det, det_rng,
    )
    valid, points, angles = poca_batch(
        pairs["in_point"], pairs["in_direction"],
        pairs["out_point"], pairs["out_direction"],
    )
    return points[valid], angles[valid], pairs["time_offset"][valid]


def _block_tasks(config: RunConfig, sample_seed: int, count: int):
    size = config.block_size
    for block_index in range((count + size - 1) // size):
        start = block_index * size
        yield (config, sample_seed, block_index, start, min(start + size, count))


def _class_map() -> str:
    return " ".join(f"{i}:{name}" for i, name in enumerate(CLASS_LABELS))


def generate_sample(config: RunConfig, index: int, out_root: str, pool=None) -> SampleEntry:
    """Produce every artifact for one sample; returns its manifest entry."""
    sample_seed = config.seed + index
    sid = f"sample_{index:04d}"
    sample_dir = os.path.join(out_root, sid)
    os.makedirs(sample_dir, exist_ok=True)

    sample = randomize_sample(
        sample_seed, config.slab_mm, config.voxel_mm, config.randomizer_config()
    )
    with open(os.path.join(sample_dir, "geometry.txt"), "w") as fh:
        fh.write(write_geometry(sample))
    labels = rasterize_labels(sample)
    rawio.write_raw(
        os.path.join(sample_dir, "labels.raw"), labels,
        voxel_mm=config.voxel_mm, class_map=_class_map(),
    )

    count = exposure_count(config.exposure_spec())
    tasks = list(_block_tasks(config, sample_seed, count))
    if pool is not None:
        results = list(pool.map(_block_events, tasks, chunksize=1))
    else:
        results = [_block_events(t) for t in tasks]

    if results:
        points = np.concatenate([r[0] for r in results])
        angles = np.concatenate([r[1] for r in results])
        times = np.concatenate([r[2] for r in results])
    else:
        points = np.zeros((0, 3))
        angles = np.zeros(0)
        times = np.zeros(0)

    grid = VoxelGrid.for_sample(sample)
    day_dirs = []
    for k, (day, slices) in enumerate(
        slice_series(points, angles, times, config.boundaries, grid)
    ):
        day_dir = os.path.join(sample_dir, f"day_{k + 1:03d}")
        os.makedirs(day_dir, exist_ok=True)
        for s in slices:
            rawio.write_raw(
                os.path.join(day_dir, f"slice_{s.z_index:03d}.raw"),
                s.data, voxel_mm=config.voxel_mm, units="mrad",
                cumulative_days=day, z_index=s.z_index,
            )
        day_dirs.append(os.path.join(sid, f"day_{k + 1:03d}"))

    return SampleEntry(
        sample_id=sid,
        seed=sample_seed,
        geometry=os.path.join(sid, "geometry.txt"),
        labels=os.path.join(sid, "labels.raw"),
        day_dirs=day_dirs,
        events=grid.total_events,
        dropped=grid.dropped,
    )


def generate_run(config: RunConfig, log=None) -> tuple[Manifest, int]:
    """Run all samples; returns (manifest, exit code 0 or 1)."""
    out_root = config.out
    os.makedirs(out_root, exist_ok=True)
    with open(os.path.join(out_root, "run_config.txt"), "w") as fh:
        fh.write(resolved_text(config))

    manifest = Manifest(
        version=__version__,
        config_hash=config_hash(config),
        day_boundaries=list(config.boundaries),
        slices_per_day=int(round(config.slab_mm[2] / config.voxel_mm)),
    )

    pool = None
    try:
        if config.jobs > 1:
            pool = ProcessPoolExecutor(max_workers=config.jobs)
        for index in range(config.samples):
            try:
                entry = generate_sample(config, index, out_root, pool)
            except Exception as err:  # keep going; the manifest records it
                entry = SampleEntry(
                    sample_id=f"sample_{index:04d}",
                    seed=config.seed + index,
                    geometry="", labels="", day_dirs=[],
                    error=f"{type(err).__name__}: {err}",
                )
                if log:
                    log(f"{entry.sample_id} failed: {entry.error}")
            manifest.samples.append(entry)
            if log and not entry.error:
                log(f"{entry.sample_id}: {entry.events} events "
                    f"({entry.dropped} outside volume)")
    finally:
        if pool is not None:
            pool.shutdown()

    write_manifest(os.path.join(out_root, "manifest.txt"), manifest)
    return manifest, (1 if manifest.failures else 0)
