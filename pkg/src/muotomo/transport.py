"""Stepped multiple-Coulomb-scattering transport through a concrete sample.

Muons enter through the slab's top face and are marched downward in short
straight segments.  Each segment applies two independent Gaussian angular
kicks in planes orthogonal to the travel direction, with standard deviation

    sigma = (15 MeV / p) * sqrt(L / X0)

for segment length L in the local material (radiation length X0).  Momentum
is unchanged by default; an optional constant-dE/dx mode subtracts
2 MeV cm^2/g along the path.  Kick variances add over segments, so the total
projected deflection recovers the single-formula sigma for any straight
column of material, mixed or not.

Space outside the slab footprint (and anything the voxel grid does not
cover) scatters as air, which at these thicknesses is negligible but keeps
edge trajectories honest.  Exit states are always reported on the bottom
plane z = -half_z; a muon that wanders out of a side face coasts through
air down to that plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ConcreteSample, material_index_grid
from .materials import Registry, default_registry

SCATTER_MEV = 15.0
DEFAULT_STEP_MM = 2.0
DEDX_MEV_CM2_G = 2.0


def scattering_sigma(momentum, length_mm, x0_mm):
    """Projected scattering angle sigma in radians.

    Accepts scalars or arrays; all inputs must be positive (an infinite
    radiation length is allowed and gives zero).
    """
    p = np.asarray(momentum, dtype=float)
    length = np.asarray(length_mm, dtype=float)
    x0 = np.asarray(x0_mm, dtype=float)
    if np.any(p <= 0) or np.any(length <= 0) or np.any(x0 <= 0):
        raise ValueError("momentum, length and radiation length must be positive")
    out = (SCATTER_MEV / p) * np.sqrt(length / x0)
    if out.ndim == 0:
        return float(out)
    return out


class MaterialField:
    """Voxel lookup table mapping points to radiation length and density.

    Built once per sample and shared read-only across muon batches.  Points
    outside the voxel grid resolve to air.
    """

    def __init__(self, sample: ConcreteSample, registry: Registry | None = None):
        registry = registry or default_registry()
        index, materials = material_index_grid(sample, registry)
        air = registry.get("air")
        self.sample = sample
        self.index = index
        self.origin = np.asarray(sample.voxel_origin, dtype=float)
        self.voxel = float(sample.voxel_mm)
        self.shape = index.shape
        # slot len(materials) holds the out-of-grid fallback
        self.x0_mm = np.array([m.radiation_length for m in materials] + [air.radiation_length])
        self.density = np.array([m.density for m in materials] + [air.density])

    def material_slot(self, points: np.ndarray) -> np.ndarray:
        """Material table slot for each point (n, 3); outside -> air slot."""
        ijk = np.floor((points - self.origin) / self.voxel).astype(np.int64)
        nx, ny, nz = self.shape
        inside = (
            (ijk[:, 0] >= 0) & (ijk[:, 0] < nx)
            & (ijk[:, 1] >= 0) & (ijk[:, 1] < ny)
            & (ijk[:, 2] >= 0) & (ijk[:, 2] < nz)
        )
        slot = np.full(len(points), len(self.x0_mm) - 1, dtype=np.int64)
        if inside.any():
            sel = ijk[inside]
            slot[inside] = self.index[sel[:, 0], sel[:, 1], sel[:, 2]]
        return slot


@dataclass(frozen=True)
class PropagationResult:
    """Entry and exit states of one transported muon.

    ``exit_position``/``exit_direction`` are None when the muon was absorbed
    (possible only with energy loss enabled); otherwise the exit position
    lies on the bottom plane of the slab.
    """

    entry_position: np.ndarray
    entry_direction: np.ndarray
    exit_position: np.ndarray | None
    exit_direction: np.ndarray | None
    exit_momentum: float
    path: list | None = None


def _check_entry(position, direction, half):
    z_top = half[2]
    if abs(position[..., 2] - z_top).max() > 1e-6:
        raise ValueError("muon must start on the slab top face")
    if direction[..., 2].max() >= 0:
        raise ValueError("muon must travel downward into the slab")
    if (np.abs(position[..., 0]) > half[0] + 1e-9).any() or (
        np.abs(position[..., 1]) > half[1] + 1e-9
    ).any():
        raise ValueError("muon entry point lies outside the slab top face")


def propagate_batch(
    position: np.ndarray,
    direction: np.ndarray,
    momentum: np.ndarray,
    field: MaterialField,
    rng: np.random.Generator,
    step_mm: float = DEFAULT_STEP_MM,
    energy_loss: bool = False,
):
    """Transport a batch of muons from the slab top face to the bottom plane.

    Returns ``(exit_position, exit_direction, exit_momentum, alive)``.
    Muons are compacted out of the working set as they exit, so the rng draw
    order depends on the whole batch; callers wanting partition-independent
    results must key one rng stream per fixed batch.
    """
    half = field.sample.half
    z_bottom = -half[2]
    pos = np.array(position, dtype=float)
    dirn = np.array(direction, dtype=float)
    p = np.array(momentum, dtype=float)
    n = len(pos)
    if pos.shape != (n, 3) or dirn.shape != (n, 3) or p.shape != (n,):
        raise ValueError("position/direction must be (n, 3), momentum (n,)")
    if step_mm <= 0:
        raise ValueError("step_mm must be positive")
    if n == 0:
        return pos, dirn, p, np.ones(0, dtype=bool)
    if p.min() <= 0:
        raise ValueError("momentum must be positive")
    _check_entry(pos, dirn, half)

    out_pos = pos.copy()
    out_dir = dirn.copy()
    out_p = p.copy()
    alive = np.ones(n, dtype=bool)

    idx = np.arange(n)
    while idx.size:
        cp = pos[idx]
        cd = dirn[idx]
        cm = p[idx]

        t_bottom = (cp[:, 2] - z_bottom) / -cd[:, 2]
        ell = np.minimum(step_mm, t_bottom)
        at_bottom = t_bottom <= step_mm

        mid = cp + cd * (0.5 * ell)[:, None]
        slot = field.material_slot(mid)
        sig = (SCATTER_MEV / cm) * np.sqrt(ell / field.x0_mm[slot])

        cp = cp + cd * ell[:, None]
        cp[at_bottom, 2] = z_bottom

        # angular kick at the end of the segment, in the frame of the old
        # direction: e1 = d x z (x-hat for near-vertical), e2 = d x e1
        kick = rng.standard_normal((idx.size, 2)) * sig[:, None]
        e1 = np.empty_like(cd)
        e1[:, 0] = cd[:, 1]
        e1[:, 1] = -cd[:, 0]
        e1[:, 2] = 0.0
        norm1 = np.sqrt(e1[:, 0] ** 2 + e1[:, 1] ** 2)
        vertical = norm1 < 1e-12
        e1[vertical] = (1.0, 0.0, 0.0)
        norm1[vertical] = 1.0
        e1 /= norm1[:, None]
        e2 = np.cross(cd, e1)
        kicked = sig > 0
        if kicked.any():
            nd = cd + kick[:, :1] * e1 + kick[:, 1:] * e2
            nd /= np.linalg.norm(nd, axis=1)[:, None]
            cd = np.where(kicked[:, None], nd, cd)

        if energy_loss:
            rate = DEDX_MEV_CM2_G * field.density[slot] / 10.0  # MeV per mm
            cm = cm - rate * ell

        pos[idx] = cp
        dirn[idx] = cd
        p[idx] = cm

        absorbed = (cm <= 0) if energy_loss else np.zeros(idx.size, dtype=bool)
        # a muon scattered back upward cannot reach the bottom plane; drop it
        absorbed |= cd[:, 2] >= -1e-9
        done = at_bottom | absorbed
        if done.any():
            sel = idx[done]
            out_pos[sel] = pos[sel]
            out_dir[sel] = dirn[sel]
            out_p[sel] = p[sel]
            alive[sel] = ~absorbed[done]
            idx = idx[~done]

    return out_pos, out_dir, out_p, alive


def propagate(
    position,
    direction,
    momentum: float,
    sample: ConcreteSample,
    rng: np.random.Generator,
    step_mm: float = DEFAULT_STEP_MM,
    energy_loss: bool = False,
    registry: Registry | None = None,
    field: MaterialField | None = None,
    record_path: bool = False,
) -> PropagationResult:
    """Transport a single muon; see :func:`propagate_batch` for the physics.

    ``record_path`` keeps the list of step points for diagnostics.
    """
    if field is None:
        field = MaterialField(sample, registry)
    entry_pos = np.asarray(position, dtype=float)
    entry_dir = np.asarray(direction, dtype=float)
    entry_dir = entry_dir / np.linalg.norm(entry_dir)
    if momentum <= 0:
        raise ValueError("momentum must be positive")

    path = [entry_pos.copy()] if record_path else None
    out_pos, out_dir, out_p, alive = _scalar_walk(
        entry_pos, entry_dir, momentum, field, rng, step_mm, energy_loss, path
    )
    if not alive:
        return PropagationResult(entry_pos, entry_dir, None, None, out_p, path)
    return PropagationResult(entry_pos, entry_dir, out_pos, out_dir, out_p, path)


def _scalar_walk(pos, dirn, p, field, rng, step_mm, energy_loss, path):
    half = field.sample.half
    _check_entry(pos[None, :], dirn[None, :], half)
    z_bottom = -half[2]
    pos = pos.copy()
    dirn = dirn.copy()
    while True:
        t_bottom = (pos[2] - z_bottom) / -dirn[2]
        ell = min(step_mm, t_bottom)
        at_bottom = t_bottom <= step_mm

        mid = pos + dirn * (0.5 * ell)
        slot = field.material_slot(mid[None, :])[0]
        sig = (SCATTER_MEV / p) * np.sqrt(ell / field.x0_mm[slot])

        pos = pos + dirn * ell
        if at_bottom:
            pos[2] = z_bottom
        if sig > 0:
            k1, k2 = rng.standard_normal(2) * sig
            e1 = np.array([dirn[1], -dirn[0], 0.0])
            n1 = np.hypot(e1[0], e1[1])
            if n1 < 1e-12:
                e1 = np.array([1.0, 0.0, 0.0])
            else:
                e1 /= n1
            e2 = np.cross(dirn, e1)
            dirn = dirn + k1 * e1 + k2 * e2
            dirn /= np.linalg.norm(dirn)
        if energy_loss:
            p = p - DEDX_MEV_CM2_G * field.density[slot] / 10.0 * ell
        if path is not None:
            path.append(pos.copy())
        if energy_loss and p <= 0:
            return pos, dirn, p, False
        if dirn[2] >= -1e-9:
            return pos, dirn, p, False
        if at_bottom:
            return pos, dirn, p, True
