"""Concrete sample geometry: randomized placement, queries, rasterization.

A sample is a concrete slab (default 1000 x 1000 x 200 mm, centred on the
origin, z up) containing rebar grids, grouted tendon ducts, spherical air
voids and "unknown" foreign objects.  Objects are placed in the order
rebar -> duct -> void -> unknown; a placement that overlaps anything
already present is fully re-drawn, and after ``max_attempts`` failures the
object is dropped with a warning.

All randomness is keyed by (sample seed, object index, attempt, parameter
index), so a sample is a pure function of (seed, config).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import seeding
from .materials import Material, Registry, default_registry

__all__ = [
    "CLASS_CONCRETE",
    "CLASS_REBAR",
    "CLASS_DUCT",
    "CLASS_VOID",
    "CLASS_UNKNOWN",
    "ConcreteSample",
    "GeometryError",
    "RandomizerConfig",
    "RebarGrid",
    "TendonDuct",
    "AirVoid",
    "UnknownObject",
    "material_at",
    "path_segments",
    "randomize_sample",
    "rasterize_labels",
    "material_index_grid",
    "write_geometry",
    "parse_geometry",
]

# Ground-truth label classes.
CLASS_CONCRETE = 0
CLASS_REBAR = 1
CLASS_DUCT = 2
CLASS_VOID = 3
CLASS_UNKNOWN = 4

DEFAULT_SLAB_MM = (1000.0, 1000.0, 200.0)
DEFAULT_VOXEL_MM = 2.0

# Fixed parameter menus for the randomizer (mm).
ROD_DIAMETERS = (8.0, 10.0, 12.0, 16.0, 20.0, 25.0)
GRID_SPACINGS = (100.0, 150.0, 200.0, 250.0)
ROD_COUNT_RANGE = (2, 12)
CASING_DIAMETERS = (50.0, 60.0, 70.0, 80.0, 90.0, 100.0)
CASING_MATERIALS = ("casing_steel", "hdpe", "hdpp")
CASING_THICKNESS_MM = {"casing_steel": 0.5, "hdpe": 3.0, "hdpp": 3.0}
STRAND_DIAMETER_MM = 15.7
STRAND_COUNTS = {50.0: 3, 60.0: 4, 70.0: 7, 80.0: 9, 90.0: 12, 100.0: 15}
VOID_DIAMETER_RANGE = (10.0, 100.0)
UNKNOWN_EDGE_RANGE = (35.0, 75.0)
UNKNOWN_SHAPES = ("box", "cylinder", "sphere")
UNKNOWN_MATERIALS = ("water", "aluminium", "iron", "lead", "uranium")

# Surface sampling pitch for placement overlap tests.
OVERLAP_SAMPLING_MM = 1.0


class GeometryError(ValueError):
    pass


# --------------------------------------------------------------------------
# object types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RebarGrid:
    """Two touching orthogonal layers of steel rods.

    The lower layer's rods run along X (spread across Y), the upper
    layer's along Y.  ``center`` is the centre of the whole grid; rod
    lengths close the lattice (each layer spans the other's spread).
    """

    rod_diameter: float
    spacing: float
    rods_along_x: int
    rods_along_y: int
    center: tuple[float, float, float]

    kind = "rebar_grid"
    class_label = CLASS_REBAR

    @property
    def extent(self) -> tuple[float, float, float]:
        ex = (self.rods_along_y - 1) * self.spacing + self.rod_diameter
        ey = (self.rods_along_x - 1) * self.spacing + self.rod_diameter
        return (ex, ey, 2.0 * self.rod_diameter)

    def rods(self):
        """Yield (axis, u0, v0, half_length, radius, center_along) per rod.

        axis 'x': rod along X at (y=u0, z=v0); axis 'y': rod along Y at
        (x=u0, z=v0).
        """
        cx, cy, cz = self.center
        r = self.rod_diameter / 2.0
        ex, ey, _ = self.extent
        y_lo = cy - (self.rods_along_x - 1) * self.spacing / 2.0
        x_lo = cx - (self.rods_along_y - 1) * self.spacing / 2.0
        for i in range(self.rods_along_x):
            yield ("x", y_lo + i * self.spacing, cz - r, ex / 2.0, r, cx)
        for j in range(self.rods_along_y):
            yield ("y", x_lo + j * self.spacing, cz + r, ey / 2.0, r, cy)


@dataclass(frozen=True)
class TendonDuct:
    """Casing tube + grout fill + hex-packed strands, spanning the slab."""

    axis: str  # 'x' or 'y'
    casing_material: str
    outer_diameter: float
    half_length: float
    center: tuple[float, float, float]

    kind = "tendon_duct"
    class_label = CLASS_DUCT

    @property
    def casing_thickness(self) -> float:
        return CASING_THICKNESS_MM[self.casing_material]

    @property
    def bore_radius(self) -> float:
        return self.outer_diameter / 2.0 - self.casing_thickness

    def strand_offsets(self) -> tuple[tuple[float, float], ...]:
        return _strand_packing(STRAND_COUNTS[self.outer_diameter])


@dataclass(frozen=True)
class AirVoid:
    diameter: float
    center: tuple[float, float, float]

    kind = "air_void"
    class_label = CLASS_VOID


@dataclass(frozen=True)
class UnknownObject:
    """Box / cylinder / sphere of a foreign material, freely oriented.

    ``dims`` are the shape's own bounding-box edge lengths (pre-rotation):
    (a, b, c) for a box, (d, d, h) for a cylinder, (d, d, d) for a sphere.
    ``rotation`` maps local to world coordinates.
    """

    shape: str
    dims: tuple[float, float, float]
    material: str
    center: tuple[float, float, float]
    rotation: tuple[float, ...]  # row-major 3x3

    kind = "unknown"
    class_label = CLASS_UNKNOWN

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.rotation, dtype=float).reshape(3, 3)


PlacedObject = RebarGrid | TendonDuct | AirVoid | UnknownObject


def _strand_packing(n: int) -> tuple[tuple[float, float], ...]:
    """Centred packing of n strand axes (offsets in mm from the duct axis).

    Small counts use the classical compact packings (pair, triangle,
    square); larger ones fill hexagonal shells at 2 and 4 strand radii.
    A plain hex lattice would not clear a 3 mm polymer casing bore at the
    smallest diameter, which is why 3 and 4 get their compact forms.
    """
    r = STRAND_DIAMETER_MM / 2.0
    if n == 1:
        return ((0.0, 0.0),)
    if n == 2:
        return ((-r, 0.0), (r, 0.0))
    if n == 3:
        rho = 2.0 * r / math.sqrt(3.0)
        return tuple(
            (rho * math.cos(a), rho * math.sin(a))
            for a in (math.pi / 2, math.pi / 2 + 2 * math.pi / 3, math.pi / 2 + 4 * math.pi / 3)
        )
    if n == 4:
        rho = r * math.sqrt(2.0)
        return tuple(
            (rho * math.cos(a), rho * math.sin(a))
            for a in (math.pi / 4, 3 * math.pi / 4, 5 * math.pi / 4, 7 * math.pi / 4)
        )
    out: list[tuple[float, float]] = [(0.0, 0.0)]
    # hex-lattice shells in distance order: 6 at 2r, 6 at 2*sqrt(3)*r
    # (rotated 30 deg), 6 at 4r; any lattice subset keeps >= 2r spacing
    shells = (
        (2.0 * r, 0.0),
        (2.0 * math.sqrt(3.0) * r, math.pi / 6.0),
        (4.0 * r, 0.0),
    )
    for rho, phase in shells:
        for k in range(6):
            a = phase + k * math.pi / 3.0
            out.append((rho * math.cos(a), rho * math.sin(a)))
    return tuple(out[:n])


# --------------------------------------------------------------------------
# sample container
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConcreteSample:
    seed: int
    size: tuple[float, float, float] = DEFAULT_SLAB_MM
    voxel_mm: float = DEFAULT_VOXEL_MM
    objects: tuple[PlacedObject, ...] = ()
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for s in self.size:
            n = s / self.voxel_mm
            if abs(n - round(n)) > 1e-9:
                raise GeometryError(f"slab size {self.size} not an integer number of {self.voxel_mm} mm voxels")

    @property
    def half(self) -> tuple[float, float, float]:
        return (self.size[0] / 2.0, self.size[1] / 2.0, self.size[2] / 2.0)

    @property
    def grid_shape(self) -> tuple[int, int, int]:
        return tuple(int(round(s / self.voxel_mm)) for s in self.size)

    @property
    def voxel_origin(self) -> np.ndarray:
        """Lower corner of voxel (0,0,0)."""
        return -np.asarray(self.half)


# --------------------------------------------------------------------------
# containment / surface sampling
# --------------------------------------------------------------------------


def _aabb(obj: PlacedObject) -> tuple[np.ndarray, np.ndarray]:
    c = np.asarray(obj.center)
    if isinstance(obj, RebarGrid):
        h = np.asarray(obj.extent) / 2.0
        return c - h, c + h
    if isinstance(obj, TendonDuct):
        r = obj.outer_diameter / 2.0
        h = np.array([obj.half_length, r, r]) if obj.axis == "x" else np.array([r, obj.half_length, r])
        return c - h, c + h
    if isinstance(obj, AirVoid):
        h = np.full(3, obj.diameter / 2.0)
        return c - h, c + h
    rot = obj.matrix
    if obj.shape == "box":
        h = np.abs(rot) @ (np.asarray(obj.dims) / 2.0)
    elif obj.shape == "sphere":
        h = np.full(3, obj.dims[0] / 2.0)
    else:  # cylinder along local z
        u = rot[:, 2]
        r, hl = obj.dims[0] / 2.0, obj.dims[2] / 2.0
        h = np.abs(u) * hl + r * np.sqrt(np.maximum(1.0 - u * u, 0.0))
    return c - h, c + h


def _contains(obj: PlacedObject, pts: np.ndarray) -> np.ndarray:
    """Effective-volume containment for placement (grid = bounding slab)."""
    pts = np.atleast_2d(pts)
    c = np.asarray(obj.center)
    if isinstance(obj, RebarGrid):
        lo, hi = _aabb(obj)
        return ((pts >= lo) & (pts <= hi)).all(axis=1)
    if isinstance(obj, TendonDuct):
        d = pts - c
        ia = 0 if obj.axis == "x" else 1
        iu, iv = (1, 2) if obj.axis == "x" else (0, 2)
        rad2 = d[:, iu] ** 2 + d[:, iv] ** 2
        return (rad2 <= (obj.outer_diameter / 2.0) ** 2) & (np.abs(d[:, ia]) <= obj.half_length)
    if isinstance(obj, AirVoid):
        return ((pts - c) ** 2).sum(axis=1) <= (obj.diameter / 2.0) ** 2
    local = (pts - c) @ obj.matrix  # R^T (p - c) row-wise
    if obj.shape == "box":
        h = np.asarray(obj.dims) / 2.0
        return (np.abs(local) <= h).all(axis=1)
    if obj.shape == "sphere":
        return (local**2).sum(axis=1) <= (obj.dims[0] / 2.0) ** 2
    r, hl = obj.dims[0] / 2.0, obj.dims[2] / 2.0
    return (local[:, 0] ** 2 + local[:, 1] ** 2 <= r * r) & (np.abs(local[:, 2]) <= hl)


def _fibonacci_sphere(radius: float, res: float) -> np.ndarray:
    n = max(int(4.0 * math.pi * radius**2 / res**2), 16)
    k = np.arange(n) + 0.5
    phi = math.pi * (3.0 - math.sqrt(5.0)) * k
    z = 1.0 - 2.0 * k / n
    s = np.sqrt(1.0 - z * z)
    return radius * np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def _cylinder_lateral(radius: float, half_length: float, res: float) -> np.ndarray:
    na = max(int(2.0 * half_length / res), 2)
    nc = max(int(2.0 * math.pi * radius / res), 8)
    a = np.linspace(-half_length, half_length, na)
    t = np.arange(nc) * (2.0 * math.pi / nc)
    aa, tt = np.meshgrid(a, t, indexing="ij")
    return np.column_stack([radius * np.cos(tt).ravel(), radius * np.sin(tt).ravel(), aa.ravel()])


def _disc(radius: float, z: float, res: float) -> np.ndarray:
    nr = max(int(radius / res), 1)
    pts = [np.array([[0.0, 0.0, z]])]
    for rr in np.linspace(radius / nr, radius, nr):
        nc = max(int(2.0 * math.pi * rr / res), 6)
        t = np.arange(nc) * (2.0 * math.pi / nc)
        pts.append(np.column_stack([rr * np.cos(t), rr * np.sin(t), np.full(nc, z)]))
    return np.concatenate(pts)


def _box_faces(h: np.ndarray, res: float) -> np.ndarray:
    axes = []
    for i in range(3):
        n = max(int(2.0 * h[i] / res) + 1, 2)
        axes.append(np.linspace(-h[i], h[i], n))
    faces = []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        jj, kk = np.meshgrid(axes[j], axes[k], indexing="ij")
        for s in (-h[i], h[i]):
            f = np.empty((jj.size, 3))
            f[:, i] = s
            f[:, j] = jj.ravel()
            f[:, k] = kk.ravel()
            faces.append(f)
    return np.concatenate(faces)


def _surface_points(obj: PlacedObject, res: float = OVERLAP_SAMPLING_MM, axis_clip=None) -> np.ndarray:
    c = np.asarray(obj.center)
    if isinstance(obj, RebarGrid):
        # Bounding-slab proxy: a sparse lattice is enough, the grid slab can
        # never hide entirely inside another object at the allowed sizes.
        lo, hi = _aabb(obj)
        g = [np.linspace(lo[i], hi[i], 3) for i in range(3)]
        xx, yy, zz = np.meshgrid(*g, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])
    if isinstance(obj, TendonDuct):
        ia = 0 if obj.axis == "x" else 1
        lo_a, hi_a = -obj.half_length, obj.half_length
        if axis_clip is not None:
            # Only the stretch of the tube near the other object matters.
            lo_a = max(lo_a, axis_clip[0] - c[ia])
            hi_a = min(hi_a, axis_clip[1] - c[ia])
            if hi_a < lo_a:
                return np.empty((0, 3))
        hl = (hi_a - lo_a) / 2.0
        lat = _cylinder_lateral(obj.outer_diameter / 2.0, max(hl, res / 2.0), res)
        lat[:, 2] += (lo_a + hi_a) / 2.0
        if obj.axis == "x":
            lat = lat[:, [2, 0, 1]]
        else:
            lat = lat[:, [0, 2, 1]]
        return lat + c
    if isinstance(obj, AirVoid):
        return _fibonacci_sphere(obj.diameter / 2.0, res) + c
    if obj.shape == "sphere":
        return _fibonacci_sphere(obj.dims[0] / 2.0, res) + c
    if obj.shape == "box":
        local = _box_faces(np.asarray(obj.dims) / 2.0, res)
    else:
        r, hl = obj.dims[0] / 2.0, obj.dims[2] / 2.0
        local = np.concatenate([_cylinder_lateral(r, hl, res), _disc(r, -hl, res), _disc(r, hl, res)])
    return local @ obj.matrix.T + c


def _overlaps(a: PlacedObject, b: PlacedObject, cache: dict[int, np.ndarray]) -> bool:
    lo_a, hi_a = _aabb(a)
    lo_b, hi_b = _aabb(b)
    if (hi_a < lo_b).any() or (hi_b < lo_a).any():
        return False
    if isinstance(a, RebarGrid) and isinstance(b, RebarGrid):
        return True  # both effective volumes are boxes; AABB test is exact
    for first, second, lo2, hi2 in ((a, b, lo_b, hi_b), (b, a, lo_a, hi_a)):
        if isinstance(first, TendonDuct):
            # Only the tube stretch near the other object matters; walk it in
            # chunks so a clear hit bails out early instead of sampling the
            # whole slab-long surface.
            ia = 0 if first.axis == "x" else 1
            m = OVERLAP_SAMPLING_MM
            c_a = first.center[ia]
            lo_c = max(lo2[ia] - m, c_a - first.half_length)
            hi_c = min(hi2[ia] + m, c_a + first.half_length)
            step = 100.0
            edge = lo_c
            hit = False
            while edge < hi_c and not hit:
                pts = _surface_points(first, axis_clip=(edge, min(edge + step, hi_c)))
                hit = len(pts) > 0 and bool(_contains(second, pts).any())
                edge += step
            if hit:
                return True
            continue
        pts = cache.get(id(first))
        if pts is None:
            pts = _surface_points(first)
            cache[id(first)] = pts
        if len(pts) and _contains(second, pts).any():
            return True
    return False


# --------------------------------------------------------------------------
# queries
# --------------------------------------------------------------------------


def _duct_material_name(duct: TendonDuct, pts: np.ndarray) -> np.ndarray:
    """Per-point material name index within a duct: -1 outside, else index
    into (casing, grout, strand)."""
    pts = np.atleast_2d(pts)
    d = pts - np.asarray(duct.center)
    ia = 0 if duct.axis == "x" else 1
    iu, iv = (1, 2) if duct.axis == "x" else (0, 2)
    u, v = d[:, iu], d[:, iv]
    rad2 = u * u + v * v
    out = np.full(len(pts), -1, dtype=np.int8)
    r_out = duct.outer_diameter / 2.0
    inside = (rad2 <= r_out * r_out) & (np.abs(d[:, ia]) <= duct.half_length)
    bore = duct.bore_radius
    out[inside & (rad2 > bore * bore)] = 0  # casing
    grout = inside & (rad2 <= bore * bore)
    out[grout] = 1
    rs = STRAND_DIAMETER_MM / 2.0
    for su, sv in duct.strand_offsets():
        hit = grout & ((u - su) ** 2 + (v - sv) ** 2 <= rs * rs)
        out[hit] = 2
    return out


def _grid_hit(grid: RebarGrid, pts: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(pts)
    hit = np.zeros(len(pts), dtype=bool)
    for axis, u0, v0, hl, r, c_along in grid.rods():
        if axis == "x":
            along, u, v = pts[:, 0] - c_along, pts[:, 1] - u0, pts[:, 2] - v0
        else:
            along, u, v = pts[:, 1] - c_along, pts[:, 0] - u0, pts[:, 2] - v0
        hit |= (np.abs(along) <= hl) & (u * u + v * v <= r * r)
    return hit


def material_at(sample: ConcreteSample, point, registry: Registry | None = None) -> Material:
    """Material of the innermost subcomponent containing ``point`` (mm).

    Raises GeometryError for points outside the slab.
    """
    reg = registry or default_registry()
    p = np.asarray(point, dtype=float)
    h = np.asarray(sample.half)
    if (np.abs(p) > h).any():
        raise GeometryError(f"point {tuple(p)} outside slab of half-size {tuple(h)}")
    pt = p.reshape(1, 3)
    for obj in sample.objects:
        if isinstance(obj, RebarGrid):
            if _grid_hit(obj, pt)[0]:
                return reg.get("rebar_steel")
        elif isinstance(obj, TendonDuct):
            comp = _duct_material_name(obj, pt)[0]
            if comp == 0:
                return reg.get(obj.casing_material)
            if comp == 1:
                return reg.get("grout")
            if comp == 2:
                return reg.get("strand_steel")
        elif isinstance(obj, AirVoid):
            if _contains(obj, pt)[0]:
                return reg.get("air")
        else:
            if _contains(obj, pt)[0]:
                return reg.get(obj.material)
    return reg.get("concrete")


def path_segments(sample: ConcreteSample, origin, direction, registry: Registry | None = None):
    """Materials along a ray through the slab.

    Marches at the voxel scale with midpoint sampling and merges
    consecutive equal materials.  Returns [(length_mm, Material), ...];
    the lengths sum to the slab chord.  A ray that misses returns [].
    """
    reg = registry or default_registry()
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(d)
    if norm == 0.0:
        raise GeometryError("direction must be non-zero")
    d = d / norm
    h = np.asarray(sample.half)
    # ray/AABB clip
    t0, t1 = 0.0, np.inf
    for i in range(3):
        if d[i] == 0.0:
            if abs(o[i]) > h[i]:
                return []
            continue
        ta = (-h[i] - o[i]) / d[i]
        tb = (h[i] - o[i]) / d[i]
        ta, tb = min(ta, tb), max(ta, tb)
        t0, t1 = max(t0, ta), min(t1, tb)
    if t1 <= t0:
        return []
    n = max(int(math.ceil((t1 - t0) / sample.voxel_mm)), 1)
    bounds = np.linspace(t0, t1, n + 1)
    eps = 1e-9
    segments: list[tuple[float, Material]] = []
    for i in range(n):
        mid = o + d * ((bounds[i] + bounds[i + 1]) / 2.0)
        mid = np.clip(mid, -h + eps, h - eps)
        mat = material_at(sample, mid, reg)
        length = float(bounds[i + 1] - bounds[i])
        if segments and segments[-1][1].name == mat.name:
            segments[-1] = (segments[-1][0] + length, mat)
        else:
            segments.append((length, mat))
    return segments


# --------------------------------------------------------------------------
# rasterization
# --------------------------------------------------------------------------


def _voxel_centers_1d(sample: ConcreteSample, axis: int) -> np.ndarray:
    n = sample.grid_shape[axis]
    return -sample.half[axis] + (np.arange(n) + 0.5) * sample.voxel_mm


def _paint(sample: ConcreteSample, registry: Registry):
    """Rasterize labels and material indices at voxel centres in one pass."""
    nx, ny, nz = sample.grid_shape
    labels = np.zeros((nx, ny, nz), dtype=np.uint8)
    mat_index = np.zeros((nx, ny, nz), dtype=np.uint8)
    names: list[str] = ["concrete"]

    def mat_id(name: str) -> int:
        try:
            return names.index(name)
        except ValueError:
            names.append(name)
            return len(names) - 1

    xs = _voxel_centers_1d(sample, 0)
    ys = _voxel_centers_1d(sample, 1)
    zs = _voxel_centers_1d(sample, 2)

    def slab_range(axis_vals, lo, hi):
        i0 = int(np.searchsorted(axis_vals, lo))
        i1 = int(np.searchsorted(axis_vals, hi, side="right"))
        return i0, i1

    for obj in sample.objects:
        lo, hi = _aabb(obj)
        ix0, ix1 = slab_range(xs, lo[0], hi[0])
        iy0, iy1 = slab_range(ys, lo[1], hi[1])
        iz0, iz1 = slab_range(zs, lo[2], hi[2])
        if ix0 >= ix1 or iy0 >= iy1 or iz0 >= iz1:
            continue
        sub = np.meshgrid(xs[ix0:ix1], ys[iy0:iy1], zs[iz0:iz1], indexing="ij")
        pts = np.column_stack([g.ravel() for g in sub])
        shape = (ix1 - ix0, iy1 - iy0, iz1 - iz0)
        view = (slice(ix0, ix1), slice(iy0, iy1), slice(iz0, iz1))

        if isinstance(obj, RebarGrid):
            hit = _grid_hit(obj, pts).reshape(shape)
            labels[view][hit] = CLASS_REBAR
            mat_index[view][hit] = mat_id("rebar_steel")
        elif isinstance(obj, TendonDuct):
            comp = _duct_material_name(obj, pts).reshape(shape)
            labels[view][comp >= 0] = CLASS_DUCT
            mat_index[view][comp == 0] = mat_id(obj.casing_material)
            mat_index[view][comp == 1] = mat_id("grout")
            mat_index[view][comp == 2] = mat_id("strand_steel")
        elif isinstance(obj, AirVoid):
            hit = _contains(obj, pts).reshape(shape)
            labels[view][hit] = CLASS_VOID
            mat_index[view][hit] = mat_id("air")
        else:
            hit = _contains(obj, pts).reshape(shape)
            labels[view][hit] = CLASS_UNKNOWN
            mat_index[view][hit] = mat_id(obj.material)

    materials = tuple(registry.get(n) for n in names)
    return labels, mat_index, materials


def rasterize_labels(sample: ConcreteSample, registry: Registry | None = None) -> np.ndarray:
    """Class-label volume (uint8, indexed [x, y, z]) at voxel centres."""
    labels, _, _ = _paint(sample, registry or default_registry())
    return labels


def material_index_grid(sample: ConcreteSample, registry: Registry | None = None):
    """(index volume, materials tuple) for fast material lookup.

    ``materials[index[i,j,k]]`` is the material whose region covers the
    voxel centre; index 0 is always concrete.
    """
    _, mat_index, materials = _paint(sample, registry or default_registry())
    return mat_index, materials


# --------------------------------------------------------------------------
# randomizer
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RandomizerConfig:
    grid_count: tuple[int, int] = (1, 4)
    duct_count: tuple[int, int] = (1, 3)
    void_count: tuple[int, int] = (0, 3)
    unknown_count: tuple[int, int] = (0, 2)
    max_attempts: int = 1000

    def __post_init__(self) -> None:
        for name in ("grid_count", "duct_count", "void_count", "unknown_count"):
            lo, hi = getattr(self, name)
            if not (0 <= lo <= hi):
                raise GeometryError(f"{name} range ({lo}, {hi}) invalid")
        if self.max_attempts < 1:
            raise GeometryError("max_attempts must be >= 1")


@dataclass
class DrawLog:
    """Records every randomizer draw (including failed attempts)."""

    draws: dict[str, list] = field(default_factory=dict)

    def add(self, name: str, value) -> None:
        self.draws.setdefault(name, []).append(value)


def _pick(rng: np.random.Generator, menu):
    return menu[int(rng.integers(0, len(menu)))]


def _center_range(half: np.ndarray, obj_half: np.ndarray):
    lo = -half + obj_half
    hi = half - obj_half
    if (lo > hi).any():
        return None
    return lo, hi


def _random_rotation(rng: np.random.Generator) -> tuple[float, ...]:
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    m = np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )
    return tuple(float(v) for v in m.ravel())


def randomize_sample(
    seed: int,
    size: tuple[float, float, float] = DEFAULT_SLAB_MM,
    voxel_mm: float = DEFAULT_VOXEL_MM,
    config: RandomizerConfig | None = None,
    log: DrawLog | None = None,
) -> ConcreteSample:
    """Draw a random sample; a pure function of (seed, size, config)."""
    cfg = config or RandomizerConfig()
    half = np.asarray(size) / 2.0
    sample = ConcreteSample(seed=seed, size=tuple(float(s) for s in size), voxel_mm=voxel_mm)

    counts = {}
    for kind_idx, (name, rng_range) in enumerate(
        (("grid", cfg.grid_count), ("duct", cfg.duct_count), ("void", cfg.void_count), ("unknown", cfg.unknown_count))
    ):
        stream = seeding.keyed_stream(seed, seeding.DOMAIN_GEOMETRY_COUNT, kind_idx)
        counts[name] = int(stream.integers(rng_range[0], rng_range[1] + 1))
        if log:
            log.add(f"{name}_count", counts[name])

    placed: list[PlacedObject] = []
    warnings: list[str] = []
    surface_cache: dict[int, np.ndarray] = {}
    obj_index = 0

    def try_place(builder) -> PlacedObject | None:
        nonlocal obj_index
        for attempt in range(cfg.max_attempts):
            candidate = builder(obj_index, attempt)
            if candidate is None:
                continue
            if any(_overlaps(candidate, other, surface_cache) for other in placed):
                surface_cache.pop(id(candidate), None)
                continue
            obj_index += 1
            return candidate
        obj_index += 1
        return None

    def param_stream(i: int, attempt: int, param: int) -> np.random.Generator:
        return seeding.keyed_stream(seed, seeding.DOMAIN_GEOMETRY_OBJECT, i, attempt, param)

    # rebar grids
    for _ in range(counts["grid"]):
        def build_grid(i: int, attempt: int):
            dia = _pick(param_stream(i, attempt, 0), ROD_DIAMETERS)
            spacing = _pick(param_stream(i, attempt, 1), GRID_SPACINGS)
            n_x = int(param_stream(i, attempt, 2).integers(ROD_COUNT_RANGE[0], ROD_COUNT_RANGE[1] + 1))
            n_y = int(param_stream(i, attempt, 3).integers(ROD_COUNT_RANGE[0], ROD_COUNT_RANGE[1] + 1))
            if log:
                log.add("rod_diameter", dia)
                log.add("grid_spacing", spacing)
                log.add("rod_count", n_x)
                log.add("rod_count", n_y)
            probe = RebarGrid(dia, spacing, n_x, n_y, (0.0, 0.0, 0.0))
            rng_c = _center_range(half, np.asarray(probe.extent) / 2.0)
            if rng_c is None:
                return None
            u = param_stream(i, attempt, 4).uniform(0.0, 1.0, 3)
            c = rng_c[0] + u * (rng_c[1] - rng_c[0])
            return replace(probe, center=tuple(float(v) for v in c))

        obj = try_place(build_grid)
        if obj is None:
            warnings.append(f"rebar_grid dropped after {cfg.max_attempts} failed placement attempts")
        else:
            placed.append(obj)

    # tendon ducts
    for _ in range(counts["duct"]):
        def build_duct(i: int, attempt: int):
            axis = _pick(param_stream(i, attempt, 0), ("x", "y"))
            casing = _pick(param_stream(i, attempt, 1), CASING_MATERIALS)
            dia = _pick(param_stream(i, attempt, 2), CASING_DIAMETERS)
            if log:
                log.add("duct_axis", axis)
                log.add("casing_material", casing)
                log.add("casing_diameter", dia)
            r = dia / 2.0
            ia = 0 if axis == "x" else 1
            iu = 1 - ia
            if half[iu] < r or half[2] < r:
                return None
            u = param_stream(i, attempt, 3).uniform(0.0, 1.0, 2)
            cu = -half[iu] + r + u[0] * (2.0 * (half[iu] - r))
            cz = -half[2] + r + u[1] * (2.0 * (half[2] - r))
            center = (0.0, float(cu), float(cz)) if axis == "x" else (float(cu), 0.0, float(cz))
            return TendonDuct(axis, casing, dia, float(half[ia]), center)

        obj = try_place(build_duct)
        if obj is None:
            warnings.append(f"tendon_duct dropped after {cfg.max_attempts} failed placement attempts")
        else:
            placed.append(obj)

    # air voids
    for _ in range(counts["void"]):
        def build_void(i: int, attempt: int):
            dia = float(param_stream(i, attempt, 0).uniform(*VOID_DIAMETER_RANGE))
            if log:
                log.add("void_diameter", dia)
            rng_c = _center_range(half, np.full(3, dia / 2.0))
            if rng_c is None:
                return None
            u = param_stream(i, attempt, 1).uniform(0.0, 1.0, 3)
            c = rng_c[0] + u * (rng_c[1] - rng_c[0])
            return AirVoid(dia, tuple(float(v) for v in c))

        obj = try_place(build_void)
        if obj is None:
            warnings.append(f"air_void dropped after {cfg.max_attempts} failed placement attempts")
        else:
            placed.append(obj)

    # unknown objects
    for _ in range(counts["unknown"]):
        def build_unknown(i: int, attempt: int):
            shape = _pick(param_stream(i, attempt, 0), UNKNOWN_SHAPES)
            s_dims = param_stream(i, attempt, 1)
            lo, hi = UNKNOWN_EDGE_RANGE
            if shape == "box":
                dims = tuple(float(v) for v in s_dims.uniform(lo, hi, 3))
            elif shape == "cylinder":
                d, h_ = s_dims.uniform(lo, hi, 2)
                dims = (float(d), float(d), float(h_))
            else:
                d = float(s_dims.uniform(lo, hi))
                dims = (d, d, d)
            mat = _pick(param_stream(i, attempt, 2), UNKNOWN_MATERIALS)
            rot = _random_rotation(param_stream(i, attempt, 3))
            if log:
                log.add("unknown_shape", shape)
                log.add("unknown_material", mat)
            probe = UnknownObject(shape, dims, mat, (0.0, 0.0, 0.0), rot)
            lo_a, hi_a = _aabb(probe)
            rng_c = _center_range(half, (hi_a - lo_a) / 2.0)
            if rng_c is None:
                return None
            u = param_stream(i, attempt, 4).uniform(0.0, 1.0, 3)
            c = rng_c[0] + u * (rng_c[1] - rng_c[0])
            return replace(probe, center=tuple(float(v) for v in c))

        obj = try_place(build_unknown)
        if obj is None:
            warnings.append(f"unknown dropped after {cfg.max_attempts} failed placement attempts")
        else:
            placed.append(obj)

    return replace(sample, objects=tuple(placed), warnings=tuple(warnings))


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def write_geometry(sample: ConcreteSample) -> str:
    """Round-trippable structured text form of a sample."""
    lines = ["# muotomo geometry", "version = 1", f"seed = {sample.seed}"]
    lines.append("size_mm = " + " ".join(repr(v) for v in sample.size))
    lines.append(f"voxel_mm = {sample.voxel_mm!r}")
    for i, w in enumerate(sample.warnings):
        lines.append(f"warning_{i} = {w}")
    for i, obj in enumerate(sample.objects):
        lines.append("")
        lines.append(f"[object {i}]")
        lines.append(f"kind = {obj.kind}")
        if isinstance(obj, RebarGrid):
            lines.append(f"rod_diameter_mm = {obj.rod_diameter!r}")
            lines.append(f"spacing_mm = {obj.spacing!r}")
            lines.append(f"rods_along_x = {obj.rods_along_x}")
            lines.append(f"rods_along_y = {obj.rods_along_y}")
        elif isinstance(obj, TendonDuct):
            lines.append(f"axis = {obj.axis}")
            lines.append(f"casing = {obj.casing_material}")
            lines.append(f"outer_diameter_mm = {obj.outer_diameter!r}")
            lines.append(f"half_length_mm = {obj.half_length!r}")
        elif isinstance(obj, AirVoid):
            lines.append(f"diameter_mm = {obj.diameter!r}")
        else:
            lines.append(f"shape = {obj.shape}")
            lines.append("dims_mm = " + " ".join(repr(v) for v in obj.dims))
            lines.append(f"material = {obj.material}")
            lines.append("rotation = " + " ".join(repr(v) for v in obj.rotation))
        lines.append("center_mm = " + " ".join(repr(v) for v in obj.center))
    return "\n".join(lines) + "\n"


def parse_geometry(text: str) -> ConcreteSample:
    header: dict[str, str] = {}
    objects: list[dict[str, str]] = []
    current = header
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            objects.append({})
            current = objects[-1]
            continue
        key, _, value = line.partition("=")
        current[key.strip()] = value.strip()

    def floats(s: str) -> tuple[float, ...]:
        return tuple(float(v) for v in s.split())

    warnings = []
    i = 0
    while f"warning_{i}" in header:
        warnings.append(header[f"warning_{i}"])
        i += 1

    parsed: list[PlacedObject] = []
    for entry in objects:
        kind = entry["kind"]
        center = floats(entry["center_mm"])
        if kind == "rebar_grid":
            parsed.append(
                RebarGrid(
                    float(entry["rod_diameter_mm"]),
                    float(entry["spacing_mm"]),
                    int(entry["rods_along_x"]),
                    int(entry["rods_along_y"]),
                    center,
                )
            )
        elif kind == "tendon_duct":
            parsed.append(
                TendonDuct(
                    entry["axis"],
                    entry["casing"],
                    float(entry["outer_diameter_mm"]),
                    float(entry["half_length_mm"]),
                    center,
                )
            )
        elif kind == "air_void":
            parsed.append(AirVoid(float(entry["diameter_mm"]), center))
        elif kind == "unknown":
            parsed.append(
                UnknownObject(entry["shape"], floats(entry["dims_mm"]), entry["material"], center, floats(entry["rotation"]))
            )
        else:
            raise GeometryError(f"unknown object kind {kind!r} in geometry document")

    return ConcreteSample(
        seed=int(header["seed"]),
        size=floats(header["size_mm"]),
        voxel_mm=float(header["voxel_mm"]),
        objects=tuple(parsed),
        warnings=tuple(warnings),
    )
