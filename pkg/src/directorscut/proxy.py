"""Voxelized collision data inside proxy volumes, with ray, capsule and
sphere queries against it.

Space outside a proxy volume carries no collision knowledge and is treated
as free; placement separately refuses camera positions outside every proxy
so that rule never hides real geometry.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import geometry as geo
from .errors import FormatError
from .geometry import Vec3
from .scene import Aabb, Capsule, ProxyVolume, SceneDescription, sample_transform, world_segment

_MAGIC = b"DCGR"
_VERSION = 1


def grid_dims(volume: ProxyVolume) -> tuple[int, int, int]:
    dims = []
    for axis in range(3):
        extent = volume.max_corner[axis] - volume.min_corner[axis]
        dims.append(max(1, math.ceil(extent / volume.cell_size - 1e-9)))
    return dims[0], dims[1], dims[2]


@dataclass
class OccupancyGrid:
    origin: Vec3
    cell_size: float
    dims: tuple[int, int, int]
    occupancy: np.ndarray  # bool, shape == dims
    marker_id: str = ""
    _dilated: dict[int, np.ndarray] = field(default_factory=dict, repr=False, compare=False)
    # scratch space for derived read-only query results (feasibility probes)
    query_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.occupancy.shape != tuple(self.dims):
            raise ValueError("occupancy shape must match dims")

    def cell_index(self, point: Vec3) -> tuple[int, int, int] | None:
        """Containing cell, or None outside the grid. Points on a shared
        face belong to the higher-index cell (floor indexing)."""
        idx = []
        for axis in range(3):
            i = math.floor((point[axis] - self.origin[axis]) / self.cell_size)
            if i < 0 or i >= self.dims[axis]:
                return None
            idx.append(int(i))
        return idx[0], idx[1], idx[2]

    def cell_box(self, ix: int, iy: int, iz: int) -> tuple[Vec3, Vec3]:
        cs = self.cell_size
        lo = (
            self.origin[0] + ix * cs,
            self.origin[1] + iy * cs,
            self.origin[2] + iz * cs,
        )
        return lo, (lo[0] + cs, lo[1] + cs, lo[2] + cs)

    def dilated(self, cells: int) -> np.ndarray:
        """Occupancy expanded by `cells` in Chebyshev distance (cached)."""
        if cells <= 0:
            return self.occupancy
        cached = self._dilated.get(cells)
        if cached is None:
            cached = ndimage.binary_dilation(
                self.occupancy, structure=np.ones((3, 3, 3), dtype=bool), iterations=cells
            )
            self._dilated[cells] = cached
        return cached


def _point_box_distance(p: Vec3, lo: Vec3, hi: Vec3) -> float:
    dx = max(lo[0] - p[0], 0.0, p[0] - hi[0])
    dy = max(lo[1] - p[1], 0.0, p[1] - hi[1])
    dz = max(lo[2] - p[2], 0.0, p[2] - hi[2])
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def segment_box_distance(a: Vec3, b: Vec3, lo: Vec3, hi: Vec3) -> float:
    """Min distance from segment ab to an axis-aligned box.

    The distance along the segment is convex, so a ternary search converges
    to the true minimum.
    """
    t0, t1 = 0.0, 1.0
    for _ in range(72):
        m1 = t0 + (t1 - t0) / 3.0
        m2 = t1 - (t1 - t0) / 3.0
        f1 = _point_box_distance(geo.lerp(a, b, m1), lo, hi)
        f2 = _point_box_distance(geo.lerp(a, b, m2), lo, hi)
        if f1 <= f2:
            t1 = m2
        else:
            t0 = m1
        if f1 == 0.0 or f2 == 0.0:
            return 0.0
    return _point_box_distance(geo.lerp(a, b, (t0 + t1) / 2.0), lo, hi)


def _cell_range(grid: OccupancyGrid, lo: Vec3, hi: Vec3) -> tuple[range, range, range] | None:
    ranges = []
    for axis in range(3):
        start = math.floor((lo[axis] - grid.origin[axis]) / grid.cell_size)
        stop = math.floor((hi[axis] - grid.origin[axis]) / grid.cell_size)
        start = max(0, start)
        stop = min(grid.dims[axis] - 1, stop)
        if start > stop:
            return None
        ranges.append(range(start, stop + 1))
    return ranges[0], ranges[1], ranges[2]


def voxelize(
    scene: SceneDescription,
    volume: ProxyVolume,
    t: float,
    marker_id: str = "",
    exclude_ids: frozenset[str] | set[str] = frozenset(),
) -> OccupancyGrid:
    """Occupancy of the volume at time t: a cell is occupied iff its closed
    cell box intersects any object shape posed at t. `exclude_ids` lets the
    visibility pass drop the shot's own targets.
    """
    dims = grid_dims(volume)
    grid = OccupancyGrid(
        origin=volume.min_corner,
        cell_size=volume.cell_size,
        dims=dims,
        occupancy=np.zeros(dims, dtype=bool),
        marker_id=marker_id,
    )
    for obj in scene.objects:
        if obj.id in exclude_ids:
            continue
        tf = sample_transform(obj.track, t)
        if isinstance(obj.shape, Aabb):
            h = obj.shape.half_extents
            lo = geo.sub(tf.position, h)
            hi = geo.add(tf.position, h)
            cells = _cell_range(grid, lo, hi)
            if cells is None:
                continue
            xs, ys, zs = cells
            grid.occupancy[xs.start : xs.stop, ys.start : ys.stop, zs.start : zs.stop] = True
        else:
            seg_a, seg_b = world_segment(obj, t)
            r = obj.shape.radius
            lo = tuple(min(seg_a[a], seg_b[a]) - r for a in range(3))
            hi = tuple(max(seg_a[a], seg_b[a]) + r for a in range(3))
            cells = _cell_range(grid, lo, hi)
            if cells is None:
                continue
            xs, ys, zs = cells
            for ix in xs:
                for iy in ys:
                    for iz in zs:
                        clo, chi = grid.cell_box(ix, iy, iz)
                        if segment_box_distance(seg_a, seg_b, clo, chi) <= r:
                            grid.occupancy[ix, iy, iz] = True
    return grid


def is_occupied(grid: OccupancyGrid, point: Vec3) -> bool:
    idx = grid.cell_index(point)
    if idx is None:
        return False
    return bool(grid.occupancy[idx])


def _slab_clip(
    origin: Vec3, direction: Vec3, lo: Vec3, hi: Vec3
) -> tuple[float, float] | None:
    """Parameter interval of a ray o + t*d inside a box, or None."""
    t0, t1 = -math.inf, math.inf
    for axis in range(3):
        d = direction[axis]
        o = origin[axis]
        if d == 0.0:
            if o < lo[axis] or o > hi[axis]:
                return None
            continue
        ta = (lo[axis] - o) / d
        tb = (hi[axis] - o) / d
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
    if t0 > t1:
        return None
    return t0, t1


def raycast(
    grid: OccupancyGrid, start: Vec3, end: Vec3, occupancy: np.ndarray | None = None
) -> float | None:
    """Distance (meters) along the segment to the first occupied cell, or
    None when the path is clear. 3D DDA traversal; the reported distance is
    the exact slab entry of the hit cell.
    """
    if start == end:
        raise ValueError("raycast requires two distinct points")
    occ = grid.occupancy if occupancy is None else occupancy
    direction = geo.sub(end, start)
    seg_len = geo.norm(direction)

    grid_lo = grid.origin
    grid_hi = (
        grid.origin[0] + grid.dims[0] * grid.cell_size,
        grid.origin[1] + grid.dims[1] * grid.cell_size,
        grid.origin[2] + grid.dims[2] * grid.cell_size,
    )
    clip = _slab_clip(start, direction, grid_lo, grid_hi)
    if clip is None:
        return None
    t0 = max(0.0, clip[0])
    t1 = min(1.0, clip[1])
    if t0 > t1:
        return None

    def hit_distance(ix: int, iy: int, iz: int, t_entered: float) -> float:
        clo, chi = grid.cell_box(ix, iy, iz)
        cell_clip = _slab_clip(start, direction, clo, chi)
        entry = max(0.0, t_entered if cell_clip is None else cell_clip[0])
        return entry * seg_len

    # entry point nudged inside to pick a well-defined starting cell
    eps = 1e-12
    t_enter = min(t0 + eps, 1.0)
    p = geo.add(start, geo.scale(direction, t_enter))
    idx = [
        min(grid.dims[a] - 1, max(0, math.floor((p[a] - grid.origin[a]) / grid.cell_size)))
        for a in range(3)
    ]

    step = []
    t_max = []
    t_delta = []
    for axis in range(3):
        d = direction[axis]
        if d > 0.0:
            step.append(1)
            boundary = grid.origin[axis] + (idx[axis] + 1) * grid.cell_size
            t_max.append((boundary - start[axis]) / d)
            t_delta.append(grid.cell_size / d)
        elif d < 0.0:
            step.append(-1)
            boundary = grid.origin[axis] + idx[axis] * grid.cell_size
            t_max.append((boundary - start[axis]) / d)
            t_delta.append(grid.cell_size / -d)
        else:
            step.append(0)
            t_max.append(math.inf)
            t_delta.append(math.inf)

    t = t0
    while t <= t1:
        if occ[idx[0], idx[1], idx[2]]:
            return hit_distance(idx[0], idx[1], idx[2], t)
        axis = t_max.index(min(t_max))
        t = t_max[axis]
        t_max[axis] += t_delta[axis]
        idx[axis] += step[axis]
        if idx[axis] < 0 or idx[axis] >= grid.dims[axis]:
            return None
    return None


def capsule_cast(grid: OccupancyGrid, start: Vec3, end: Vec3, radius: float) -> bool:
    """True when a capsule of the given radius can travel start->end without
    touching occupied space. Conservative: the grid is dilated by whole
    cells, so narrow clearances read as blocked, never the reverse.
    """
    if radius < 0:
        raise ValueError("radius must be non-negative")
    cells = math.ceil(radius / grid.cell_size - 1e-12) if radius > 0 else 0
    occupancy = grid.dilated(cells)
    return raycast(grid, start, end, occupancy=occupancy) is None


def sphere_blocked(grid: OccupancyGrid, center: Vec3, radius: float) -> bool:
    """Exact test: does a sphere overlap any occupied cell box?"""
    lo = (center[0] - radius, center[1] - radius, center[2] - radius)
    hi = (center[0] + radius, center[1] + radius, center[2] + radius)
    cells = _cell_range(grid, lo, hi)
    if cells is None:
        return False
    xs, ys, zs = cells
    for ix in xs:
        for iy in ys:
            for iz in zs:
                if grid.occupancy[ix, iy, iz]:
                    clo, chi = grid.cell_box(ix, iy, iz)
                    if _point_box_distance(center, clo, chi) <= radius:
                        return True
    return False


def serialize_grid(grid: OccupancyGrid) -> bytes:
    marker = grid.marker_id.encode("utf-8")
    flat = np.ascontiguousarray(grid.occupancy.reshape(-1))
    packed = np.packbits(flat, bitorder="little").tobytes()
    header = struct.pack(
        "<4sHH3dd3II",
        _MAGIC,
        _VERSION,
        len(marker),
        *grid.origin,
        grid.cell_size,
        *grid.dims,
        len(packed),
    )
    return header + marker + packed


def deserialize_grid(data: bytes) -> OccupancyGrid:
    header_size = struct.calcsize("<4sHH3dd3II")
    if len(data) < header_size:
        raise FormatError("grid payload shorter than header")
    magic, version, marker_len, ox, oy, oz, cell_size, dx, dy, dz, nbytes = struct.unpack(
        "<4sHH3dd3II", data[:header_size]
    )
    if magic != _MAGIC:
        raise FormatError("bad magic")
    if version != _VERSION:
        raise FormatError(f"unsupported grid version {version}")
    offset = header_size
    marker = data[offset : offset + marker_len]
    if len(marker) != marker_len:
        raise FormatError("truncated marker id")
    offset += marker_len
    cell_count = dx * dy * dz
    expected = (cell_count + 7) // 8
    if nbytes != expected:
        raise FormatError(f"bitset length {nbytes} does not match dims {dx}x{dy}x{dz}")
    packed = data[offset : offset + nbytes]
    if len(packed) != nbytes:
        raise FormatError("truncated bitset")
    bits = np.unpackbits(np.frombuffer(packed, dtype=np.uint8), bitorder="little")
    occupancy = bits[:cell_count].astype(bool).reshape((dx, dy, dz))
    return OccupancyGrid(
        origin=(ox, oy, oz),
        cell_size=cell_size,
        dims=(dx, dy, dz),
        occupancy=occupancy,
        marker_id=marker.decode("utf-8"),
    )


def proxy_union(proxies: tuple[ProxyVolume, ...] | list[ProxyVolume]) -> ProxyVolume:
    """One volume spanning all proxies (finest cell size wins), so each
    marker gets a single grid regardless of how many proxies the user drew.
    """
    if not proxies:
        raise ValueError("at least one proxy volume is required")
    if len(proxies) == 1:
        return proxies[0]
    lo = tuple(min(p.min_corner[a] for p in proxies) for a in range(3))
    hi = tuple(max(p.max_corner[a] for p in proxies) for a in range(3))
    return ProxyVolume(min_corner=lo, max_corner=hi, cell_size=min(p.cell_size for p in proxies))


def inside_any_proxy(proxies, point: Vec3) -> bool:
    return any(p.contains(point) for p in proxies)
