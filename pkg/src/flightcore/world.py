"""Occupancy point-cloud worlds: binary PLY I/O, collision queries, path planning.

Clouds are sets of occupied 3D points at a fixed grid resolution inside an
axis-aligned bounding box. Export/import uses the vertex-only binary
little-endian PLY flavor with float32 x/y/z properties, bit-exact on round
trip. Collision queries run against a uniform hash grid with cell size
equal to the resolution; the planner is an RRT with straight-line
shortcutting, seeded and verified collision-free at the grid's Nyquist
spacing (resolution / 2).

Clouds are immutable after construction; queries and planning are
read-only and safe for concurrent callers.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import _threads  # noqa: F401  (must precede the numba import)

from numba import njit

DEFAULT_RESOLUTION = 0.1

_MAX_GRID_CELLS = 2 ** 62


class PlyParseError(ValueError):
    """Base class for malformed PLY input."""


class PlyHeaderError(PlyParseError):
    """Header is structurally invalid."""


class PlyUnsupportedError(PlyParseError):
    """Well-formed but unsupported PLY flavor (ascii, big-endian, extra elements)."""


class PlyPayloadError(PlyParseError):
    """Payload length or content does not match the header."""


@dataclass(frozen=True, eq=False)
class OccupancyCloud:
    """Occupied points (float32), grid resolution, and bounding box."""

    points: np.ndarray
    resolution: float
    bounds: tuple[np.ndarray, np.ndarray]

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float32).reshape(-1, 3)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "resolution", float(self.resolution))
        lo = np.asarray(self.bounds[0], dtype=np.float64).reshape(3)
        hi = np.asarray(self.bounds[1], dtype=np.float64).reshape(3)
        object.__setattr__(self, "bounds", (lo, hi))
        if not (self.resolution > 0):
            raise ValueError(f"resolution must be > 0, got {self.resolution}")
        if np.any(hi < lo):
            raise ValueError(f"degenerate bounds: {lo} .. {hi}")
        if len(pts):
            if not np.isfinite(pts).all():
                raise ValueError("non-finite points")
            p64 = pts.astype(np.float64)
            if (p64 < lo - 1e-9).any() or (p64 > hi + 1e-9).any():
                raise ValueError("points outside bounds")
        object.__setattr__(self, "_grid", None)

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def empty(cls, resolution: float = DEFAULT_RESOLUTION) -> "OccupancyCloud":
        return cls(np.empty((0, 3), dtype=np.float32), resolution,
                   (np.zeros(3), np.zeros(3)))

    @classmethod
    def from_points(cls, points, resolution: float, bounds=None) -> "OccupancyCloud":
        """Build a cloud with grid deduplication (first occupant of a cell wins)."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if len(pts):
            keys = _cell_keys(pts, resolution)
            _, first = np.unique(keys, return_index=True)
            pts = pts[np.sort(first)]
        pts32 = pts.astype(np.float32)
        if bounds is None:
            if len(pts32):
                bounds = (pts32.min(axis=0).astype(np.float64),
                          pts32.max(axis=0).astype(np.float64))
            else:
                bounds = (np.zeros(3), np.zeros(3))
        return cls(pts32, resolution, bounds)

    def crop(self, lo, hi) -> "OccupancyCloud":
        """Points inside the inclusive box [lo, hi], preserving order."""
        lo = np.asarray(lo, dtype=np.float64).reshape(3)
        hi = np.asarray(hi, dtype=np.float64).reshape(3)
        if np.any(hi < lo):
            raise ValueError(f"degenerate crop box: {lo} .. {hi}")
        p64 = self.points.astype(np.float64)
        mask = np.all((p64 >= lo) & (p64 <= hi), axis=1)
        return OccupancyCloud(self.points[mask], self.resolution, (lo, hi))

    def _ensure_grid(self):
        grid = object.__getattribute__(self, "_grid")
        if grid is None and len(self.points):
            grid = _build_grid(self.points, self.resolution)
            object.__setattr__(self, "_grid", grid)
        return grid


def _cell_keys(p64: np.ndarray, resolution: float) -> np.ndarray:
    idx = np.floor(p64 / resolution).astype(np.int64)
    imin = idx.min(axis=0)
    dims = idx.max(axis=0) - imin + 1
    if float(dims[0]) * float(dims[1]) * float(dims[2]) > _MAX_GRID_CELLS:
        raise ValueError("resolution too fine for these bounds to index")
    rel = idx - imin
    return (rel[:, 0] * dims[1] + rel[:, 1]) * dims[2] + rel[:, 2]


@dataclass
class _Grid:
    unique_keys: np.ndarray
    starts: np.ndarray
    points_sorted: np.ndarray
    imin: np.ndarray
    dims: np.ndarray
    resolution: float
    bitmap: np.ndarray  # uint64 words; zero-length when cell count is too big


# Cell counts up to this get a dense occupancy bitmap (64 MiB of bits); the
# paper-scale 100 x 100 x 30 m at 0.1 m is 3e8 cells and stays within it.
_MAX_BITMAP_CELLS = 2 ** 32


def _build_grid(points32: np.ndarray, resolution: float) -> _Grid:
    p64 = points32.astype(np.float64)
    idx = np.floor(p64 / resolution).astype(np.int64)
    imin = idx.min(axis=0)
    dims = idx.max(axis=0) - imin + 1
    ncells = float(dims[0]) * float(dims[1]) * float(dims[2])
    if ncells > _MAX_GRID_CELLS:
        raise ValueError("resolution too fine for these bounds to index")
    rel = idx - imin
    keys = (rel[:, 0] * dims[1] + rel[:, 1]) * dims[2] + rel[:, 2]
    order = np.argsort(keys, kind="stable")
    skeys = keys[order]
    unique_keys, first = np.unique(skeys, return_index=True)
    starts = np.append(first, len(skeys)).astype(np.int64)
    if ncells <= _MAX_BITMAP_CELLS:
        bitmap = np.zeros((int(ncells) + 63) // 64, dtype=np.uint64)
        np.bitwise_or.at(bitmap, unique_keys >> 6,
                         np.uint64(1) << (unique_keys & 63).astype(np.uint64))
    else:
        bitmap = np.zeros(0, dtype=np.uint64)
    return _Grid(unique_keys, starts, np.ascontiguousarray(p64[order]),
                 imin, dims, resolution, bitmap)


@njit(cache=True)
def _grid_hit(qx, qy, qz, radius, unique_keys, starts, psorted, bitmap,
              imin0, imin1, imin2, d0, d1, d2, res):
    r2 = radius * radius
    nkeys = unique_keys.shape[0]
    use_bitmap = bitmap.shape[0] > 0
    lo0 = max(int(np.floor((qx - radius) / res)), imin0)
    hi0 = min(int(np.floor((qx + radius) / res)), imin0 + d0 - 1)
    lo1 = max(int(np.floor((qy - radius) / res)), imin1)
    hi1 = min(int(np.floor((qy + radius) / res)), imin1 + d1 - 1)
    lo2 = max(int(np.floor((qz - radius) / res)), imin2)
    hi2 = min(int(np.floor((qz + radius) / res)), imin2 + d2 - 1)
    for ix in range(lo0, hi0 + 1):
        for iy in range(lo1, hi1 + 1):
            base = ((ix - imin0) * d1 + (iy - imin1)) * d2 - imin2
            for iz in range(lo2, hi2 + 1):
                key = base + iz
                if use_bitmap:
                    if (bitmap[key >> 6] >> np.uint64(key & 63)) & np.uint64(1) == 0:
                        continue
                # binary search for the cell's point range
                lo = 0
                hi = nkeys
                while lo < hi:
                    mid = (lo + hi) >> 1
                    if unique_keys[mid] < key:
                        lo = mid + 1
                    else:
                        hi = mid
                if lo < nkeys and unique_keys[lo] == key:
                    for j in range(starts[lo], starts[lo + 1]):
                        dx = psorted[j, 0] - qx
                        dy = psorted[j, 1] - qy
                        dz = psorted[j, 2] - qz
                        if (dx * dx + dy * dy) + dz * dz <= r2:
                            return True
    return False


@njit(cache=True)
def _grid_hit_mask(Q, radius, unique_keys, starts, psorted, bitmap,
                   imin0, imin1, imin2, d0, d1, d2, res, out):
    for i in range(Q.shape[0]):
        out[i] = _grid_hit(Q[i, 0], Q[i, 1], Q[i, 2], radius, unique_keys, starts,
                           psorted, bitmap, imin0, imin1, imin2, d0, d1, d2, res)


@njit(cache=True)
def _grid_hit_any(Q, radius, unique_keys, starts, psorted, bitmap,
                  imin0, imin1, imin2, d0, d1, d2, res):
    for i in range(Q.shape[0]):
        if _grid_hit(Q[i, 0], Q[i, 1], Q[i, 2], radius, unique_keys, starts,
                     psorted, bitmap, imin0, imin1, imin2, d0, d1, d2, res):
            return True
    return False


@njit(cache=True)
def _grid_hit_first(Q, radius, unique_keys, starts, psorted, bitmap,
                    imin0, imin1, imin2, d0, d1, d2, res):
    for i in range(Q.shape[0]):
        if _grid_hit(Q[i, 0], Q[i, 1], Q[i, 2], radius, unique_keys, starts,
                     psorted, bitmap, imin0, imin1, imin2, d0, d1, d2, res):
            return i
    return -1


def _grid_args(grid: _Grid):
    return (grid.unique_keys, grid.starts, grid.points_sorted, grid.bitmap,
            grid.imin[0], grid.imin[1], grid.imin[2],
            grid.dims[0], grid.dims[1], grid.dims[2], grid.resolution)


def collides(cloud: OccupancyCloud, point, radius: float) -> bool:
    """True iff any occupied point lies within `radius` of `point`."""
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    grid = cloud._ensure_grid()
    if grid is None:
        return False
    p = np.asarray(point, dtype=np.float64).reshape(3)
    return bool(_grid_hit(p[0], p[1], p[2], float(radius), *_grid_args(grid)))


def collides_mask(cloud: OccupancyCloud, points, radius: float) -> np.ndarray:
    """Per-point collision flags for a batch of query points."""
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    pts = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    out = np.zeros(len(pts), dtype=np.bool_)
    grid = cloud._ensure_grid()
    if grid is None:
        return out
    _grid_hit_mask(pts, float(radius), *_grid_args(grid), out)
    return out


def _collides_any(cloud: OccupancyCloud, pts: np.ndarray, radius: float) -> bool:
    grid = cloud._ensure_grid()
    if grid is None:
        return False
    return bool(_grid_hit_any(pts, float(radius), *_grid_args(grid)))


def generate_forest(bounds, resolution: float, density: float, seed: int) -> OccupancyCloud:
    """Seeded synthetic forest: vertical trunk shells plus scattered branch cells.

    `density` is the target fraction of ground-plane area covered by trunk
    footprints, in [0, 1]. Occupied cells snap to grid centers and are
    deduplicated, so the result satisfies the occupancy invariants and is
    bit-identical for a fixed seed.
    """
    lo = np.asarray(bounds[0], dtype=np.float64).reshape(3)
    hi = np.asarray(bounds[1], dtype=np.float64).reshape(3)
    if np.any(hi <= lo):
        raise ValueError(f"degenerate bounds: {lo} .. {hi}")
    if not (resolution > 0):
        raise ValueError(f"resolution must be > 0, got {resolution}")
    if not (0.0 <= density <= 1.0):
        raise ValueError(f"density must be in [0, 1], got {density}")

    if density == 0.0:
        return OccupancyCloud(np.empty((0, 3), dtype=np.float32), resolution, (lo, hi))

    rng = np.random.default_rng(seed)
    extent = hi - lo
    ground_area = extent[0] * extent[1]
    target = density * ground_area

    chunks: list[np.ndarray] = []
    covered = 0.0
    r_max = min(0.7, 0.45 * min(extent[0], extent[1]))
    r_min = min(0.3, r_max)
    z_levels = np.arange(lo[2] + 0.5 * resolution, hi[2], resolution)
    while covered < target:
        radius = rng.uniform(r_min, r_max)
        cx = rng.uniform(lo[0] + radius, hi[0] - radius)
        cy = rng.uniform(lo[1] + radius, hi[1] - radius)
        covered += math.pi * radius * radius

        n_angles = max(8, int(math.ceil(2.0 * math.pi * radius / resolution)))
        angles = np.linspace(0.0, 2.0 * math.pi, n_angles, endpoint=False)
        ring_x = cx + radius * np.cos(angles)
        ring_y = cy + radius * np.sin(angles)
        shell = np.empty((n_angles * len(z_levels), 3))
        shell[:, 0] = np.repeat(ring_x, len(z_levels))
        shell[:, 1] = np.repeat(ring_y, len(z_levels))
        shell[:, 2] = np.tile(z_levels, n_angles)
        chunks.append(shell)

        # Scattered "branches": short radial stubs at random heights.
        n_branch = 8
        bz = rng.uniform(lo[2] + 0.5 * extent[2], hi[2], n_branch)
        bphi = rng.uniform(0.0, 2.0 * math.pi, n_branch)
        blen = rng.uniform(radius, radius + 4.0 * resolution, n_branch)
        bx = np.clip(cx + blen * np.cos(bphi), lo[0], hi[0])
        by = np.clip(cy + blen * np.sin(bphi), lo[1], hi[1])
        chunks.append(np.stack([bx, by, bz], axis=1))

    raw = np.concatenate(chunks, axis=0)
    centers = (np.floor(raw / resolution) + 0.5) * resolution
    centers = np.clip(centers, lo + 0.5 * resolution, hi - 0.5 * resolution)
    return OccupancyCloud.from_points(centers, resolution, (lo, hi))


def _ply_header(count: int) -> bytes:
    return (b"ply\n"
            b"format binary_little_endian 1.0\n"
            b"element vertex " + str(count).encode("ascii") + b"\n"
            b"property float x\n"
            b"property float y\n"
            b"property float z\n"
            b"end_header\n")


def export_ply_bytes(cloud: OccupancyCloud) -> bytes:
    pts = np.ascontiguousarray(cloud.points, dtype="<f4")
    return _ply_header(len(cloud)) + pts.tobytes()


def export_ply(cloud: OccupancyCloud, destination) -> int:
    """Write the cloud as binary little-endian PLY; returns the byte count.

    The payload is exactly 12 bytes per point after the fixed header.
    """
    data = export_ply_bytes(cloud)
    if hasattr(destination, "write"):
        destination.write(data)
        return len(data)
    path = Path(destination)
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise OSError(f"writing PLY to {path}: {exc}") from exc
    return len(data)


_ALLOWED_FLOAT = {"float", "float32"}


def import_ply_bytes(data: bytes, resolution: Optional[float] = None) -> OccupancyCloud:
    """Parse binary little-endian PLY bytes into a cloud (points kept as stored).

    Bounds are the tight AABB of the points; resolution comes from a
    `comment resolution <r>` header line if present, else the `resolution`
    argument, else 0.1. All malformed inputs raise a PlyParseError subclass.
    """
    marker = b"end_header\n"
    end = data.find(marker)
    if end < 0:
        raise PlyHeaderError("missing end_header")
    header_bytes = data[:end + len(marker)]
    payload = data[end + len(marker):]
    try:
        header = header_bytes.decode("ascii")
    except UnicodeDecodeError as exc:
        raise PlyHeaderError(f"non-ascii header: {exc}") from exc

    lines = header.split("\n")[:-1]
    if not lines or lines[0] != "ply":
        raise PlyHeaderError("file does not start with 'ply'")

    fmt = None
    vertex_count = None
    properties: list[str] = []
    file_resolution = None
    for line in lines[1:-1]:
        # strict single-space tokenization: this is a binary format and any
        # whitespace damage must surface as a parse error
        fields = line.split(" ")
        if not fields or "" in fields:
            raise PlyHeaderError(f"malformed header line: {line!r}")
        keyword = fields[0]
        if keyword == "format":
            if fmt is not None:
                raise PlyHeaderError("duplicate format line")
            if fields[1:] == ["binary_little_endian", "1.0"]:
                fmt = "ble"
            elif fields[1:2] == ["ascii"] or fields[1:2] == ["binary_big_endian"]:
                raise PlyUnsupportedError(f"unsupported PLY format: {fields[1]}")
            else:
                raise PlyHeaderError(f"malformed format line: {line!r}")
        elif keyword == "comment" or keyword == "obj_info":
            if len(fields) == 3 and fields[1] == "resolution":
                try:
                    file_resolution = float(fields[2])
                except ValueError:
                    raise PlyHeaderError(f"bad resolution comment: {line!r}") from None
        elif keyword == "element":
            if len(fields) != 3:
                raise PlyHeaderError(f"malformed element line: {line!r}")
            if fields[1] != "vertex":
                raise PlyUnsupportedError(f"unsupported element: {fields[1]}")
            if vertex_count is not None:
                raise PlyHeaderError("duplicate vertex element")
            try:
                vertex_count = int(fields[2])
            except ValueError:
                raise PlyHeaderError(f"bad vertex count: {fields[2]!r}") from None
            if vertex_count < 0:
                raise PlyHeaderError(f"negative vertex count: {vertex_count}")
        elif keyword == "property":
            if vertex_count is None:
                raise PlyHeaderError("property before element")
            if len(fields) != 3 or fields[1] not in _ALLOWED_FLOAT:
                raise PlyUnsupportedError(f"unsupported property: {line!r}")
            properties.append(fields[2])
        elif keyword == "end_header":
            raise PlyHeaderError("content after end_header marker")
        else:
            raise PlyHeaderError(f"unknown header keyword: {keyword!r}")

    if fmt is None:
        raise PlyHeaderError("missing format line")
    if vertex_count is None:
        raise PlyHeaderError("missing vertex element")
    if properties != ["x", "y", "z"]:
        raise PlyUnsupportedError(f"need float x/y/z properties, got {properties}")

    expected = 12 * vertex_count
    if len(payload) != expected:
        raise PlyPayloadError(
            f"payload size mismatch: expected {expected} bytes, got {len(payload)}")
    pts = np.frombuffer(payload, dtype="<f4").reshape(vertex_count, 3).copy()
    if vertex_count and not np.isfinite(pts).all():
        raise PlyPayloadError("non-finite vertex data")

    if vertex_count:
        bounds = (pts.min(axis=0).astype(np.float64), pts.max(axis=0).astype(np.float64))
    else:
        bounds = (np.zeros(3), np.zeros(3))
    res = file_resolution if file_resolution is not None else (
        resolution if resolution is not None else DEFAULT_RESOLUTION)
    return OccupancyCloud(pts, res, bounds)


def import_ply(source, resolution: Optional[float] = None) -> OccupancyCloud:
    """Read a binary little-endian PLY file (path or binary file object)."""
    if hasattr(source, "read"):
        data = source.read()
    else:
        path = Path(source)
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise OSError(f"reading PLY from {path}: {exc}") from exc
    return import_ply_bytes(data, resolution=resolution)


@dataclass
class PathQuery:
    start: np.ndarray
    goal: np.ndarray
    robot_radius: float = 0.3
    time_budget: float = 1.0

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=np.float64).reshape(3).copy()
        self.goal = np.asarray(self.goal, dtype=np.float64).reshape(3).copy()
        self.robot_radius = float(self.robot_radius)
        self.time_budget = float(self.time_budget)
        if self.robot_radius < 0:
            raise ValueError(f"robot_radius must be >= 0, got {self.robot_radius}")
        if not (self.time_budget > 0):
            raise ValueError(f"time_budget must be > 0, got {self.time_budget}")


def _segment_points(a: np.ndarray, b: np.ndarray, spacing: float) -> np.ndarray:
    dist = float(np.linalg.norm(b - a))
    count = max(2, int(math.ceil(dist / spacing)) + 1)
    ts = np.linspace(0.0, 1.0, count)
    return a + ts[:, None] * (b - a)


def _segment_free(cloud: OccupancyCloud, a, b, radius: float) -> bool:
    pts = _segment_points(a, b, 0.5 * cloud.resolution)
    return not _collides_any(cloud, pts, radius)


def path_length(path: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(np.diff(path, axis=0), axis=1)))


def _shortcut(cloud: OccupancyCloud, path: list[np.ndarray], radius: float,
              rng: np.random.Generator, deadline: float, attempts: int = 120) -> list[np.ndarray]:
    for _ in range(attempts):
        if len(path) < 3 or time.monotonic() > deadline:
            break
        i = int(rng.integers(0, len(path) - 2))
        j = int(rng.integers(i + 2, len(path)))
        if _segment_free(cloud, path[i], path[j], radius):
            path = path[:i + 1] + path[j:]
    return path


class _Tree:
    __slots__ = ("nodes", "parents", "size")

    def __init__(self, root: np.ndarray):
        self.nodes = np.empty((1024, 3))
        self.parents = np.empty(1024, dtype=np.int64)
        self.nodes[0] = root
        self.parents[0] = -1
        self.size = 1

    def add(self, point: np.ndarray, parent: int) -> int:
        if self.size == len(self.parents):
            self.nodes = np.resize(self.nodes, (2 * self.size, 3))
            self.parents = np.resize(self.parents, 2 * self.size)
        self.nodes[self.size] = point
        self.parents[self.size] = parent
        self.size += 1
        return self.size - 1

    def nearest(self, target: np.ndarray) -> int:
        diffs = self.nodes[:self.size] - target
        return int(np.argmin(np.einsum("ij,ij->i", diffs, diffs)))

    def chain(self, index: int) -> list[np.ndarray]:
        out = []
        while index >= 0:
            out.append(self.nodes[index].copy())
            index = self.parents[index]
        out.reverse()
        return out


def _first_hit_index(cloud, pts: np.ndarray, radius: float) -> int:
    grid = cloud._ensure_grid()
    if grid is None:
        return -1
    return int(_grid_hit_first(pts, float(radius), *_grid_args(grid)))


def _extend_greedy(cloud, tree: _Tree, target: np.ndarray, radius: float,
                   step_size: float) -> Optional[int]:
    """Walk from the nearest node toward target in step hops until blocked.

    A blocked hop still advances to the farthest collision-free prefix
    sample, so trees escape tight pockets where no full step fits. Returns
    the index of the last node added (None if no progress at all).
    """
    parent = tree.nearest(target)
    base = tree.nodes[parent]
    added = None
    spacing = 0.5 * cloud.resolution
    while True:
        delta = target - base
        dist = float(np.linalg.norm(delta))
        if dist < 1e-12:
            return added
        new = base + (min(step_size, dist) / dist) * delta
        pts = _segment_points(base, new, spacing)
        hit = _first_hit_index(cloud, pts, radius)
        if hit >= 0:
            # prefix samples are spaced at <= resolution/2, so the truncated
            # segment is verified at the same granularity as a full check
            if hit <= 1:
                return added
            prefix = pts[hit - 1]
            if float(np.linalg.norm(prefix - base)) < spacing:
                return added
            return tree.add(prefix, parent)
        parent = tree.add(new, parent)
        added = parent
        if dist <= step_size:
            return added
        base = tree.nodes[parent]


def plan_path(cloud: OccupancyCloud, query: PathQuery, seed: int,
              step_size: Optional[float] = None,
              max_iterations: int = 200_000) -> Optional[np.ndarray]:
    """Collision-free polyline from start to goal, or None if the budget expires.

    Bidirectional RRT (connect variant) with straight-line shortcutting.
    Every vertex and every segment (sampled at resolution/2) of a returned
    path is collision-free at the query's robot radius; the first vertex is
    exactly the start, the last exactly the goal. The sampling sequence is
    deterministic for a fixed seed; the wall-clock budget only decides when
    to give up.

    Raises ValueError for invalid queries (start/goal in collision or, for
    non-empty clouds, outside the cloud bounds), distinct from the None
    returned on planning failure. Containment allows a margin of
    max(1 m, 10 resolutions) because imported clouds carry the tight point
    AABB rather than the original world box.
    """
    a, b = query.start, query.goal
    radius = query.robot_radius
    if len(cloud):
        lo, hi = cloud.bounds
        margin = max(1.0, 10.0 * cloud.resolution)
        for name, p in (("start", a), ("goal", b)):
            if (p < lo - margin).any() or (p > hi + margin).any():
                raise ValueError(f"{name} outside cloud bounds")
    if collides(cloud, a, radius):
        raise ValueError("start in collision")
    if collides(cloud, b, radius):
        raise ValueError("goal in collision")

    deadline = time.monotonic() + query.time_budget
    if _segment_free(cloud, a, b, radius):
        return np.stack([a, b])

    if step_size is None:
        step_size = max(10.0 * cloud.resolution, 1e-6)
    lo, hi = cloud.bounds
    slo = np.minimum(np.minimum(lo, a), b) - radius
    shi = np.maximum(np.maximum(hi, a), b) + radius

    rng = np.random.default_rng(seed)
    start_tree = _Tree(a)
    goal_tree = _Tree(b)
    grow, other = start_tree, goal_tree

    for _ in range(max_iterations):
        if time.monotonic() > deadline:
            return None
        if rng.random() < 0.3:
            # local sampling around a random node helps trees thread narrow
            # pockets where uniform samples almost never aim at the exit
            anchor = grow.nodes[int(rng.integers(0, grow.size))]
            target = np.clip(anchor + rng.normal(0.0, 1.5 * step_size, 3), slo, shi)
        else:
            target = rng.uniform(slo, shi)
        new_idx = _extend_greedy(cloud, grow, target, radius, step_size)
        if new_idx is not None:
            tip = grow.nodes[new_idx]
            link_idx = _extend_greedy(cloud, other, tip, radius, step_size)
            if link_idx is not None:
                link = other.nodes[link_idx]
                if (np.linalg.norm(link - tip) <= step_size
                        and _segment_free(cloud, link, tip, radius)):
                    fwd, bwd = (grow, other) if grow is start_tree else (other, grow)
                    fwd_idx = new_idx if grow is start_tree else link_idx
                    bwd_idx = link_idx if grow is start_tree else new_idx
                    chain = fwd.chain(fwd_idx) + bwd.chain(bwd_idx)[::-1]
                    chain = _shortcut(cloud, chain, radius, rng, deadline)
                    return np.stack(chain)
        grow, other = other, grow
    return None
