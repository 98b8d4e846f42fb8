"""Voxel lattice geometry and ray traversal.

Cells are half-open boxes ``[lo + k*s, lo + (k+1)*s)`` along every axis, so a
point on a shared face belongs to the cell with the larger index. Global voxel
ids are flat row-major indices with the x coordinate varying fastest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

TIE_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Dense axis-aligned voxel lattice in 2D or 3D."""

    origin: tuple[float, ...]
    voxel_size: float
    extent: tuple[int, ...]

    def __post_init__(self):
        origin = tuple(float(v) for v in self.origin)
        extent = tuple(int(v) for v in self.extent)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "voxel_size", float(self.voxel_size))
        if len(extent) not in (2, 3):
            raise ValueError(f"grid must be 2D or 3D, got {len(extent)} axes")
        if len(origin) != len(extent):
            raise ValueError("origin and extent must have the same dimensionality")
        if not self.voxel_size > 0:
            raise ValueError(f"voxel_size must be positive, got {self.voxel_size}")
        if any(e < 1 for e in extent):
            raise ValueError(f"extent must be >= 1 on every axis, got {extent}")

    @property
    def dim(self) -> int:
        return len(self.extent)

    @property
    def n(self) -> int:
        return math.prod(self.extent)

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(o + e * self.voxel_size for o, e in zip(self.origin, self.extent))

    def contains_coords(self, coords: Sequence[int]) -> bool:
        return all(0 <= c < e for c, e in zip(coords, self.extent))

    def index(self, coords: Sequence[int]) -> int:
        """Flat id of integer lattice coordinates."""
        if len(coords) != self.dim or not self.contains_coords(coords):
            raise IndexError(f"lattice coordinates {tuple(coords)} outside grid {self.extent}")
        idx = 0
        for c, e in zip(reversed(coords), reversed(self.extent)):
            idx = idx * e + int(c)
        return idx

    def coords(self, voxel_id: int) -> tuple[int, ...]:
        """Integer lattice coordinates of a flat id."""
        voxel_id = int(voxel_id)
        if not 0 <= voxel_id < self.n:
            raise IndexError(f"voxel id {voxel_id} outside [0, {self.n})")
        out = []
        for e in self.extent:
            voxel_id, c = divmod(voxel_id, e)
            out.append(c)
        return tuple(out)

    def centers(self) -> np.ndarray:
        """World coordinates of every voxel center, shape ``(n, dim)``, ordered by id."""
        axes = [self.origin[a] + (np.arange(self.extent[a]) + 0.5) * self.voxel_size
                for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        # ravel in Fortran order so that x varies fastest
        return np.stack([m.ravel(order="F") for m in mesh], axis=1)


def voxel_center(grid: GridSpec, voxel_id: int) -> np.ndarray:
    """World position of the center of ``voxel_id``."""
    c = grid.coords(voxel_id)
    return np.array([o + (k + 0.5) * grid.voxel_size for o, k in zip(grid.origin, c)])


def world_to_voxel(grid: GridSpec, point: Sequence[float]) -> Optional[int]:
    """Voxel id containing ``point``, or ``None`` when the point is outside the grid."""
    if len(point) != grid.dim:
        raise ValueError(f"expected a {grid.dim}D point, got {len(point)} coordinates")
    coords = [math.floor((p - o) / grid.voxel_size) for p, o in zip(point, grid.origin)]
    if not grid.contains_coords(coords):
        return None
    return grid.index(coords)


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray
    max_range: float

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=float)
        d = np.asarray(self.direction, dtype=float)
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)
        if o.shape != d.shape or o.ndim != 1:
            raise ValueError("origin and direction must be 1D vectors of equal length")
        if abs(float(np.linalg.norm(d)) - 1.0) > 1e-9:
            raise ValueError("ray direction must have unit norm")
        if not self.max_range > 0:
            raise ValueError(f"max_range must be positive, got {self.max_range}")

    @classmethod
    def planar(cls, x: float, y: float, bearing: float, max_range: float) -> "Ray":
        return cls(np.array([x, y]), np.array([math.cos(bearing), math.sin(bearing)]), max_range)


@dataclass(frozen=True)
class RayTrace:
    """Voxels pierced by a ray, nearest first.

    ``entry`` is the ray parameter (meters) at which each cell is entered and
    ``center_dist`` the distance from the ray origin to the cell center.
    """

    voxels: np.ndarray
    entry: np.ndarray
    center_dist: np.ndarray
    origin: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.voxels)

    def within(self, max_dist: float) -> "RayTrace":
        """Leading part of the trace whose voxel centers lie within ``max_dist``."""
        k = int(np.searchsorted(self.center_dist, max_dist, side="right"))
        if k == len(self.voxels):
            return self
        return RayTrace(self.voxels[:k], self.entry[:k], self.center_dist[:k], self.origin)


def _empty_trace(origin) -> RayTrace:
    return RayTrace(np.empty(0, dtype=np.int64), np.empty(0), np.empty(0), np.asarray(origin))


def trace_ray(grid: GridSpec, ray: Ray) -> RayTrace:
    """Walk the cells crossed by the segment ``[0, max_range)`` of ``ray``.

    A cell is reported when the segment overlaps it with positive length, so
    cells only grazed at a corner or touched at the far endpoint are skipped.
    Overlaps shorter than ``TIE_TOL * voxel_size`` are treated as round-off:
    near-simultaneous plane crossings step together and a start point that
    close to a face is snapped onto it.
    Grid-line crossings are recomputed from the ray origin at every step
    rather than accumulated, which keeps entry distances free of drift.
    """
    dim = grid.dim
    o = [float(v) for v in ray.origin]
    d = [float(v) for v in ray.direction]
    if len(o) != dim:
        raise ValueError(f"ray is {len(o)}D but grid is {dim}D")
    s = grid.voxel_size
    lo = grid.origin
    hi = grid.upper

    # slab clipping against the grid box
    t0, t1 = 0.0, float(ray.max_range)
    for a in range(dim):
        if d[a] == 0.0:
            if not lo[a] <= o[a] < hi[a]:
                return _empty_trace(ray.origin)
            continue
        ta = (lo[a] - o[a]) / d[a]
        tb = (hi[a] - o[a]) / d[a]
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
    tol = TIE_TOL * s
    if not t1 - t0 > tol:
        return _empty_trace(ray.origin)

    cell = []
    step = []
    bound = []
    t_next = []
    for a in range(dim):
        g = (o[a] + t0 * d[a] - lo[a]) / s
        if abs(g - round(g)) <= TIE_TOL:
            g = float(round(g))
        c = math.floor(g)
        if d[a] < 0.0 and g == c:
            c -= 1
        c = min(max(c, 0), grid.extent[a] - 1)
        cell.append(c)
        if d[a] > 0.0:
            step.append(1)
            b = c + 1
        elif d[a] < 0.0:
            step.append(-1)
            b = c
        else:
            step.append(0)
            b = 0
        bound.append(b)
        t_next.append((lo[a] + b * s - o[a]) / d[a] if d[a] != 0.0 else math.inf)

    strides = [1]
    for e in grid.extent[:-1]:
        strides.append(strides[-1] * e)
    half = 0.5 * s

    ids: list[int] = []
    entry: list[float] = []
    cdist: list[float] = []
    t = t0
    while True:
        vid = 0
        dist2 = 0.0
        for a in range(dim):
            vid += cell[a] * strides[a]
            delta = lo[a] + cell[a] * s + half - o[a]
            dist2 += delta * delta
        if entry and t <= entry[-1]:
            # zero-length visit caused by round-off; keep the later cell only
            ids[-1] = vid
            cdist[-1] = math.sqrt(dist2)
        else:
            ids.append(vid)
            entry.append(t)
            cdist.append(math.sqrt(dist2))

        tn = min(t_next)
        if tn >= t1 - tol:
            break
        inside = True
        for a in range(dim):
            if t_next[a] <= tn + tol:
                cell[a] += step[a]
                bound[a] += step[a]
                t_next[a] = (lo[a] + bound[a] * s - o[a]) / d[a]
                if not 0 <= cell[a] < grid.extent[a]:
                    inside = False
        if not inside:
            break
        t = tn

    return RayTrace(np.array(ids, dtype=np.int64), np.array(entry), np.array(cdist), ray.origin)
