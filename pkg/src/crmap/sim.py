"""Ground-truth environments and noisy range-scan synthesis."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .grid import GridSpec, Ray, trace_ray
from .scan import Scan, ray_for


@dataclass
class GroundTruthMap:
    grid: GridSpec
    occupancy: np.ndarray

    def __post_init__(self):
        self.occupancy = np.asarray(self.occupancy, dtype=float)
        if self.occupancy.shape != (self.grid.n,):
            raise ValueError(f"occupancy must have shape ({self.grid.n},), got {self.occupancy.shape}")
        if np.any(self.occupancy < 0) or np.any(self.occupancy > 1):
            raise ValueError("occupancy values must lie in [0, 1]")

    @property
    def binary(self) -> np.ndarray:
        return self.occupancy >= 0.5


@dataclass(frozen=True)
class SensorRig:
    rays: int = 60
    fov_deg: float = 360.0
    max_range: float = 1.0
    noise_std: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.rays < 1:
            raise ValueError("a rig needs at least one ray")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if not self.max_range > 0:
            raise ValueError("max_range must be positive")

    def bearings(self) -> np.ndarray:
        fov = math.radians(self.fov_deg)
        if self.fov_deg >= 360.0:
            return np.arange(self.rays) * (2.0 * math.pi / self.rays)
        if self.rays == 1:
            return np.zeros(1)
        return np.linspace(-fov / 2, fov / 2, self.rays)


def true_range(truth: GroundTruthMap, ray: Ray) -> Optional[float]:
    """Center distance of the first occupied voxel on the ray, ``None`` if there is none in range."""
    tr = trace_ray(truth.grid, ray).within(ray.max_range)
    hits = np.flatnonzero(truth.occupancy[tr.voxels] >= 0.5)
    if len(hits) == 0:
        return None
    return float(tr.center_dist[hits[0]])


def noisy_ranges(true: Sequence[Optional[float]], noise_std: float, max_range: float,
                 rng: np.random.Generator) -> list[Optional[float]]:
    """Add Gaussian noise in range space. Negative draws are redrawn and
    readings past ``max_range`` are clamped to it; no-returns pass through."""
    out: list[Optional[float]] = []
    for r in true:
        if r is None:
            out.append(None)
            continue
        if noise_std == 0:
            out.append(min(r, max_range))
            continue
        v = r + noise_std * rng.standard_normal()
        while v <= 0.0:
            v = r + noise_std * rng.standard_normal()
        out.append(min(v, max_range))
    return out


def simulate_scan(truth: GroundTruthMap, rig: SensorRig, pose: Sequence[float],
                  rng: np.random.Generator, t: int = 0) -> Scan:
    bearings = rig.bearings()
    true = [true_range(truth, ray_for(pose, b, rig.max_range)) for b in bearings]
    ranges = noisy_ranges(true, rig.noise_std, rig.max_range, rng)
    return Scan(t=t, pose=tuple(pose), bearings=[float(b) for b in bearings], ranges=ranges)


def pose_rng(seed: int, t: int) -> np.random.Generator:
    """Independent, reproducible stream per (seed, pose index)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(t)]))


def simulate_log(truth: GroundTruthMap, trajectory: np.ndarray, rig: SensorRig) -> list[Scan]:
    return [simulate_scan(truth, rig, pose, pose_rng(rig.seed, t), t=t)
            for t, pose in enumerate(np.asarray(trajectory, dtype=float).reshape(-1, 3))]


# Built-in corridor world: three rooms stacked along y, joined by one-door
# walls, with a wall stub and a few pillars. Cell coordinates (ix, iy).
CORRIDOR_WAYPOINTS = [
    (3, 4), (6, 9), (12, 9), (16, 5), (21, 6), (26, 9), (30.5, 10), (30.5, 13.5),
    (30.5, 17), (26, 22), (22, 22), (17, 19), (13, 16), (8, 18), (8, 22), (8, 26.5),
    (8, 30), (12, 34), (18, 31), (23, 35), (29, 31), (34, 35), (36, 30),
]


def corridor_map(voxel_size: float = 0.05) -> GroundTruthMap:
    """40 x 40 binary map of rooms joined by narrow passages."""
    nx = ny = 40
    occ = np.zeros((ny, nx))  # occ[iy, ix]
    occ[0, :] = occ[-1, :] = occ[:, 0] = occ[:, -1] = 1
    occ[13, :] = 1
    occ[13, 29:33] = 0      # door between bottom and middle room
    occ[26, :] = 1
    occ[26, 6:10] = 0       # door between middle and top room
    occ[14:20, 20] = 1      # wall stub
    occ[27:32, 33] = 1      # wall stub
    occ[5:7, 9:11] = 1      # pillars
    occ[7, 27] = 1
    occ[20:22, 34:36] = 1
    occ[32, 14] = 1
    occ[33, 25:27] = 1
    grid = GridSpec(origin=(0.0, 0.0), voxel_size=voxel_size, extent=(nx, ny))
    return GroundTruthMap(grid, occ.ravel())


def corridor_trajectory(voxel_size: float = 0.05) -> np.ndarray:
    """23 poses through the corridor map; headings point at the next waypoint."""
    pts = np.array([((x + 0.5) * voxel_size, (y + 0.5) * voxel_size) for x, y in CORRIDOR_WAYPOINTS])
    heading = np.zeros(len(pts))
    step = np.diff(pts, axis=0)
    heading[:-1] = np.arctan2(step[:, 1], step[:, 0])
    heading[-1] = heading[-2]
    return np.column_stack([pts, heading])
