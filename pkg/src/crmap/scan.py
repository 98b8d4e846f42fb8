"""Pose-stamped batches of planar range readings and mapping diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .grid import GridSpec, Ray, RayTrace, trace_ray


@dataclass
class Scan:
    """One sensor sweep. Bearings are relative to the pose heading (radians);
    a range of ``None`` is a no-return."""

    t: int
    pose: tuple[float, float, float]
    bearings: list[float]
    ranges: list[Optional[float]]

    def __post_init__(self):
        if len(self.bearings) != len(self.ranges):
            raise ValueError("bearings and ranges must have the same length")
        if len(self.pose) != 3 or not all(math.isfinite(v) for v in self.pose):
            raise ValueError(f"pose must be three finite numbers, got {self.pose}")
        self.pose = tuple(float(v) for v in self.pose)


def ray_for(pose: Sequence[float], bearing: float, max_range: float) -> Ray:
    x, y, theta = pose
    return Ray.planar(x, y, theta + bearing, max_range)


class TraceCache:
    """Memoizes ray traces; traces depend only on the grid and the ray."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self._traces: dict[tuple, RayTrace] = {}

    def __call__(self, pose: Sequence[float], bearing: float, max_range: float) -> RayTrace:
        key = (*pose, bearing, max_range)
        tr = self._traces.get(key)
        if tr is None:
            tr = trace_ray(self.grid, ray_for(pose, bearing, max_range))
            self._traces[key] = tr
        return tr


def observed_count(trace: RayTrace, r: Optional[float], voxel_size: float) -> int:
    """Number of leading trace voxels a reading actually observed.

    For a return this is every voxel up to one voxel past the reading; a
    no-return observes the whole trace.
    """
    if r is None:
        return len(trace)
    return int((trace.center_dist <= r + voxel_size).sum())


@dataclass
class Diagnostics:
    rays_applied: int = 0
    rays_skipped: int = 0
    total_update_seconds: float = 0.0
    per_scan_seconds: list[float] = field(default_factory=list)

    def merge_scan(self, other: "Diagnostics") -> None:
        self.rays_applied += other.rays_applied
        self.rays_skipped += other.rays_skipped
        self.total_update_seconds += other.total_update_seconds
        self.per_scan_seconds.extend(other.per_scan_seconds)

    @property
    def skipped_fraction(self) -> float:
        total = self.rays_applied + self.rays_skipped
        return self.rays_skipped / total if total else 0.0

    def as_dict(self) -> dict:
        return {
            "rays_applied": self.rays_applied,
            "rays_skipped": self.rays_skipped,
            "total_update_seconds": self.total_update_seconds,
            "per_scan_seconds": list(self.per_scan_seconds),
        }
