"""Log-odds occupancy mapping with a piecewise inverse sensor model."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .grid import GridSpec, Ray, RayTrace, trace_ray
from .scan import Diagnostics, Scan, TraceCache, observed_count, ray_for

L_MAX = 20.0


def logit(p):
    return np.log(p) - np.log1p(-np.asarray(p))


def sigmoid(l):
    return 1.0 / (1.0 + np.exp(-np.asarray(l)))


@dataclass(frozen=True)
class IsmParams:
    q_l: float = 0.45
    q_h: float = 0.55
    r_ramp: float = 0.1
    r_top: float = 0.1
    p0: float = 0.5

    def __post_init__(self):
        if not 0 < self.q_l <= 0.5 <= self.q_h < 1:
            raise ValueError(f"need 0 < q_l <= 0.5 <= q_h < 1, got q_l={self.q_l}, q_h={self.q_h}")
        if self.r_ramp < 0 or self.r_top < 0:
            raise ValueError("r_ramp and r_top must be non-negative")
        if not 0 < self.p0 < 1:
            raise ValueError(f"p0 must lie in (0, 1), got {self.p0}")


def ism_sweep_grid() -> list[IsmParams]:
    """The 48 inverse sensor models of the benchmark sweep."""
    out = []
    for delta, r_ramp, r_top in itertools.product((0.05, 0.2, 0.4),
                                                  (0.03, 0.05, 0.1, 0.3),
                                                  (0.03, 0.05, 0.1, 0.3)):
        out.append(IsmParams(q_l=round(0.5 - delta, 12), q_h=round(0.5 + delta, 12),
                             r_ramp=r_ramp, r_top=r_top))
    return out


def ism_lookup(params: IsmParams, d, z: Optional[float], max_range: float = math.inf):
    """Occupancy probability at distance ``d`` along a ray that measured ``z``.

    Free (``q_l``) up to the ramp start, a linear ramp up to ``q_h`` at ``z``,
    ``q_h`` for ``r_top`` past the reading, and the prior beyond. A no-return
    clears the whole ray up to ``max_range``.
    """
    d = np.asarray(d, dtype=float)
    if z is None:
        return np.where(d <= max_range, params.q_l, params.p0)
    out = np.full(d.shape, params.p0)
    out[d <= z + params.r_top] = params.q_h
    ramp_start = z - params.r_ramp
    if params.r_ramp > 0:
        on_ramp = (d >= ramp_start) & (d < z)
        out[on_ramp] = params.q_l + (params.q_h - params.q_l) * (d[on_ramp] - ramp_start) / params.r_ramp
    out[d < ramp_start] = params.q_l
    return out if out.ndim else float(out)


class LogOddsMap:
    def __init__(self, grid: GridSpec, l_max: float = L_MAX, p0: float = 0.5):
        self.grid = grid
        self.l_max = float(l_max)
        self.l = np.full(grid.n, float(logit(p0)))

    def stats(self) -> tuple[np.ndarray, np.ndarray]:
        return logodds_stats(self)

    def copy(self) -> "LogOddsMap":
        out = LogOddsMap(self.grid, self.l_max)
        out.l = self.l.copy()
        return out


def logodds_stats(lmap: LogOddsMap) -> tuple[np.ndarray, np.ndarray]:
    """Occupancy probability and the Bernoulli pseudo-std ``sqrt(p(1-p))``."""
    p = sigmoid(lmap.l)
    return p, np.sqrt(p * (1.0 - p))


def _integrate(lmap: LogOddsMap, params: IsmParams, trace: RayTrace, z: Optional[float],
               max_range: float) -> RayTrace:
    trace = trace.within(max_range)
    if len(trace) == 0:
        return trace
    ids = trace.voxels
    inc = logit(ism_lookup(params, trace.center_dist, z, max_range)) - logit(params.p0)
    lmap.l[ids] = np.clip(lmap.l[ids] + inc, -lmap.l_max, lmap.l_max)
    return trace


def logodds_update(lmap: LogOddsMap, params: IsmParams, ray: Ray, z: Optional[float],
                   trace: Optional[RayTrace] = None) -> LogOddsMap:
    """Add the ISM log-odds (minus the prior's) to every voxel on the ray, in place."""
    if trace is None:
        trace = trace_ray(lmap.grid, ray)
    _integrate(lmap, params, trace, z, ray.max_range)
    return lmap


def logodds_update_scan(lmap: LogOddsMap, params: IsmParams, max_range: float,
                        pose: Sequence[float], bearings: Iterable[float],
                        ranges: Iterable[Optional[float]],
                        tracer: Optional[TraceCache] = None,
                        observed: Optional[np.ndarray] = None) -> Diagnostics:
    diag = Diagnostics()
    start = time.perf_counter()
    for bearing, r in zip(bearings, ranges):
        if tracer is not None:
            trace = tracer(pose, bearing, max_range)
        else:
            trace = trace_ray(lmap.grid, ray_for(pose, bearing, max_range))
        trace = _integrate(lmap, params, trace, r, max_range)
        diag.rays_applied += 1
        if observed is not None:
            observed[trace.voxels[:observed_count(trace, r, lmap.grid.voxel_size)]] = True
    elapsed = time.perf_counter() - start
    diag.total_update_seconds = elapsed
    diag.per_scan_seconds.append(elapsed)
    return diag


def logodds_map_scans(lmap: LogOddsMap, params: IsmParams, max_range: float,
                      scans: Iterable[Scan], tracer: Optional[TraceCache] = None,
                      observed: Optional[np.ndarray] = None, on_scan=None) -> Diagnostics:
    diag = Diagnostics()
    for scan in scans:
        diag.merge_scan(logodds_update_scan(lmap, params, max_range, scan.pose, scan.bearings,
                                            scan.ranges, tracer=tracer, observed=observed))
        if on_scan is not None:
            on_scan(scan, lmap)
    return diag
