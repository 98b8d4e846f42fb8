"""Confidence-rich map update.

Each ray measurement turns into an affine likelihood ``alpha*m + beta`` for
every voxel on the ray, derived from the posterior over causes. Voxels in
front of the likely cause are pushed towards free, the likely cause towards
occupied, and voxels behind it are left alone.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .belief import MapBelief, ZeroMassPosterior, apply_linear_update
from .grid import Ray, RayTrace, trace_ray
from .scan import Diagnostics, Scan, TraceCache, observed_count, ray_for
from .sensor_model import AugmentedCone, Measurement, RangingModel, ZeroLikelihood, scm_from_means

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlphaBeta:
    alpha: float
    beta: float


def _check_means(m_hat) -> None:
    m_hat = np.asarray(m_hat)
    if np.any(m_hat <= 0.0) or np.any(m_hat >= 1.0):
        raise ValueError("voxel mean occupancy must lie strictly inside (0, 1)")


def alpha_beta(scm: np.ndarray, i_local: int, m_hat: float) -> AlphaBeta:
    """Likelihood coefficients of the voxel at local index ``i_local``.

    ``scm`` covers the augmented cone, so its last entry is the light cause
    and always counts as lying behind the voxel.
    """
    if not 0 <= i_local < len(scm) - 1:
        raise IndexError(f"voxel index {i_local} outside ray of length {len(scm) - 1}")
    _check_means(m_hat)
    before = float(np.sum(scm[:i_local]))
    after = float(np.sum(scm[i_local + 1:]))
    alpha = scm[i_local] / m_hat - after / (1.0 - m_hat)
    beta = before + after / (1.0 - m_hat)
    return AlphaBeta(float(alpha), float(beta))


def alpha_beta_all(scm: np.ndarray, means: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``alpha_beta`` for every voxel on the ray (linear in ray length)."""
    _check_means(means)
    n = len(means)
    before = np.zeros(n)
    np.cumsum(scm[:n - 1], out=before[1:])
    suffix = np.cumsum(scm[::-1])[::-1]
    after = suffix[1:]
    inv_free = 1.0 / (1.0 - means)
    alpha = scm[:n] / means - after * inv_free
    beta = before + after * inv_free
    return alpha, beta


def update_ray(belief: MapBelief, model: RangingModel, ray: Ray, z: Measurement,
               trace: Optional[RayTrace] = None) -> MapBelief:
    """Fold one measurement into ``belief`` in place and return it.

    ``z`` is in the model's measurement space. Raises ``ZeroLikelihood`` when
    the measurement is impossible under the current map; the belief is then
    left untouched.
    """
    if trace is None:
        trace = trace_ray(belief.grid, ray)
    _integrate(belief, model, trace, z)
    return belief


def _integrate(belief: MapBelief, model: RangingModel, trace: RayTrace, z: Measurement) -> RayTrace:
    # voxels centered beyond max_range cannot produce an in-range return
    trace = trace.within(model.max_range)
    if len(trace) == 0:
        return trace
    ids = trace.voxels
    w = belief.weights[ids]
    means = w @ belief.support
    scm = scm_from_means(model, AugmentedCone(trace), means, z)
    alpha, beta = alpha_beta_all(scm, means)
    belief.weights[ids] = apply_linear_update(w, belief.support, alpha, beta)
    return trace


def update_scan(belief: MapBelief, model: RangingModel, pose: Sequence[float],
                bearings: Iterable[float], ranges: Iterable[Optional[float]],
                tracer: Optional[TraceCache] = None,
                observed: Optional[np.ndarray] = None) -> Diagnostics:
    """Apply the rays of one scan sequentially, in order.

    ``ranges`` are readings in meters (``None`` for no-return); they are
    encoded into the model's measurement space here. Rays with zero
    likelihood are skipped and counted. When ``observed`` is given it is
    updated with the voxels each applied ray observed.
    """
    diag = Diagnostics()
    start = time.perf_counter()
    for bearing, r in zip(bearings, ranges):
        if tracer is not None:
            trace = tracer(pose, bearing, model.max_range)
        else:
            trace = trace_ray(belief.grid, ray_for(pose, bearing, model.max_range))
        try:
            trace = _integrate(belief, model, trace, model.encode(r))
        except (ZeroLikelihood, ZeroMassPosterior) as exc:
            log.debug("skipping ray at pose %s bearing %.6f: %s", pose, bearing, exc)
            diag.rays_skipped += 1
            continue
        diag.rays_applied += 1
        if observed is not None:
            observed[trace.voxels[:observed_count(trace, r, belief.grid.voxel_size)]] = True
    elapsed = time.perf_counter() - start
    diag.total_update_seconds = elapsed
    diag.per_scan_seconds.append(elapsed)
    return diag


def map_scans(belief: MapBelief, model: RangingModel, scans: Iterable[Scan],
              tracer: Optional[TraceCache] = None,
              observed: Optional[np.ndarray] = None,
              on_scan=None) -> Diagnostics:
    """Run ``update_scan`` over a scan log. ``on_scan(scan, belief)`` is called after each scan."""
    diag = Diagnostics()
    for scan in scans:
        diag.merge_scan(update_scan(belief, model, scan.pose, scan.bearings, scan.ranges,
                                    tracer=tracer, observed=observed))
        if on_scan is not None:
            on_scan(scan, belief)
    return diag
