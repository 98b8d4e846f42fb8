"""Forward range-sensor model over stochastic maps.

A measurement along a ray is explained by one cause: either one of the traced
voxels (light bounced off it and reached the sensor unobstructed) or the
abstract ``light`` cause appended after the last voxel, meaning nothing on the
ray reflected. Measurements are floats in the model's measurement space
(range in meters, or disparity) and ``None`` encodes a no-return.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .belief import MapBelief
from .grid import RayTrace

SQRT_2PI = math.sqrt(2.0 * math.pi)

Measurement = Optional[float]
NO_RETURN: Measurement = None


class ZeroLikelihood(ValueError):
    """The measurement has zero probability under the model and current map."""


@dataclass(frozen=True)
class RangingModel:
    """Noise and range limits of a ranging pixel.

    ``noise_std`` is expressed in measurement units (meters for ``range``,
    disparity units for ``disparity``). ``p_spur`` is the probability that an
    unobstructed ray still produces a (spurious) return, spread uniformly over
    range; ``p_miss`` is the probability that a reflecting voxel produces no
    return at all.
    """

    noise_std: float
    max_range: float
    space: str = "range"
    f: float = 1.0
    baseline: float = 1.0
    p_spur: float = 0.01
    p_miss: float = 0.01

    def __post_init__(self):
        if not self.noise_std > 0:
            raise ValueError(f"noise_std must be positive, got {self.noise_std}")
        if not self.max_range > 0:
            raise ValueError(f"max_range must be positive, got {self.max_range}")
        if self.space not in ("range", "disparity"):
            raise ValueError(f"unknown measurement space {self.space!r}")
        if self.space == "disparity" and not (self.f > 0 and self.baseline > 0):
            raise ValueError("disparity space needs positive f and baseline")
        if not (0 <= self.p_spur < 1 and 0 <= self.p_miss < 1):
            raise ValueError("p_spur and p_miss must lie in [0, 1)")

    @property
    def fb(self) -> float:
        return self.f * self.baseline

    def encode(self, r: Measurement) -> Measurement:
        """Map a range reading in meters to the model's measurement space."""
        if r is None:
            return None
        if not 0 < r <= self.max_range:
            raise ValueError(f"range {r} outside (0, {self.max_range}]")
        return r if self.space == "range" else self.fb / r

    def predict(self, distance):
        """Noise-free measurement caused by a reflector at ``distance`` meters."""
        return distance if self.space == "range" else self.fb / np.asarray(distance)

    def jacobian(self, r: float) -> float:
        """``|dz/dr|`` of the range-to-measurement mapping."""
        return 1.0 if self.space == "range" else self.fb / (r * r)

    def spurious_density(self, z: float) -> float:
        """Density of a return from the light cause: uniform in range, mapped to ``z``."""
        if self.space == "range":
            return self.p_spur / self.max_range if 0 < z <= self.max_range else 0.0
        if z < self.fb / self.max_range:
            return 0.0
        return self.p_spur / self.max_range * self.fb / (z * z)

    def in_support(self, z: float) -> bool:
        if self.space == "range":
            return 0 <= z <= self.max_range
        return z >= self.fb / self.max_range


@dataclass(frozen=True)
class AugmentedCone:
    """Traced voxels followed by the light cause at local index ``len(trace)``."""

    trace: RayTrace

    def __len__(self) -> int:
        return len(self.trace) + 1

    @property
    def light(self) -> int:
        return len(self.trace)

    @property
    def voxels(self) -> np.ndarray:
        return self.trace.voxels


def cause_prior_from_means(means: np.ndarray) -> np.ndarray:
    """Bounce-and-reach probabilities for each voxel plus the light cause."""
    means = np.asarray(means, dtype=float)
    reach = np.empty(len(means) + 1)
    reach[0] = 1.0
    np.cumprod(1.0 - means, out=reach[1:])
    prior = reach.copy()
    prior[:-1] *= means
    return prior


def cause_prior(cone: AugmentedCone, belief: MapBelief) -> np.ndarray:
    return cause_prior_from_means(belief.means(cone.voxels))


def known_cause_likelihoods(model: RangingModel, cone: AugmentedCone, z: Measurement) -> np.ndarray:
    """``p(z | cause)`` for every cause of the augmented cone."""
    n = len(cone.trace)
    out = np.empty(n + 1)
    if z is None:
        out[:n] = model.p_miss
        out[n] = 1.0 - model.p_spur
        return out
    if model.in_support(z):
        mu = model.predict(cone.trace.center_dist)
        u = (z - mu) / model.noise_std
        out[:n] = np.exp(-0.5 * u * u) / (model.noise_std * SQRT_2PI)
    else:
        out[:n] = 0.0
    out[n] = model.spurious_density(z)
    return out


def known_cause_likelihood(model: RangingModel, cone: AugmentedCone, cause: int,
                           z: Measurement) -> float:
    if not 0 <= cause < len(cone):
        raise IndexError(f"cause {cause} outside augmented cone of size {len(cone)}")
    if cause == cone.light:
        return 1.0 - model.p_spur if z is None else model.spurious_density(z)
    if z is None:
        return model.p_miss
    if not model.in_support(z):
        return 0.0
    mu = float(model.predict(cone.trace.center_dist[cause]))
    u = (z - mu) / model.noise_std
    return math.exp(-0.5 * u * u) / (model.noise_std * SQRT_2PI)


def map_likelihood(model: RangingModel, cone: AugmentedCone, belief: MapBelief,
                   z: Measurement) -> float:
    """``p(z | ray, map)`` with the cause marginalized out."""
    return float(known_cause_likelihoods(model, cone, z) @ cause_prior(cone, belief))


def scm_from_means(model: RangingModel, cone: AugmentedCone, means: np.ndarray,
                   z: Measurement) -> np.ndarray:
    joint = known_cause_likelihoods(model, cone, z) * cause_prior_from_means(means)
    total = joint.sum()
    if not total > 0 or not math.isfinite(total):
        raise ZeroLikelihood(f"measurement {z!r} has zero likelihood on this ray")
    return joint / total


def sensor_cause_model(model: RangingModel, cone: AugmentedCone, belief: MapBelief,
                       z: Measurement) -> np.ndarray:
    """Posterior over causes given ``z`` and the current map belief."""
    return scm_from_means(model, cone, belief.means(cone.voxels), z)
