"""Map quality and consistency metrics.

Undefined quantities (a Pearson correlation with a constant input, an AUC
with a single class) are reported as ``None`` rather than 0 or NaN.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

DEFAULT_GAMMAS = (0.5, 1.25, 2.0)


def inconsistency(errors, stds, gamma: float) -> float:
    """Sum of the error mass lying outside ``gamma`` standard deviations."""
    errors = np.abs(np.asarray(errors, dtype=float))
    stds = np.asarray(stds, dtype=float)
    if errors.shape != stds.shape:
        raise ValueError(f"length mismatch: {errors.shape} errors vs {stds.shape} stds")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    return float(np.maximum(0.0, errors - gamma * stds).sum())


def inconsistent_error_fraction(errors, stds, gamma: float) -> float:
    """Share of the total absolute error carried by voxels with ``|e| > gamma*std``."""
    errors = np.abs(np.asarray(errors, dtype=float))
    stds = np.asarray(stds, dtype=float)
    total = errors.sum()
    if total == 0:
        return 0.0
    return float(errors[errors > gamma * stds].sum() / total)


def pearson(x, y) -> Optional[float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValueError("length mismatch")
    if len(x) < 2:
        return None
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = dx @ dx
    syy = dy @ dy
    if sxx == 0 or syy == 0:
        return None
    r = float(dx @ dy / np.sqrt(sxx * syy))
    return min(1.0, max(-1.0, r))


def roc_auc(labels, scores) -> Optional[float]:
    """Area under the ROC curve via average ranks (ties count one half)."""
    labels = np.asarray(labels, dtype=bool)
    scores = np.asarray(scores, dtype=float)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores, method="average")
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass
class EvalReport:
    mae: float
    auc: Optional[float]
    pcc: Optional[float]
    inconsistency: dict[float, float]
    inconsistent_fraction: dict[float, float]
    voxels_evaluated: int
    voxel_filter: str
    rows: dict[str, np.ndarray] = field(repr=False, default_factory=dict)


def evaluate(mean, std, truth: np.ndarray, gammas: Sequence[float] = DEFAULT_GAMMAS,
             mask: Optional[np.ndarray] = None) -> EvalReport:
    """Score a per-voxel estimate against ground-truth occupancy.

    ``mask`` restricts evaluation to a subset of voxels (e.g. those that were
    observed); by default every voxel is scored. Rows keep per-voxel error and
    inconsistency contributions at the first gamma.
    """
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if not (mean.shape == std.shape == truth.shape):
        raise ValueError("estimate and truth must cover the same grid")
    ids = np.arange(len(truth))
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != truth.shape:
            raise ValueError("mask must cover the same grid")
        ids = ids[mask]
    m, s, t = mean[ids], std[ids], truth[ids]
    err = np.abs(t - m)
    gammas = list(gammas)
    ic = {float(g): inconsistency(err, s, g) for g in gammas}
    frac = {float(g): inconsistent_error_fraction(err, s, g) for g in gammas}
    g0 = gammas[0] if gammas else 0.0
    rows = {
        "voxel_id": ids,
        "truth": t,
        "mean": m,
        "std": s,
        "abs_error": err,
        "ic": np.maximum(0.0, err - g0 * s),
    }
    return EvalReport(
        mae=float(err.mean()) if len(err) else 0.0,
        auc=roc_auc(t >= 0.5, m),
        pcc=pearson(s, err),
        inconsistency=ic,
        inconsistent_fraction=frac,
        voxels_evaluated=len(ids),
        voxel_filter="all" if mask is None else "updated",
        rows=rows,
    )
