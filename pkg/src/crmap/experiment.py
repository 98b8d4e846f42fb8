"""Pipelines behind the command line: simulate, map, evaluate, sweep."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import io
from .belief import MapBelief, init_bernoulli_prior, init_prior
from .config import ConfigError, ExperimentConfig
from .crm_filter import map_scans
from .grid import GridSpec
from .logodds import IsmParams, LogOddsMap, ism_sweep_grid, logodds_map_scans
from .metrics import EvalReport, evaluate
from .scan import Diagnostics, Scan, TraceCache
from .sensor_model import RangingModel
from .sim import GroundTruthMap, SensorRig, corridor_map, corridor_trajectory, simulate_log

log = logging.getLogger(__name__)

BUILTIN = "corridor"
SKIP_LIMIT = 0.5


class NumericalFailure(RuntimeError):
    """Too many rays had to be skipped for the map to be trusted."""


# inputs ----------------------------------------------------------------------

def load_truth(cfg: ExperimentConfig) -> GroundTruthMap:
    if cfg.map is None:
        raise ConfigError("a ground-truth map is required (--map FILE or --map corridor)")
    if cfg.map == BUILTIN:
        return corridor_map()
    return io.read_map(cfg.map)


def load_trajectory(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.trajectory is None:
        raise ConfigError("a trajectory is required (--trajectory FILE or --trajectory corridor)")
    if cfg.trajectory == BUILTIN:
        return corridor_trajectory()
    return io.read_trajectory(cfg.trajectory)


def check_trajectory(grid: GridSpec, poses: np.ndarray) -> None:
    lo, hi = np.array(grid.origin), np.array(grid.upper)
    for i, p in enumerate(poses):
        if not (np.all(p[:2] >= lo) and np.all(p[:2] < hi)):
            raise io.DataError(f"pose {i} at ({p[0]:g}, {p[1]:g}) lies outside the grid")


def rig_from(cfg: ExperimentConfig) -> SensorRig:
    return SensorRig(rays=cfg.rays, fov_deg=cfg.fov, max_range=cfg.max_range,
                     noise_std=cfg.noise_std, seed=cfg.seed)


def model_from(cfg: ExperimentConfig) -> RangingModel:
    return RangingModel(noise_std=cfg.noise_std, max_range=cfg.max_range, space=cfg.space,
                        f=cfg.f, baseline=cfg.baseline, p_spur=cfg.p_spur, p_miss=cfg.p_miss)


def ism_from(cfg: ExperimentConfig) -> IsmParams:
    return IsmParams(q_l=cfg.q_l, q_h=cfg.q_h, r_ramp=cfg.r_ramp, r_top=cfg.r_top)


def apply_max_range_policy(scans: Sequence[Scan], max_range: float, policy: str) -> list[Scan]:
    """Handle readings at (or past) the sensor limit.

    ``keep`` passes them through as ordinary returns, ``no_return`` turns them
    into no-returns and ``discard`` drops those rays.
    """
    if policy == "keep":
        return list(scans)
    out = []
    for scan in scans:
        bearings, ranges = [], []
        for b, r in zip(scan.bearings, scan.ranges):
            if r is not None and r >= max_range:
                if policy == "discard":
                    continue
                r = None
            bearings.append(b)
            ranges.append(r)
        out.append(Scan(t=scan.t, pose=scan.pose, bearings=bearings, ranges=ranges))
    return out


# mapping ---------------------------------------------------------------------

@dataclass
class MapResult:
    mean: np.ndarray
    std: np.ndarray
    weights: Optional[np.ndarray]
    observed: np.ndarray
    diagnostics: Diagnostics


def new_map(cfg: ExperimentConfig, grid: GridSpec):
    if cfg.method == "logodds":
        return LogOddsMap(grid)
    if cfg.support == "bernoulli":
        return init_bernoulli_prior(grid, eps=cfg.eps)
    return init_prior(grid, cfg.k)


def map_log(cfg: ExperimentConfig, grid: GridSpec, scans: Sequence[Scan],
            tracer: Optional[TraceCache] = None,
            on_scan: Optional[Callable] = None) -> MapResult:
    """Fold a scan log into a fresh map with the configured method."""
    scans = apply_max_range_policy(scans, cfg.max_range, cfg.max_range_returns)
    tracer = tracer or TraceCache(grid)
    observed = np.zeros(grid.n, dtype=bool)
    m = new_map(cfg, grid)
    if isinstance(m, MapBelief):
        diag = map_scans(m, model_from(cfg), scans, tracer=tracer, observed=observed, on_scan=on_scan)
        mean, std = m.stats()
        weights = m.weights
    else:
        diag = logodds_map_scans(m, ism_from(cfg), cfg.max_range, scans, tracer=tracer,
                                 observed=observed, on_scan=on_scan)
        mean, std = m.stats()
        weights = None
    return MapResult(mean, std, weights, observed, diag)


def score(cfg: ExperimentConfig, truth: GroundTruthMap, result: MapResult) -> EvalReport:
    mask = result.observed if cfg.updated_only else None
    return evaluate(result.mean, result.std, truth.occupancy, cfg.gamma, mask=mask)


def report_dict(report: EvalReport) -> dict:
    return {
        "voxel_filter": report.voxel_filter,
        "voxels_evaluated": report.voxels_evaluated,
        "mae": report.mae,
        "auc": report.auc,
        "pcc": report.pcc,
        "inconsistency": {f"{g:g}": v for g, v in report.inconsistency.items()},
        "inconsistent_fraction": {f"{g:g}": v for g, v in report.inconsistent_fraction.items()},
    }


# subcommands -----------------------------------------------------------------

def run_simulate(cfg: ExperimentConfig) -> Path:
    truth = load_truth(cfg)
    poses = load_trajectory(cfg)
    check_trajectory(truth.grid, poses)
    if cfg.out is None:
        raise ConfigError("simulate needs --out for the scan log")
    io.write_scan_log(cfg.out, simulate_log(truth, poses, rig_from(cfg)))
    return Path(cfg.out)


def run_map(cfg: ExperimentConfig) -> MapResult:
    """Map a scan log; writes the belief dump, diagnostics and optional per-scan snapshots."""
    if cfg.scan_log is None or cfg.out is None:
        raise ConfigError("map needs --scan-log and --out")
    grid = load_truth(cfg).grid
    scans = io.read_scan_log(cfg.scan_log)

    on_scan = None
    if cfg.snapshot_dir is not None:
        snap_dir = Path(cfg.snapshot_dir)
        snap_dir.mkdir(parents=True, exist_ok=True)

        def on_scan(scan, m):
            mean, std = m.stats()
            weights = m.weights if isinstance(m, MapBelief) else None
            io.write_belief_dump(snap_dir / f"belief_{scan.t:06d}.csv", mean, std, weights)

    result = map_log(cfg, grid, scans, on_scan=on_scan)
    io.write_belief_dump(cfg.out, result.mean, result.std, result.weights)
    diag = result.diagnostics.as_dict()
    diag["updated_voxels"] = np.flatnonzero(result.observed).tolist()
    io.write_json(cfg.diagnostics or diagnostics_path(cfg.out), diag)
    if result.diagnostics.skipped_fraction > SKIP_LIMIT:
        raise NumericalFailure(
            f"{result.diagnostics.rays_skipped} of {result.diagnostics.rays_applied + result.diagnostics.rays_skipped}"
            " rays were skipped (zero likelihood or zero posterior mass)")
    return result


def diagnostics_path(dump) -> str:
    p = Path(dump)
    return str(p.with_name(p.stem + ".diagnostics.json"))


def _updated_mask(cfg: ExperimentConfig, n: int) -> Optional[np.ndarray]:
    if not cfg.updated_only:
        return None
    path = cfg.diagnostics or (diagnostics_path(cfg.belief) if cfg.belief else None)
    if path is None or not Path(path).exists():
        raise ConfigError("--updated-only needs the diagnostics file written by 'map' (--diagnostics)")
    try:
        ids = json.loads(Path(path).read_text())["updated_voxels"]
    except (ValueError, KeyError) as exc:
        raise io.DataError(f"{path}: no updated_voxels list ({exc})") from exc
    mask = np.zeros(n, dtype=bool)
    mask[np.asarray(ids, dtype=np.int64)] = True
    return mask


def run_evaluate(cfg: ExperimentConfig) -> EvalReport:
    """Score a belief dump against ground truth; writes summary JSON, per-voxel CSV
    and, when a snapshot directory is given, a per-scan time series."""
    if cfg.belief is None or cfg.out is None:
        raise ConfigError("evaluate needs --belief and --out")
    truth = load_truth(cfg)
    n = truth.grid.n
    mask = _updated_mask(cfg, n)

    def scored(path):
        mean, std, _ = io.read_belief_dump(path)
        if len(mean) != n:
            raise io.DataError(f"{path}: {len(mean)} voxels but the map has {n}")
        return evaluate(mean, std, truth.occupancy, cfg.gamma, mask=mask)

    report = scored(cfg.belief)
    out = Path(cfg.out)
    io.write_json(out, report_dict(report))
    io.write_voxel_rows(out.with_name(out.stem + ".voxels.csv"), report.rows)

    if cfg.snapshot_dir is not None:
        snaps = sorted(Path(cfg.snapshot_dir).glob("belief_*.csv"))
        g = list(cfg.gamma)
        header = ["t", "mae", "auc", "pcc"] + [f"ic_{x:g}" for x in g] + [f"frac_{x:g}" for x in g]
        rows = []
        for p in snaps:
            r = scored(p)
            t = int(p.stem.split("_")[1])
            rows.append([t, r.mae, r.auc, r.pcc]
                        + [r.inconsistency[float(x)] for x in g]
                        + [r.inconsistent_fraction[float(x)] for x in g])
        io.write_table(out.with_name(out.stem + ".timeseries.csv"), header, rows)
    return report


# sweeps ----------------------------------------------------------------------

SWEEP_HEADER = ["method", "noise_std", "seed", "q_l", "q_h", "r_ramp", "r_top",
                "mae", "auc", "pcc", "ic_gamma0", "inconsistent_fraction", "consistent_error",
                "inconsistent_error", "rays_skipped"]


def _cell(args) -> list:
    cfg, truth, scans = args
    result = map_log(cfg, truth.grid, scans)
    rep = score(cfg, truth, result)
    g_frac = 1.25 if 1.25 in cfg.gamma else cfg.gamma[0]
    total = float(rep.rows["abs_error"].sum())
    frac = rep.inconsistent_fraction[float(g_frac)]
    ism = cfg.method == "logodds"
    return [cfg.method if ism else f"crm{cfg.k if cfg.support == 'midpoint' else '-bernoulli'}",
            cfg.noise_std, cfg.seed,
            cfg.q_l if ism else None, cfg.q_h if ism else None,
            cfg.r_ramp if ism else None, cfg.r_top if ism else None,
            rep.mae, rep.auc, rep.pcc, rep.inconsistency[float(cfg.gamma[0])], frac,
            total * (1 - frac), total * frac,
            result.diagnostics.rays_skipped]


def _run_cells(cells, jobs: int) -> list[list]:
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_cell, cells))
    return [_cell(c) for c in cells]


def ism_cells(cfg: ExperimentConfig, truth: GroundTruthMap, scans, grid_params=None):
    """One Log-Odds cell per ISM config plus one CRM cell, all on the same log."""
    grid_params = ism_sweep_grid() if grid_params is None else grid_params
    cells = [(replace(cfg, method="logodds", q_l=p.q_l, q_h=p.q_h, r_ramp=p.r_ramp, r_top=p.r_top),
              truth, scans) for p in grid_params]
    cells.append((replace(cfg, method="crm"), truth, scans))
    return cells


def run_sweep(cfg: ExperimentConfig) -> list[list]:
    """``ism``: 48 ISM configs + CRM on one scan log (49 rows).
    ``noise``: every noise level in voxel-size multiples x seed x {CRM, configured ISM}."""
    if cfg.out is None:
        raise ConfigError("sweep needs --out for the table")
    truth = load_truth(cfg)
    if cfg.sweep == "ism":
        if cfg.scan_log is not None:
            scans = io.read_scan_log(cfg.scan_log)
        else:
            poses = load_trajectory(cfg)
            check_trajectory(truth.grid, poses)
            scans = simulate_log(truth, poses, rig_from(cfg))
        rows = _run_cells(ism_cells(cfg, truth, scans), cfg.jobs)
    else:
        poses = load_trajectory(cfg)
        check_trajectory(truth.grid, poses)
        s = truth.grid.voxel_size
        cells = []
        for level in cfg.noise_levels:
            for seed in range(cfg.seed, cfg.seed + cfg.seeds):
                c = replace(cfg, noise_std=level * s, seed=seed)
                scans = simulate_log(truth, poses, rig_from(c))
                cells.append((replace(c, method="crm"), truth, scans))
                cells.append((replace(c, method="logodds"), truth, scans))
        rows = _run_cells(cells, cfg.jobs)
    io.write_table(cfg.out, SWEEP_HEADER, rows)
    return rows
