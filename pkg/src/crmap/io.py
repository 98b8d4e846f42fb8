"""Text file formats: ground-truth maps, trajectories, scan logs, belief dumps, reports.

Every float is written with 17 significant digits so that files round-trip
bit-exactly.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .grid import GridSpec
from .scan import Scan
from .sim import GroundTruthMap


class DataError(ValueError):
    """Malformed input file."""


def fmt(x: float) -> str:
    return "%.17g" % x


def dumps_json(obj) -> str:
    """Compact JSON with 17-significant-digit floats; non-finite floats become null."""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(float(obj)) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj) + "\n")


# ground-truth maps -----------------------------------------------------------

def write_map(path, truth: GroundTruthMap) -> None:
    g = truth.grid
    head = ["crmmap", "1", str(g.dim), *map(str, g.extent), fmt(g.voxel_size), *map(fmt, g.origin)]
    nx = g.extent[0]
    values = truth.occupancy.reshape(-1, nx)
    lines = [" ".join(head)]
    lines.extend(" ".join(fmt(v) for v in row) for row in values)
    Path(path).write_text("\n".join(lines) + "\n")


def read_map(path) -> GroundTruthMap:
    tokens = Path(path).read_text().split()
    if len(tokens) < 3 or tokens[0] != "crmmap" or tokens[1] != "1":
        raise DataError(f"{path}: not a crmmap version 1 file")
    try:
        dim = int(tokens[2])
        if dim not in (2, 3):
            raise DataError(f"{path}: dimensionality must be 2 or 3, got {dim}")
        extent = tuple(int(v) for v in tokens[3:3 + dim])
        s = float(tokens[3 + dim])
        origin = tuple(float(v) for v in tokens[4 + dim:4 + 2 * dim])
        values = np.array([float(v) for v in tokens[4 + 2 * dim:]])
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: malformed header or values ({exc})") from exc
    try:
        grid = GridSpec(origin=origin, voxel_size=s, extent=extent)
        return GroundTruthMap(grid, values)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


# trajectories ----------------------------------------------------------------

def write_trajectory(path, poses: np.ndarray) -> None:
    poses = np.asarray(poses, dtype=float).reshape(-1, 3)
    Path(path).write_text("".join(" ".join(fmt(v) for v in p) + "\n" for p in poses))


def read_trajectory(path) -> np.ndarray:
    poses = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if len(parts) != 3:
                raise ValueError(f"expected 'x y theta', got {len(parts)} fields")
            pose = [float(v) for v in parts]
            if not all(math.isfinite(v) for v in pose):
                raise ValueError("non-finite pose")
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        poses.append(pose)
    return np.array(poses, dtype=float).reshape(-1, 3)


# scan logs -------------------------------------------------------------------

def scan_to_line(scan: Scan) -> str:
    rays = ", ".join(
        f'{{"bearing": {fmt(b)}, "range": {"null" if r is None else fmt(r)}}}'
        for b, r in zip(scan.bearings, scan.ranges))
    return f'{{"t": {int(scan.t)}, "pose": [{", ".join(fmt(v) for v in scan.pose)}], "rays": [{rays}]}}'


def write_scan_log(path, scans: Iterable[Scan]) -> None:
    with open(path, "w") as fh:
        for scan in scans:
            fh.write(scan_to_line(scan) + "\n")


def parse_scan_line(line: str) -> Scan:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("scan must be a JSON object")
    rays = obj["rays"]
    bearings = [float(r["bearing"]) for r in rays]
    ranges = [None if r["range"] is None else float(r["range"]) for r in rays]
    if any(r is not None and not (math.isfinite(r) and r > 0) for r in ranges):
        raise ValueError("ranges must be positive finite numbers or null")
    return Scan(t=int(obj["t"]), pose=tuple(float(v) for v in obj["pose"]),
                bearings=bearings, ranges=ranges)


def read_scan_log(path) -> list[Scan]:
    scans = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                scans.append(parse_scan_line(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad scan record ({exc})") from exc
    return scans


# belief dumps ----------------------------------------------------------------

def write_belief_dump(path, mean: np.ndarray, std: np.ndarray,
                      weights: Optional[np.ndarray] = None) -> None:
    """One row per voxel: ``voxel_id, mean, std[, w_1..w_K]``."""
    header = ["voxel_id", "mean", "std"]
    if weights is not None:
        header += [f"w_{j}" for j in range(1, weights.shape[1] + 1)]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for i in range(len(mean)):
            row = [str(i), fmt(mean[i]), fmt(std[i])]
            if weights is not None:
                row += [fmt(w) for w in weights[i]]
            out.writerow(row)


def read_belief_dump(path) -> tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:3] != ["voxel_id", "mean", "std"]:
        raise DataError(f"{path}: missing 'voxel_id,mean,std' header")
    k = len(rows[0]) - 3
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float).reshape(-1, 3 + k)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    if not np.array_equal(data[:, 0], np.arange(len(data))):
        raise DataError(f"{path}: voxel ids must be 0..n-1 in order")
    weights = data[:, 3:] if k else None
    return data[:, 1], data[:, 2], weights


def write_voxel_rows(path, rows: dict[str, np.ndarray]) -> None:
    cols = list(rows)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(cols)
        for i in range(len(rows[cols[0]])):
            out.writerow([str(int(rows[c][i])) if c == "voxel_id" else fmt(rows[c][i]) for c in cols])


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, (float, np.floating)):
            return fmt(float(v))
        return str(v)

    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row in rows:
            out.writerow([cell(v) for v in row])
