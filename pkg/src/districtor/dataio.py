"""Block ingestion, projection, and output artifacts.

Input is a four-column CSV (planar or lon/lat coordinates). Outputs are a
self-contained result set: the projected blocks, the assignment, centers
with weights, cell polygons, the iteration trace, and a run summary. All
files are UTF-8 with LF newlines; floats are written with shortest
round-trip formatting.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import ConvexCell
from .model import (
    BalancedAssignment,
    Block,
    CenterSet,
    Instance,
    Point2,
    RunTrace,
    assignment_cost,
)

EARTH_RADIUS_KM = 6371.0088
MAX_ABS_LATITUDE = 89.0

PLANAR_HEADER = ["block_id", "x", "y", "population"]
LONLAT_HEADER = ["block_id", "lon", "lat", "population"]


class DataError(ValueError):
    """Malformed input data, reported with file and line context."""


def project(lon: float, lat: float, reference_parallel: float) -> Point2:
    """Equirectangular projection of one lon/lat degree pair to km.

    x = R * lon_rad * cos(reference_parallel), y = R * lat_rad. Distances
    are faithful near the reference parallel and degrade with latitude span.
    """
    if abs(lat) >= MAX_ABS_LATITUDE:
        raise DataError(f"latitude {lat} out of range (|lat| < {MAX_ABS_LATITUDE})")
    scale_x = math.cos(math.radians(reference_parallel))
    return Point2(
        EARTH_RADIUS_KM * math.radians(lon) * scale_x,
        EARTH_RADIUS_KM * math.radians(lat),
    )


def read_blocks(path: str | Path, k: int, lonlat: bool = False, name: str | None = None) -> Instance:
    """Read a block CSV into an Instance.

    With ``lonlat`` the header must be block_id,lon,lat,population and the
    coordinates are projected to planar km (reference parallel = mean input
    latitude); otherwise the header is block_id,x,y,population and the
    coordinates pass through. Zero-population blocks are kept. Any malformed
    row fails with its line number.
    """
    path = Path(path)
    expected = LONLAT_HEADER if lonlat else PLANAR_HEADER
    rows: list[tuple[str, float, float, int]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if [h.strip() for h in header] != expected:
            raise DataError(
                f"{path}: expected header {','.join(expected)!r}, got {','.join(header)!r}"
            )
        seen: set[str] = set()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            block_id = row[0].strip()
            if not block_id:
                raise DataError(f"{path}:{lineno}: empty block_id")
            if block_id in seen:
                raise DataError(f"{path}:{lineno}: duplicate block_id {block_id!r}")
            seen.add(block_id)
            try:
                cx = float(row[1])
                cy = float(row[2])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric coordinate") from None
            if not (math.isfinite(cx) and math.isfinite(cy)):
                raise DataError(f"{path}:{lineno}: non-finite coordinate")
            try:
                pop = int(row[3])
            except ValueError:
                raise DataError(
                    f"{path}:{lineno}: population {row[3]!r} is not an integer"
                ) from None
            if pop < 0:
                raise DataError(f"{path}:{lineno}: population {pop} is negative")
            rows.append((block_id, cx, cy, pop))
    if not rows:
        raise DataError(f"{path}: no data rows")

    if lonlat:
        lats = [r[2] for r in rows]
        lat0 = sum(lats) / len(lats)
        blocks = []
        for block_id, lon, lat, pop in rows:
            try:
                loc = project(lon, lat, lat0)
            except DataError as exc:
                raise DataError(f"{path}: block {block_id!r}: {exc}") from None
            blocks.append(Block(id=block_id, location=loc, population=pop))
    else:
        blocks = [
            Block(id=block_id, location=Point2(cx, cy), population=pop)
            for block_id, cx, cy, pop in rows
        ]
    return Instance(blocks=tuple(blocks), k=k, name=name if name is not None else path.stem)


@dataclass(frozen=True)
class SolveOutputs:
    """Everything one solve produces, ready to be written."""

    instance: Instance
    centers: CenterSet
    assignment: BalancedAssignment
    weights: np.ndarray
    trace: RunTrace
    cells: list[ConvexCell]
    scale: float
    threshold: float
    restarts: int
    wall_time_seconds: float


def _fmt(x: float) -> str:
    return repr(float(x))


def write_outputs(out_dir: str | Path, outputs: SolveOutputs) -> dict[str, Path]:
    """Write the full result set; returns the path of every artifact.

    Files: blocks.csv (projected instance), assignment.csv, centers.csv,
    cells.json, trace.csv, summary.json, and plotdata/ vertex lists. All
    content except the wall-time field in summary.json is a deterministic
    function of the solve result.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    inst = outputs.instance
    centers = outputs.centers
    asg = outputs.assignment
    paths: dict[str, Path] = {}

    blocks_path = out / "blocks.csv"
    with open(blocks_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(PLANAR_HEADER) + "\n")
        for b in inst.blocks:
            fh.write(f"{b.id},{_fmt(b.location.x)},{_fmt(b.location.y)},{b.population}\n")
    paths["blocks"] = blocks_path

    ids = inst.block_ids()
    asg_path = out / "assignment.csv"
    with open(asg_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("block_id,center_index,persons_assigned\n")
        for bi, ci, p in zip(asg.block_indices, asg.center_indices, asg.persons):
            fh.write(f"{ids[int(bi)]},{int(ci)},{int(p)}\n")
    paths["assignment"] = asg_path

    populations = asg.per_center_population(centers.k)
    centers_path = out / "centers.csv"
    with open(centers_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,x,y,weight,capacity,population\n")
        for i in range(centers.k):
            fh.write(
                f"{i},{_fmt(centers.positions[i, 0])},{_fmt(centers.positions[i, 1])},"
                f"{_fmt(outputs.weights[i])},{int(centers.capacities[i])},{int(populations[i])}\n"
            )
    paths["centers"] = centers_path

    cells_payload = [
        {
            "center": cell.center_index,
            "weight": float(outputs.weights[cell.center_index]),
            "ring": cell.ring(),
            "clipped": cell.clipped,
        }
        for cell in outputs.cells
    ]
    cells_path = out / "cells.json"
    with open(cells_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(cells_payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths["cells"] = cells_path

    trace_path = out / "trace.csv"
    with open(trace_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iteration,cost,cost_scaled,max_displacement\n")
        for rec in outputs.trace.iterations:
            fh.write(
                f"{rec.index},{_fmt(rec.cost)},{rec.cost_scaled},{_fmt(rec.max_displacement)}\n"
            )
    paths["trace"] = trace_path

    centroids = per_center_centroids(inst, asg, centers.k)
    summary = {
        "instance": inst.name,
        "k": centers.k,
        "m": inst.m,
        "seed": outputs.trace.seed,
        "restarts": outputs.restarts,
        "iterations": len(outputs.trace.iterations),
        "converged": outputs.trace.converged,
        "final_cost": assignment_cost(inst, centers, asg),
        "final_cost_scaled": outputs.trace.iterations[-1].cost_scaled,
        "scale": outputs.scale,
        "threshold": outputs.threshold,
        "per_center": [
            {
                "index": i,
                "capacity": int(centers.capacities[i]),
                "population": int(populations[i]),
                "weight": float(outputs.weights[i]),
                "centroid": [float(centroids[i, 0]), float(centroids[i, 1])],
            }
            for i in range(centers.k)
        ],
        "wall_time_seconds": outputs.wall_time_seconds,
    }
    summary_path = out / "summary.json"
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths["summary"] = summary_path

    plot_dir = out / "plotdata"
    plot_dir.mkdir(exist_ok=True)
    for stale in plot_dir.glob("cell_*.txt"):
        stale.unlink()
    for cell in outputs.cells:
        if cell.is_empty:
            continue
        cell_path = plot_dir / f"cell_{cell.center_index:03d}.txt"
        with open(cell_path, "w", encoding="utf-8", newline="\n") as fh:
            for x, y in cell.ring():
                fh.write(f"{_fmt(x)} {_fmt(y)}\n")
    paths["plotdata"] = plot_dir
    return paths


def per_center_centroids(inst: Instance, asg: BalancedAssignment, k: int) -> np.ndarray:
    locs = inst.locations()[asg.block_indices]
    w = asg.persons.astype(np.float64)
    sums = np.zeros((k, 2), dtype=np.float64)
    np.add.at(sums, asg.center_indices, locs * w[:, None])
    counts = asg.per_center_population(k).astype(np.float64)
    counts[counts == 0] = np.nan
    return sums / counts[:, None]


# -- result-set readers (used by validate and stats) ------------------------


def read_assignment_csv(path: str | Path) -> list[tuple[str, int, int]]:
    rows: list[tuple[str, int, int]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["block_id", "center_index", "persons_assigned"]:
            raise DataError(f"{path}: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append((row[0], int(row[1]), int(row[2])))
            except (ValueError, IndexError):
                raise DataError(f"{path}:{lineno}: malformed row") from None
    return rows


def read_centers_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Returns (positions, weights, capacities, populations)."""
    pos: list[list[float]] = []
    weights: list[float] = []
    caps: list[int] = []
    pops: list[int] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["index", "x", "y", "weight", "capacity", "population"]:
            raise DataError(f"{path}: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                if int(row[0]) != len(pos):
                    raise ValueError
                pos.append([float(row[1]), float(row[2])])
                weights.append(float(row[3]))
                caps.append(int(row[4]))
                pops.append(int(row[5]))
            except (ValueError, IndexError):
                raise DataError(f"{path}:{lineno}: malformed row") from None
    return (
        np.array(pos, dtype=np.float64).reshape(-1, 2),
        np.array(weights, dtype=np.float64),
        np.array(caps, dtype=np.int64),
        np.array(pops, dtype=np.int64),
    )


def read_trace_csv(path: str | Path) -> list[tuple[int, float, int, float]]:
    rows: list[tuple[int, float, int, float]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["iteration", "cost", "cost_scaled", "max_displacement"]:
            raise DataError(f"{path}: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append((int(row[0]), float(row[1]), int(row[2]), float(row[3])))
            except (ValueError, IndexError):
                raise DataError(f"{path}:{lineno}: malformed row") from None
    return rows


def read_summary_json(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON: {exc}") from None


def read_cells_json(path: str | Path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(payload, list):
        raise DataError(f"{path}: expected a JSON array")
    return payload
