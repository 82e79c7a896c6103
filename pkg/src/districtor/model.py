"""Core domain types: blocks, instances, center sets, assignments, traces.

All types are immutable value data and safe to share across threads.
Coordinates are dimensionless planar units (projection happens in
:mod:`districtor.dataio` before an Instance is built).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class ModelError(ValueError):
    """Invalid domain data."""


class Point2(NamedTuple):
    """A planar point."""

    x: float
    y: float

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


def squared_distance(a, b) -> float:
    """Squared Euclidean distance between two planar points.

    Accepts any pair of indexables with [0] and [1] coordinates.
    """
    dx = float(a[0]) - float(b[0])
    dy = float(a[1]) - float(b[1])
    return dx * dx + dy * dy


@dataclass(frozen=True)
class Block:
    """A weighted population point: one census-block-style record."""

    id: str
    location: Point2
    population: int

    def __post_init__(self) -> None:
        if not isinstance(self.population, int) or isinstance(self.population, bool):
            raise ModelError(f"block {self.id!r}: population must be an integer")
        if self.population < 0:
            raise ModelError(f"block {self.id!r}: population {self.population} is negative")
        loc = Point2(*self.location)
        if not loc.is_finite():
            raise ModelError(f"block {self.id!r}: non-finite coordinates {tuple(self.location)}")
        object.__setattr__(self, "location", loc)


@dataclass(frozen=True)
class Instance:
    """A districting problem: blocks plus the requested number of districts."""

    blocks: tuple[Block, ...]
    k: int
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if self.k < 1:
            raise ModelError(f"k must be >= 1, got {self.k}")
        seen: set[str] = set()
        total = 0
        for b in self.blocks:
            if b.id in seen:
                raise ModelError(f"duplicate block id {b.id!r}")
            seen.add(b.id)
            total += b.population
        if total < self.k:
            raise ModelError(
                f"total population {total} is smaller than k={self.k}; "
                "every district needs at least one resident"
            )
        object.__setattr__(self, "_m", total)
        object.__setattr__(self, "_locations", None)
        object.__setattr__(self, "_populations", None)

    @property
    def m(self) -> int:
        """Total population."""
        return self._m  # type: ignore[attr-defined]

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def locations(self) -> np.ndarray:
        """Block locations as a read-only (n, 2) float64 array, in file order."""
        cached = self._locations  # type: ignore[attr-defined]
        if cached is None:
            cached = np.array(
                [[b.location.x, b.location.y] for b in self.blocks], dtype=np.float64
            ).reshape(-1, 2)
            cached.setflags(write=False)
            object.__setattr__(self, "_locations", cached)
        return cached

    def populations(self) -> np.ndarray:
        """Block populations as a read-only (n,) int64 array, in file order."""
        cached = self._populations  # type: ignore[attr-defined]
        if cached is None:
            cached = np.array([b.population for b in self.blocks], dtype=np.int64)
            cached.setflags(write=False)
            object.__setattr__(self, "_populations", cached)
        return cached

    def block_ids(self) -> list[str]:
        return [b.id for b in self.blocks]


@dataclass(frozen=True)
class CenterSet:
    """Ordered district centers plus the per-center resident capacity."""

    positions: np.ndarray  # (k, 2) float64
    capacities: np.ndarray  # (k,) int64

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=np.float64).reshape(-1, 2)
        caps = np.asarray(self.capacities, dtype=np.int64).reshape(-1)
        if pos.shape[0] != caps.shape[0]:
            raise ModelError("centers and capacities must have equal length")
        if pos.shape[0] == 0:
            raise ModelError("center set must be nonempty")
        if not np.all(np.isfinite(pos)):
            raise ModelError("center coordinates must be finite")
        if np.any(caps <= 0):
            raise ModelError("capacities must be positive")
        if caps.max() - caps.min() > 1:
            raise ModelError("capacities must differ pairwise by at most one")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "capacities", caps)
        pos.setflags(write=False)
        caps.setflags(write=False)

    @property
    def k(self) -> int:
        return int(self.positions.shape[0])

    def point(self, i: int) -> Point2:
        return Point2(float(self.positions[i, 0]), float(self.positions[i, 1]))

    def validate_for(self, inst: Instance) -> None:
        if self.k != inst.k:
            raise ModelError(f"center set has k={self.k}, instance expects k={inst.k}")
        if int(self.capacities.sum()) != inst.m:
            raise ModelError(
                f"capacities sum to {int(self.capacities.sum())}, instance population is {inst.m}"
            )


@dataclass(frozen=True)
class BalancedAssignment:
    """Per-block distribution of residents to centers.

    Stored as parallel arrays with one entry per positive flow; a block split
    across centers contributes several entries. Entries are sorted by
    (block index, center index).
    """

    block_indices: np.ndarray  # (e,) int64, indices into Instance.blocks
    center_indices: np.ndarray  # (e,) int64
    persons: np.ndarray  # (e,) int64, all positive

    def __post_init__(self) -> None:
        bi = np.asarray(self.block_indices, dtype=np.int64).reshape(-1)
        ci = np.asarray(self.center_indices, dtype=np.int64).reshape(-1)
        pe = np.asarray(self.persons, dtype=np.int64).reshape(-1)
        if not (bi.shape == ci.shape == pe.shape):
            raise ModelError("assignment arrays must have equal length")
        if np.any(pe <= 0):
            raise ModelError("assignment entries must carry positive persons")
        order = np.lexsort((ci, bi))
        object.__setattr__(self, "block_indices", bi[order])
        object.__setattr__(self, "center_indices", ci[order])
        object.__setattr__(self, "persons", pe[order])
        for arr in (self.block_indices, self.center_indices, self.persons):
            arr.setflags(write=False)

    def flows(self, inst: Instance) -> dict[tuple[str, int], int]:
        """Flow map keyed by (block id, center index)."""
        ids = inst.block_ids()
        out: dict[tuple[str, int], int] = {}
        for b, c, p in zip(self.block_indices, self.center_indices, self.persons):
            key = (ids[int(b)], int(c))
            out[key] = out.get(key, 0) + int(p)
        return out

    def per_center_population(self, k: int) -> np.ndarray:
        out = np.zeros(k, dtype=np.int64)
        np.add.at(out, self.center_indices, self.persons)
        return out

    def per_block_assigned(self, n_blocks: int) -> np.ndarray:
        out = np.zeros(n_blocks, dtype=np.int64)
        np.add.at(out, self.block_indices, self.persons)
        return out

    def validate(self, inst: Instance, centers: CenterSet) -> None:
        """Check conservation per block and exact balance per center."""
        centers.validate_for(inst)
        if len(self.block_indices) and (
            self.block_indices.min() < 0 or self.block_indices.max() >= inst.n_blocks
        ):
            raise ModelError("assignment references a block outside the instance")
        if len(self.center_indices) and (
            self.center_indices.min() < 0 or self.center_indices.max() >= centers.k
        ):
            raise ModelError("assignment references a center outside the center set")
        assigned = self.per_block_assigned(inst.n_blocks)
        pops = inst.populations()
        if not np.array_equal(assigned, pops):
            bad = int(np.flatnonzero(assigned != pops)[0])
            raise ModelError(
                f"block {inst.blocks[bad].id!r}: assigned {int(assigned[bad])} persons, "
                f"population is {int(pops[bad])}"
            )
        totals = self.per_center_population(centers.k)
        if not np.array_equal(totals, centers.capacities):
            bad = int(np.flatnonzero(totals != centers.capacities)[0])
            raise ModelError(
                f"center {bad}: assigned {int(totals[bad])} persons, capacity is "
                f"{int(centers.capacities[bad])}"
            )


@dataclass(frozen=True)
class IterationRecord:
    """One Lloyd iteration: cost after the assignment step, then center movement."""

    index: int
    cost: float  # original squared-distance units
    cost_scaled: int  # exact integer objective of the scaled solve
    max_displacement: float


@dataclass(frozen=True)
class RunTrace:
    iterations: tuple[IterationRecord, ...]
    converged: bool
    seed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "iterations", tuple(self.iterations))

    def validate(self) -> None:
        """The scaled cost sequence must be nonincreasing."""
        costs = [r.cost_scaled for r in self.iterations]
        for a, b in zip(costs, costs[1:]):
            if b > a:
                raise ModelError(f"trace cost increased: {a} -> {b}")


# Power weights are a plain (k,) float64 array in original squared-distance
# units; the alias documents intent in signatures.
PowerWeights = np.ndarray


def balanced_capacities(m: int, k: int) -> np.ndarray:
    """Capacities floor(m/k) x i and ceil(m/k) x (k - i), summing to m.

    Entries are nondecreasing and differ pairwise by at most one.
    """
    if k < 1:
        raise ModelError(f"k must be >= 1, got {k}")
    if m < k:
        raise ModelError(f"m={m} is smaller than k={k}; some capacity would be zero")
    q, r = divmod(m, k)
    return np.array([q] * (k - r) + [q + 1] * r, dtype=np.int64)


def assignment_cost(inst: Instance, centers: CenterSet, asg: BalancedAssignment) -> float:
    """Total dispersion: sum over flows of persons x squared distance.

    Rejects assignments that violate conservation or balance.
    """
    asg.validate(inst, centers)
    if len(asg.persons) == 0:
        return 0.0
    locs = inst.locations()[asg.block_indices]
    cpos = centers.positions[asg.center_indices]
    d2 = np.sum((locs - cpos) ** 2, axis=1)
    return float(np.dot(asg.persons.astype(np.float64), d2))
