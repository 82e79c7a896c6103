"""Balanced minimum-cost assignment of blocks to centers, with power weights.

Squared distances are normalized by the block bounding-box diagonal, scaled
to integers, and handed to the exact flow solver; the demand-side duals of
the solved transshipment become the power-diagram weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import flow
from .model import BalancedAssignment, CenterSet, Instance, PowerWeights

DEFAULT_SCALE = 1.0e9


class AssignmentError(ValueError):
    """Invalid inputs to the balanced assignment."""


@dataclass(frozen=True)
class ScaledCostPolicy:
    """Fixed-point cost model parameters.

    ``scale`` is the number of integer cost units per unit of normalized
    squared distance (normalized = divided by the squared block bounding-box
    diagonal). Rounding is to the nearest integer.
    """

    scale: float = DEFAULT_SCALE

    def __post_init__(self) -> None:
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise AssignmentError(f"scale must be positive and finite, got {self.scale}")


@dataclass(frozen=True)
class CostModel:
    """Concrete cost mapping for one instance: d2 -> round(scale * d2 / diameter^2)."""

    diameter: float  # block bounding-box diagonal, original units
    scale: float

    @property
    def units_per_cost(self) -> float:
        """Original squared-distance units represented by one integer cost unit."""
        return self.diameter * self.diameter / self.scale

    def consistency_tolerance(self) -> float:
        """Slack, in original units, that absorbs cost rounding (one half-unit
        per arc on each side of the comparison)."""
        return 2.0 * self.units_per_cost

    def int_costs(self, points: np.ndarray, center_positions: np.ndarray) -> np.ndarray:
        """Integer cost matrix between points (n, 2) and centers (k, 2)."""
        diff = points[:, None, :] - center_positions[None, :, :]
        d2 = np.einsum("nkc,nkc->nk", diff, diff)
        scaled = d2 * (self.scale / (self.diameter * self.diameter))
        if scaled.size and (
            not np.all(np.isfinite(scaled)) or float(np.abs(scaled).max()) >= 2.0**62
        ):
            raise flow.OverflowRiskError(
                "scaled costs exceed the exact integer range; lower the cost scaling"
            )
        return np.rint(scaled).astype(np.int64)


def cost_model_for(inst: Instance, policy: ScaledCostPolicy) -> CostModel:
    locs = inst.locations()
    span = locs.max(axis=0) - locs.min(axis=0)
    diag = float(math.hypot(float(span[0]), float(span[1])))
    if diag == 0.0:
        diag = 1.0  # all blocks coincide; distances are absolute
    return CostModel(diameter=diag, scale=policy.scale)


@dataclass(frozen=True)
class ScaledSolveResult:
    """Rich result of one balanced-assignment solve."""

    assignment: BalancedAssignment
    weights: PowerWeights  # original squared-distance units, min-normalized to 0
    weights_int: np.ndarray  # solver demand potentials (integer cost units)
    objective_scaled: int
    cost_model: CostModel
    flow_solution: flow.FlowSolution


def solve_balanced(
    inst: Instance,
    centers: CenterSet,
    policy: ScaledCostPolicy = ScaledCostPolicy(),
    warm_potentials: np.ndarray | None = None,
) -> ScaledSolveResult:
    """Solve and certify the balanced assignment; returns the full result."""
    centers.validate_for(inst)
    model = cost_model_for(inst, policy)
    costs = model.int_costs(inst.locations(), centers.positions)
    trans = flow.TransshipmentInstance(
        costs=costs,
        supplies=inst.populations(),
        demands=centers.capacities,
    )
    sol = flow.solve_mcf(trans, warm_potentials=warm_potentials)
    flow.certify(trans, sol)
    asg = BalancedAssignment(
        block_indices=sol.supply_idx,
        center_indices=sol.demand_idx,
        persons=sol.amounts,
    )
    weights = sol.demand_potentials.astype(np.float64) * model.units_per_cost
    return ScaledSolveResult(
        assignment=asg,
        weights=weights,
        weights_int=sol.demand_potentials,
        objective_scaled=sol.objective,
        cost_model=model,
        flow_solution=sol,
    )


def min_cost_balanced_assignment(
    inst: Instance,
    centers: CenterSet,
    policy: ScaledCostPolicy = ScaledCostPolicy(),
) -> tuple[BalancedAssignment, PowerWeights]:
    """Minimum-cost balanced assignment plus power weights from the LP duals.

    The returned weights are in original squared-distance units and are
    normalized so their minimum is zero (adding a constant to all weights
    leaves the power diagram unchanged). For every positive-flow pair the
    weighted squared distance to the assigned center is minimal among all
    centers, up to the cost model's rounding slack.
    """
    res = solve_balanced(inst, centers, policy)
    return res.assignment, res.weights


@dataclass(frozen=True)
class ConsistencyReport:
    """Positive-flow pairs that violate the power-region condition."""

    violations: tuple[tuple[str, int, float], ...]  # (block id, center, excess margin)
    tolerance: float
    pairs_checked: int

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        state = "consistent" if self.ok else f"{len(self.violations)} violation(s)"
        return f"power consistency: {state} ({self.pairs_checked} pairs, tolerance {self.tolerance:g})"


def verify_power_consistency(
    inst: Instance,
    centers: CenterSet,
    asg: BalancedAssignment,
    weights: PowerWeights,
    tolerance: float,
) -> ConsistencyReport:
    """Check each positive-flow pair against the power-region condition.

    A pair (y, x) is violating when, in unscaled real arithmetic,
    d2(y, x) - w[x] exceeds min over x' of d2(y, x') - w[x'] by more than
    ``tolerance``.
    """
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.shape[0] != centers.k:
        raise AssignmentError("one weight per center required")
    if len(asg.persons) == 0:
        return ConsistencyReport(violations=(), tolerance=tolerance, pairs_checked=0)
    locs = inst.locations()[asg.block_indices]
    diff = locs[:, None, :] - centers.positions[None, :, :]
    power = np.einsum("ekc,ekc->ek", diff, diff) - w[None, :]
    best = power.min(axis=1)
    assigned = power[np.arange(len(asg.persons)), asg.center_indices]
    margins = assigned - best
    bad = np.flatnonzero(margins > tolerance)
    ids = inst.block_ids()
    violations = tuple(
        (ids[int(asg.block_indices[e])], int(asg.center_indices[e]), float(margins[e]))
        for e in bad
    )
    return ConsistencyReport(
        violations=violations, tolerance=tolerance, pairs_checked=int(len(asg.persons))
    )
