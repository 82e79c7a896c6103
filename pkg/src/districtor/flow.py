"""Exact minimum-cost solver for dense bipartite transshipment instances.

Successive shortest paths with node potentials, specialized to instances
with many supply nodes and few demand nodes (blocks vs. district centers).
Flow starts from a greedy reduced-cost assignment and is repaired by
augmenting along shortest paths in a compact demand-node graph whose arc
(a, b) carries the cheapest relocation of one flow unit from demand node a
to demand node b. Relocation costs per ordered pair are kept in lazily
pruned heaps, so one augmentation costs O(k log n) instead of a scan of
all supply nodes.

All arithmetic is on Python integers or int64 arrays, so the optimality
certificate, dual feasibility plus complementary slackness, holds exactly.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

# Feasible objectives must stay clear of int64; reject instances that could
# overflow sum(flow * cost).
_SAFE_OBJECTIVE = 2**62


class FlowError(ValueError):
    """Invalid transshipment instance or solver failure."""


class InfeasibleError(FlowError):
    """Total supply and total demand disagree."""


class OverflowRiskError(FlowError):
    """Costs are too large for exact 64-bit arithmetic."""


@dataclass(frozen=True)
class TransshipmentInstance:
    """Dense bipartite min-cost flow instance.

    ``costs[y, x]`` is the integer cost of shipping one unit from supply
    node y to demand node x. Every (supply, demand) arc exists.
    """

    costs: np.ndarray  # (n, k) int64
    supplies: np.ndarray  # (n,) int64, nonnegative
    demands: np.ndarray  # (k,) int64, nonnegative

    def __post_init__(self) -> None:
        costs = np.asarray(self.costs, dtype=np.int64)
        supplies = np.asarray(self.supplies, dtype=np.int64).reshape(-1)
        demands = np.asarray(self.demands, dtype=np.int64).reshape(-1)
        if costs.ndim != 2:
            raise FlowError("costs must be a 2-d matrix")
        n, k = costs.shape
        if supplies.shape[0] != n or demands.shape[0] != k:
            raise FlowError(
                f"shape mismatch: costs {costs.shape}, supplies {supplies.shape}, "
                f"demands {demands.shape}"
            )
        if n == 0 or k == 0:
            raise FlowError("instance must have at least one supply and one demand node")
        if np.any(supplies < 0) or np.any(demands < 0):
            raise FlowError("supplies and demands must be nonnegative")
        total = int(supplies.sum())
        if total != int(demands.sum()):
            raise InfeasibleError(
                f"total supply {total} != total demand {int(demands.sum())}"
            )
        max_cost = int(np.abs(costs).max()) if costs.size else 0
        if total > 0 and max_cost > _SAFE_OBJECTIVE // max(total, 1):
            raise OverflowRiskError(
                "cost magnitudes risk 64-bit overflow on a feasible flow; "
                "lower the cost scaling"
            )
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "supplies", supplies)
        object.__setattr__(self, "demands", demands)
        for arr in (costs, supplies, demands):
            arr.setflags(write=False)

    @property
    def n_supply(self) -> int:
        return int(self.costs.shape[0])

    @property
    def n_demand(self) -> int:
        return int(self.costs.shape[1])


@dataclass(frozen=True)
class FlowSolution:
    """Integral optimal flow plus exact dual potentials.

    Entries are sorted by (supply index, demand index). For every arc,
    ``supply_potentials[y] <= costs[y, x] - demand_potentials[x]`` and the
    inequality is tight on every positive-flow arc.
    """

    supply_idx: np.ndarray  # (e,) int64
    demand_idx: np.ndarray  # (e,) int64
    amounts: np.ndarray  # (e,) int64, positive
    supply_potentials: np.ndarray  # (n,) int64
    demand_potentials: np.ndarray  # (k,) int64
    objective: int


def solve_mcf(
    inst: TransshipmentInstance,
    warm_potentials: np.ndarray | None = None,
) -> FlowSolution:
    """Solve the transshipment instance exactly.

    ``warm_potentials`` are optional starting demand potentials (any integer
    vector is valid); a good warm start cuts the number of augmentations.
    """
    solver = _Solver(inst, warm_potentials)
    solver.run()
    return solver.solution()


def certify(inst: TransshipmentInstance, sol: FlowSolution) -> None:
    """Raise FlowError unless the solution is exactly feasible and optimal.

    Checks conservation at every node, the recomputed objective, dual
    feasibility, and complementary slackness, all in integer arithmetic.
    """
    if np.any(sol.amounts <= 0):
        raise FlowError("certificate: nonpositive flow entry")
    sent = np.zeros(inst.n_supply, dtype=np.int64)
    np.add.at(sent, sol.supply_idx, sol.amounts)
    if not np.array_equal(sent, inst.supplies):
        raise FlowError("certificate: supply conservation violated")
    recv = np.zeros(inst.n_demand, dtype=np.int64)
    np.add.at(recv, sol.demand_idx, sol.amounts)
    if not np.array_equal(recv, inst.demands):
        raise FlowError("certificate: demand conservation violated")
    arc_costs = inst.costs[sol.supply_idx, sol.demand_idx]
    objective = int(np.dot(sol.amounts, arc_costs))
    if objective != sol.objective:
        raise FlowError(
            f"certificate: objective mismatch, reported {sol.objective}, "
            f"recomputed {objective}"
        )
    reduced = inst.costs - sol.demand_potentials[np.newaxis, :]
    if np.any(sol.supply_potentials[:, np.newaxis] > reduced):
        raise FlowError("certificate: dual infeasible")
    tight = reduced[sol.supply_idx, sol.demand_idx] == sol.supply_potentials[sol.supply_idx]
    if not np.all(tight):
        raise FlowError("certificate: complementary slackness violated")


class _PairQueue:
    """Min-queue of packed (increment, supply index) keys for one ordered
    demand-node pair: a sorted numpy backbone built once, plus a small
    overflow heap for entries added later. Never rewinds; items re-enter
    through the overflow heap.
    """

    __slots__ = ("static", "cursor", "extra")

    def __init__(self, static_keys: np.ndarray):
        self.static = static_keys  # sorted int64
        self.cursor = 0
        self.extra: list[int] = []

    def push(self, key: int) -> None:
        heapq.heappush(self.extra, key)

    def peek_min(self) -> int | None:
        s = self.static
        c = self.cursor
        e = self.extra
        if c < len(s):
            sk = int(s[c])
            if e and e[0] < sk:
                return e[0]
            return sk
        return e[0] if e else None

    def pop_min(self) -> int:
        s = self.static
        c = self.cursor
        e = self.extra
        if c < len(s):
            sk = int(s[c])
            if not e or sk <= e[0]:
                self.cursor = c + 1
                return sk
        return heapq.heappop(e)


class _Solver:
    """Successive shortest paths on the demand-node residual graph.

    State invariant: every positive-flow arc (y, x) minimizes
    C[y, x'] - v[x'] over x'. Augmenting only along arcs that are tight
    after repricing preserves it, so the final flow and potentials satisfy
    complementary slackness by construction.
    """

    def __init__(self, inst: TransshipmentInstance, warm_potentials: np.ndarray | None):
        self.inst = inst
        self.C = inst.costs
        n, k = self.C.shape
        self.n = n
        self.k = k
        if warm_potentials is None:
            v0 = np.zeros(k, dtype=np.int64)
        else:
            v0 = np.asarray(warm_potentials, dtype=np.int64).reshape(-1)
            if v0.shape[0] != k:
                raise FlowError("warm potentials must have one entry per demand node")
            if v0.size and int(np.abs(v0).max()) > 2**61:
                raise OverflowRiskError("warm potentials too large for exact arithmetic")
        self.v: list[int] = [int(x) for x in v0]

        # Pack heap entries as increment * _pack + supply index so plain int
        # heaps order by (increment, index). Keys must fit int64 during the
        # vectorized build.
        self._pack = 1 << max(20, n.bit_length() + 1)
        max_cost = int(np.abs(self.C).max()) if self.C.size else 0
        if 2 * max_cost > (2**62) // self._pack:
            raise OverflowRiskError(
                "cost magnitudes too large for the relocation index; "
                "lower the cost scaling"
            )

        supplies = inst.supplies
        active = np.flatnonzero(supplies > 0)
        base_np = np.full(n, -1, dtype=np.int64)
        if active.size:
            choice = np.argmin(self.C[active] - v0[np.newaxis, :], axis=1)
            base_np[active] = choice
        received_np = np.zeros(k, dtype=np.int64)
        if active.size:
            np.add.at(received_np, base_np[active], supplies[active])

        # base[y]: the single center holding block y's whole flow, or -1 when
        # y is inactive or split across centers (then see self.split).
        self.base: list[int] = base_np.tolist()
        self.base_amt: list[int] = np.where(base_np >= 0, supplies, 0).tolist()
        self.split: dict[int, dict[int, int]] = {}
        self.received: list[int] = received_np.tolist()

        # queues[a][b]: packed (C[y, b] - C[y, a], y) entries over members y
        # of a. Entries for departed members are pruned lazily on peek.
        empty = np.empty(0, dtype=np.int64)
        pack = self._pack
        self.queues: list[list[_PairQueue]] = []
        for a in range(k):
            ids = np.flatnonzero(base_np == a)
            row: list[_PairQueue] = []
            if ids.size:
                Ca = self.C[ids]
                own = Ca[:, a]
            for b in range(k):
                if b == a or ids.size == 0:
                    row.append(_PairQueue(empty))
                    continue
                keys = (Ca[:, b] - own) * pack + ids
                keys.sort()
                row.append(_PairQueue(keys))
            self.queues.append(row)

    # -- flow bookkeeping -------------------------------------------------

    def flow_at(self, y: int, x: int) -> int:
        if self.base[y] == x:
            return self.base_amt[y]
        flows = self.split.get(y)
        return flows.get(x, 0) if flows else 0

    def _remove_flow(self, y: int, x: int, q: int) -> None:
        if self.base[y] == x:
            rem = self.base_amt[y] - q
            if rem < 0:
                raise FlowError("internal: negative flow")
            if rem == 0:
                self.base[y] = -1
            self.base_amt[y] = rem
            return
        flows = self.split[y]
        rem = flows[x] - q
        if rem < 0:
            raise FlowError("internal: negative flow")
        if rem == 0:
            del flows[x]
            if len(flows) == 1:
                ((only_x, amt),) = flows.items()
                del self.split[y]
                self.base[y] = only_x
                self.base_amt[y] = amt
        else:
            flows[x] = rem

    def _add_flow(self, y: int, x: int, q: int) -> bool:
        """Add q units of y at x; True when y is a new member of x."""
        if self.base[y] == x:
            self.base_amt[y] += q
            return False
        flows = self.split.get(y)
        if flows is None:
            if self.base[y] == -1:
                self.base[y] = x
                self.base_amt[y] = q
                return True
            # y spans several centers now: demote its base flow into the map
            bx = self.base[y]
            flows = {bx: self.base_amt[y]}
            self.split[y] = flows
            self.base[y] = -1
            self.base_amt[y] = 0
        if x in flows:
            flows[x] += q
            return False
        flows[x] = q
        return True

    def _enroll(self, y: int, x: int) -> None:
        """Insert queue entries for new member y of center x."""
        row = self.C[y]
        own = int(row[x])
        pack = self._pack
        qx = self.queues[x]
        for b in range(self.k):
            if b != x:
                qx[b].push((int(row[b]) - own) * pack + y)

    def _move(self, y: int, a: int, b: int, q: int) -> None:
        self._remove_flow(y, a, q)
        if self._add_flow(y, b, q):
            self._enroll(y, b)
        self.received[a] -= q
        self.received[b] += q

    def _peek(self, a: int, b: int) -> int | None:
        """Cheapest relocation increment from a to b, pruning stale entries."""
        queue = self.queues[a][b]
        pack = self._pack
        while True:
            key = queue.peek_min()
            if key is None:
                return None
            y = key % pack
            if self.flow_at(y, a) > 0:
                return (key - y) // pack
            queue.pop_min()

    # -- shortest paths on the demand-node graph --------------------------

    def _dijkstra_reprice(self) -> None:
        """Reprice potentials so a tight path reaches some deficit node."""
        k = self.k
        v = self.v
        demands = self.inst.demands
        dist: list[int | None] = [None] * k
        heap: list[tuple[int, int]] = []
        for x in range(k):
            if self.received[x] > demands[x]:
                dist[x] = 0
                heapq.heappush(heap, (0, x))
        done = [False] * k
        target = -1
        target_dist = 0
        while heap:
            d, a = heapq.heappop(heap)
            if done[a]:
                continue
            done[a] = True
            if self.received[a] < demands[a]:
                target = a
                target_dist = d
                break
            va = v[a]
            for b in range(k):
                if done[b] or b == a:
                    continue
                raw = self._peek(a, b)
                if raw is None:
                    continue
                nd = d + raw + va - v[b]
                if dist[b] is None or nd < dist[b]:
                    dist[b] = nd
                    heapq.heappush(heap, (nd, b))
        if target < 0:
            raise FlowError("internal: no augmenting path; instance not repairable")
        self.v = [
            va + (target_dist if d is None else min(d, target_dist))
            for va, d in zip(v, dist)
        ]

    def _find_tight_path(self) -> list[int] | None:
        """BFS a path of tight arcs from any excess node to any deficit node."""
        k = self.k
        v = self.v
        demands = self.inst.demands
        parent = [-2] * k  # -2 unvisited, -1 source
        queue: list[int] = []
        for x in range(k):
            if self.received[x] > demands[x]:
                parent[x] = -1
                queue.append(x)
        qi = 0
        while qi < len(queue):
            a = queue[qi]
            qi += 1
            if self.received[a] < demands[a]:
                path = [a]
                while parent[path[-1]] != -1:
                    path.append(parent[path[-1]])
                path.reverse()
                return path
            va = v[a]
            for b in range(k):
                if parent[b] != -2 or b == a:
                    continue
                raw = self._peek(a, b)
                if raw is not None and raw + va - v[b] == 0:
                    parent[b] = a
                    queue.append(b)
        return None

    def _hop_capacity(self, a: int, b: int, bound: int) -> int:
        """Total flow on tight (a -> b) relocations, counted up to bound.

        A member can appear several times in the heap after leaving and
        re-arriving; duplicates are counted once and dropped.
        """
        target = self.v[b] - self.v[a]
        queue = self.queues[a][b]
        pack = self._pack
        popped: list[int] = []
        seen: set[int] = set()
        cap = 0
        while cap < bound:
            key = queue.peek_min()
            if key is None:
                break
            y = key % pack
            if self.flow_at(y, a) == 0:
                queue.pop_min()
                continue
            if y in seen:  # redundant duplicate entry
                queue.pop_min()
                continue
            if (key - y) // pack != target:
                break
            popped.append(queue.pop_min())
            seen.add(y)
            cap += self.flow_at(y, a)
        for key in popped:
            queue.push(key)
        return cap

    def _push(self, path: list[int]) -> None:
        demands = self.inst.demands
        theta = min(
            self.received[path[0]] - int(demands[path[0]]),
            int(demands[path[-1]]) - self.received[path[-1]],
        )
        for a, b in zip(path, path[1:]):
            theta = min(theta, self._hop_capacity(a, b, theta))
        if theta <= 0:
            raise FlowError("internal: empty push")
        pack = self._pack
        for a, b in zip(path, path[1:]):
            target = self.v[b] - self.v[a]
            queue = self.queues[a][b]
            need = theta
            while need > 0:
                key = queue.peek_min()
                if key is None:
                    raise FlowError("internal: hop capacity vanished")
                y = key % pack
                amt = self.flow_at(y, a)
                if amt == 0:
                    queue.pop_min()
                    continue
                if (key - y) // pack != target:
                    raise FlowError("internal: tight arc lost its witness")
                q = min(amt, need)
                queue.pop_min()
                self._move(y, a, b, q)
                need -= q
                if q < amt:  # y keeps flow at a
                    queue.push(key)

    # -- main loop ---------------------------------------------------------

    def run(self) -> None:
        demands = self.inst.demands
        excess0 = sum(
            max(r - int(d), 0) for r, d in zip(self.received, demands)
        )
        guard = excess0 + self.k + 8
        while True:
            while True:
                path = self._find_tight_path()
                if path is None:
                    break
                self._push(path)
            if all(r == int(d) for r, d in zip(self.received, demands)):
                return
            guard -= 1
            if guard < 0:
                raise FlowError("internal: augmentation guard exceeded")
            self._dijkstra_reprice()

    def solution(self) -> FlowSolution:
        ys: list[int] = []
        xs: list[int] = []
        amts: list[int] = []
        for y, bx in enumerate(self.base):
            if bx >= 0:
                ys.append(y)
                xs.append(bx)
                amts.append(self.base_amt[y])
        for y, flows in self.split.items():
            for x, amt in flows.items():
                ys.append(y)
                xs.append(x)
                amts.append(amt)
        supply_idx = np.array(ys, dtype=np.int64)
        demand_idx = np.array(xs, dtype=np.int64)
        amounts = np.array(amts, dtype=np.int64)
        order = np.lexsort((demand_idx, supply_idx))
        supply_idx = supply_idx[order]
        demand_idx = demand_idx[order]
        amounts = amounts[order]

        # Normalize potentials so min(v) = 0; shifting all demand potentials
        # by a constant preserves feasibility and slackness.
        vmin = min(self.v)
        v = np.array([x - vmin for x in self.v], dtype=np.int64)
        z = (self.C - v[np.newaxis, :]).min(axis=1)
        objective = int(np.dot(amounts, self.C[supply_idx, demand_idx]))
        return FlowSolution(
            supply_idx=supply_idx,
            demand_idx=demand_idx,
            amounts=amounts,
            supply_potentials=z,
            demand_potentials=v,
            objective=objective,
        )
