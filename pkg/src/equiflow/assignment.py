"""Flow assignment: weighted system-optimal routing of compliant demand and
level-k selfish routing of non-compliant demand.

The compliant problem minimizes sum over edges of t(load) * (weighted
passenger flow), where each mode contributes occupancy-scaled vehicles to
the load but mode-weighted passengers to the objective. It is solved with
Frank-Wolfe: each iteration routes all demand onto current-gradient
shortest paths and takes an exact line-search step toward a point of the
feasible set. The target point blends the fresh all-or-nothing corner with
the previous target (conjugate-direction acceleration), which removes the
zig-zag tail of the plain method without giving up its guarantees: every
target is feasible, every step is an exact line search, and the duality
gap is still measured against the true all-or-nothing corner.

Non-compliant travelers ignore the planner. They are modeled in cognition
levels 0..2: level 0 best-responds to compliant flow alone, level k to
compliant flow plus all levels below k. Each (level, trip) demand moves as
one block down a single shortest path.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from equiflow.errors import DegenerateObjectiveError, InfeasibleTripError
from equiflow.network import (
    BPR_COEFFICIENT,
    BPR_EXPONENT,
    Network,
    _vector_curvs,
    _vector_derivs,
    _vector_times,
    dijkstra_from,
    dijkstra_to,
    shortest_path,
)

# Cognition levels for non-compliant routing. Level k best-responds to
# everything below k; deeper reasoning is out of scope.
N_LEVELS = 3


@dataclass(frozen=True)
class ModeSpec:
    """One travel mode.

    id            position of the mode in every per-mode array
    name          label used in scenario files and reports
    cost_per_mile monetary cost seen by the equity metric
    occupancy     road-space units one passenger of this mode adds to an edge
    time_threshold  reachability budget (s) for accessibility counting
    weight        planner's objective weight for this mode's passengers
    private_vehicle  True for the mode whose travelers may defect and route
                     selfishly
    """

    id: int
    name: str
    cost_per_mile: float
    occupancy: float
    time_threshold: float
    weight: float
    private_vehicle: bool = False

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"mode {self.name}: id must be >= 0")
        if not self.name:
            raise ValueError("mode name must be non-empty")
        if not self.cost_per_mile >= 0:
            raise ValueError(f"mode {self.name}: cost_per_mile must be >= 0")
        if not self.occupancy > 0:
            raise ValueError(f"mode {self.name}: occupancy must be > 0")
        if not self.time_threshold > 0:
            raise ValueError(f"mode {self.name}: time_threshold must be > 0")
        if not np.isfinite(self.weight) or self.weight < 0:
            raise ValueError(f"mode {self.name}: weight must be finite and >= 0")


def check_modes(modes) -> tuple[ModeSpec, ...]:
    """Validate a mode list: non-empty, ids equal to positions, unique names."""
    modes = tuple(modes)
    if not modes:
        raise ValueError("at least one mode is required")
    names = set()
    for pos, mode in enumerate(modes):
        if mode.id != pos:
            raise ValueError(f"modes[{pos}] has id {mode.id}; ids must match positions")
        if mode.name in names:
            raise ValueError(f"duplicate mode name {mode.name!r}")
        names.add(mode.name)
    return modes


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class TripTable:
    """Origin-destination demand, compliant per mode and non-compliant per
    cognition level.

    compliant_demand has shape (n_modes, n_trips), noncompliant_demand has
    shape (N_LEVELS, n_trips); both are passengers per hour.
    """

    trips: tuple[tuple[int, int], ...]
    compliant_demand: np.ndarray
    noncompliant_demand: np.ndarray

    def __post_init__(self) -> None:
        trips = tuple((int(o), int(d)) for o, d in self.trips)
        for n, (o, d) in enumerate(trips):
            if o == d:
                raise ValueError(f"trips[{n}]: origin equals destination ({o})")
        object.__setattr__(self, "trips", trips)
        comp = np.array(self.compliant_demand, dtype=float)
        nonc = np.array(self.noncompliant_demand, dtype=float)
        if comp.ndim != 2 or comp.shape[1] != len(trips):
            raise ValueError(
                f"compliant_demand has shape {comp.shape}, expected (n_modes, {len(trips)})"
            )
        if nonc.shape != (N_LEVELS, len(trips)):
            raise ValueError(
                f"noncompliant_demand has shape {nonc.shape}, "
                f"expected ({N_LEVELS}, {len(trips)})"
            )
        for name, arr in (("compliant_demand", comp), ("noncompliant_demand", nonc)):
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValueError(f"{name} entries must be finite and >= 0")
        comp.flags.writeable = False
        nonc.flags.writeable = False
        object.__setattr__(self, "compliant_demand", comp)
        object.__setattr__(self, "noncompliant_demand", nonc)

    @property
    def n_trips(self) -> int:
        return len(self.trips)

    def check_against(self, network: Network) -> None:
        """Every trip endpoint must be a node of the network."""
        n = network.n_nodes
        for idx, (o, d) in enumerate(self.trips):
            if not (0 <= o < n and 0 <= d < n):
                raise ValueError(f"trips[{idx}] references a missing node ({o} -> {d})")


@dataclass(frozen=True, eq=False)
class CompliantFlows:
    """Planner-routed flows per (edge, mode, trip), plus the mode occupancies
    they were produced under. The road load each edge carries is derived,
    never stored, so it cannot drift out of sync with the disaggregate flows."""

    x: np.ndarray            # (n_edges, n_modes, n_trips) passenger flow
    occupancies: np.ndarray  # (n_modes,)

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=float)
        occ = np.array(self.occupancies, dtype=float)
        if x.ndim != 3:
            raise ValueError(f"x must be 3-d (edge, mode, trip); got shape {x.shape}")
        if occ.shape != (x.shape[1],):
            raise ValueError("occupancies must hold one entry per mode")
        if not np.all(np.isfinite(x)) or np.any(x < 0):
            raise ValueError("flows must be finite and >= 0")
        if np.any(occ <= 0):
            raise ValueError("occupancies must be > 0")
        x.flags.writeable = False
        occ.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "occupancies", occ)

    @cached_property
    def aggregate(self) -> np.ndarray:
        """Occupancy-weighted road load per edge."""
        agg = np.einsum("emn,m->e", self.x, self.occupancies)
        agg.flags.writeable = False
        return agg

    def conservation_violation(self, network: Network, trips: TripTable) -> float:
        """Largest absolute node-balance error across (mode, trip) commodities,
        normalized by that commodity's demand (absolute where demand is 0)."""
        tails = np.fromiter((e.tail for e in network.edges), dtype=int)
        heads = np.fromiter((e.head for e in network.edges), dtype=int)
        worst = 0.0
        n_modes = self.x.shape[1]
        for m in range(n_modes):
            for n, (o, d) in enumerate(trips.trips):
                flow = self.x[:, m, n]
                balance = np.zeros(network.n_nodes)
                np.add.at(balance, tails, flow)
                np.add.at(balance, heads, -flow)
                demand = trips.compliant_demand[m, n]
                balance[o] -= demand
                balance[d] += demand
                err = float(np.max(np.abs(balance)))
                worst = max(worst, err / max(demand, 1.0))
        return worst


@dataclass(frozen=True, eq=False)
class NoncompliantFlows:
    """Selfish flows: one path (or None) per (level, trip), with the demand
    that was routed down each path."""

    n_edges: int
    demand: np.ndarray  # (N_LEVELS, n_trips)
    paths: tuple[tuple[tuple[int, ...] | None, ...], ...]

    def __post_init__(self) -> None:
        demand = np.array(self.demand, dtype=float)
        if demand.ndim != 2 or demand.shape[0] != N_LEVELS:
            raise ValueError(
                f"demand has shape {demand.shape}, expected ({N_LEVELS}, n_trips)"
            )
        if not np.all(np.isfinite(demand)) or np.any(demand < 0):
            raise ValueError("demand entries must be finite and >= 0")
        demand.flags.writeable = False
        paths = tuple(
            tuple(None if p is None else tuple(int(e) for e in p) for p in level)
            for level in self.paths
        )
        if len(paths) != N_LEVELS or any(len(level) != demand.shape[1] for level in paths):
            raise ValueError("paths must hold one entry per (level, trip)")
        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "paths", paths)

    @classmethod
    def empty(cls, n_edges: int, n_trips: int) -> "NoncompliantFlows":
        return cls(
            n_edges=n_edges,
            demand=np.zeros((N_LEVELS, n_trips)),
            paths=tuple(tuple(None for _ in range(n_trips)) for _ in range(N_LEVELS)),
        )

    def indicator(self, level: int, trip: int) -> np.ndarray:
        """0/1 edge vector of the path assigned to (level, trip)."""
        ind = np.zeros(self.n_edges)
        path = self.paths[level][trip]
        if path is not None:
            ind[list(path)] = 1.0
        return ind

    @cached_property
    def per_level(self) -> np.ndarray:
        """Selfish road load per (level, edge)."""
        out = np.zeros((N_LEVELS, self.n_edges))
        for level, row in enumerate(self.paths):
            for trip, path in enumerate(row):
                if path:
                    out[level, list(path)] += self.demand[level, trip]
        out.flags.writeable = False
        return out

    @cached_property
    def aggregate(self) -> np.ndarray:
        agg = self.per_level.sum(axis=0)
        agg.flags.writeable = False
        return agg


@dataclass(frozen=True)
class SolveReport:
    """Frank-Wolfe diagnostics: objective after each iterate, relative gap at
    each iteration, and whether the gap target was met."""

    objective_trace: tuple[float, ...]
    gap_trace: tuple[float, ...]
    iterations: int
    converged: bool


# ---------------------------------------------------------------------------
# Objective and helpers
# ---------------------------------------------------------------------------


def _check_background(network: Network, background) -> np.ndarray:
    if background is None:
        return np.zeros(network.n_edges)
    bg = np.asarray(background, dtype=float)
    if bg.shape != (network.n_edges,):
        raise ValueError(
            f"background has shape {bg.shape}, expected ({network.n_edges},)"
        )
    if not np.all(np.isfinite(bg)) or np.any(bg < 0):
        raise ValueError("background loads must be finite and >= 0")
    return bg


def system_objective(network: Network, modes, flows: CompliantFlows, background=None) -> float:
    """Weighted total travel time: sum over edges of t(load) times the
    mode-weight-scaled passenger flow on that edge."""
    modes = check_modes(modes)
    if flows.x.shape[0] != network.n_edges or flows.x.shape[1] != len(modes):
        raise ValueError(
            f"flows shaped {flows.x.shape} do not match "
            f"({network.n_edges} edges, {len(modes)} modes)"
        )
    bg = _check_background(network, background)
    weights = np.array([m.weight for m in modes])
    load = flows.aggregate + bg
    times = _vector_times(
        network.free_flow_times, network.capacities, load, BPR_COEFFICIENT, BPR_EXPONENT
    )
    weighted_flow = np.einsum("emn,m->e", flows.x, weights)
    return float(np.dot(times, weighted_flow))


def _all_or_nothing(network, mode_costs, trips, demand):
    """Route each positive (mode, trip) demand down one shortest path under
    that mode's cost vector. Returns the (edge, mode, trip) flow tensor."""
    n_modes, n_trips = demand.shape
    y = np.zeros((network.n_edges, n_modes, n_trips))
    for m in range(n_modes):
        active = np.flatnonzero(demand[m] > 0)
        if active.size == 0:
            continue
        costs = mode_costs[m]
        dist_to: dict[int, np.ndarray] = {}
        for n in active:
            o, d = trips.trips[n]
            if d not in dist_to:
                dist_to[d] = dijkstra_to(network, costs, d)
            found = shortest_path(network, costs, o, d, dist_to=dist_to[d])
            if found is None:
                raise InfeasibleTripError(
                    f"trip {n} ({o} -> {d}): destination unreachable"
                )
            path, _ = found
            y[path, m, n] = demand[m, n]
    return y


# ---------------------------------------------------------------------------
# Compliant assignment (Frank-Wolfe)
# ---------------------------------------------------------------------------


def _exact_step(t0, cap, load0, d_load, wflow0, d_wflow):
    """Exact line search on s in [0, 1] along the Frank-Wolfe segment.

    phi(s) is the objective at load0 + s*d_load with weighted flow
    wflow0 + s*d_wflow; its derivative is bisected to an interval of 1e-10.
    """

    def dphi(s):
        load = np.maximum(load0 + s * d_load, 0.0)
        wflow = wflow0 + s * d_wflow
        times = _vector_times(t0, cap, load, BPR_COEFFICIENT, BPR_EXPONENT)
        derivs = _vector_derivs(t0, cap, load, BPR_COEFFICIENT, BPR_EXPONENT)
        return float(np.dot(derivs * d_load, wflow) + np.dot(times, d_wflow))

    if dphi(0.0) >= 0.0:
        return 0.0
    if dphi(1.0) <= 0.0:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if dphi(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _quad_form(derivs, curv_wflow, xu, su, xv, sv):
    """Second-order pairing of two direction aggregates. xu/su and xv/sv are
    the road-load and weighted-flow deltas of the two directions."""
    return float(np.dot(derivs, su * xv + xu * sv) + np.dot(curv_wflow, xu * xv))


# Minimum share of the fresh all-or-nothing corner kept in every blended
# target; the convergence argument leans on this share staying positive.
_MIN_CORNER_SHARE = 1e-3


def _conjugate_targets(derivs, curv_wflow, deltas, sights, y):
    """Candidate line-search targets blending the fresh corner with up to two
    previous targets, best first.

    Each previous target contributes a direction (target - current point);
    blend weights are chosen so the new direction is second-order-conjugate
    to those, which kills the zig-zag of the plain method. deltas holds the
    (road-load, weighted-flow) delta pair for y, then for each sight.
    """
    (yl, yw), (x1l, x1w) = deltas[0], deltas[1]
    h11 = _quad_form(derivs, curv_wflow, x1l, x1w, x1l, x1w)
    hv1 = _quad_form(derivs, curv_wflow, yl, yw, x1l, x1w)
    out = []
    if len(sights) == 2:
        x2l, x2w = deltas[2]
        h21 = _quad_form(derivs, curv_wflow, x2l, x2w, x1l, x1w)
        h22 = _quad_form(derivs, curv_wflow, x2l, x2w, x2l, x2w)
        hv2 = _quad_form(derivs, curv_wflow, yl, yw, x2l, x2w)
        system = np.array([
            [h21, h11, hv1],
            [h22, h21, hv2],
            [1.0, 1.0, 1.0],
        ])
        try:
            a, b, c = np.linalg.solve(system, np.array([0.0, 0.0, 1.0]))
        except np.linalg.LinAlgError:
            a = np.nan
        if (
            np.isfinite(a) and np.isfinite(b) and np.isfinite(c)
            and a >= 0.0 and b >= 0.0 and c >= _MIN_CORNER_SHARE
        ):
            out.append(a * sights[1] + b * sights[0] + c * y)
    denom = hv1 - h11
    if denom != 0.0 and np.isfinite(denom):
        alpha = hv1 / denom
        if np.isfinite(alpha) and alpha > 0.0:
            alpha = min(alpha, 1.0 - _MIN_CORNER_SHARE)
            out.append(alpha * sights[0] + (1.0 - alpha) * y)
    return out


def solve_system_routing(
    network: Network,
    modes,
    trips: TripTable,
    background=None,
    tol: float = 1e-4,
    max_iters: int = 500,
) -> tuple[CompliantFlows, SolveReport]:
    """Frank-Wolfe solve of the weighted system-routing problem, with
    conjugate-direction acceleration.

    background is a fixed per-edge road load (e.g. selfish traffic) that
    congests edges but is not routed. Convergence is declared when the
    relative gap (objective minus its linearized lower bound, over the
    objective) drops to tol. The returned trace is non-increasing; each
    accepted step is verified to not raise the objective.
    """
    modes = check_modes(modes)
    trips.check_against(network)
    if trips.compliant_demand.shape[0] != len(modes):
        raise ValueError(
            f"compliant_demand has {trips.compliant_demand.shape[0]} mode rows, "
            f"expected {len(modes)}"
        )
    if not tol > 0:
        raise ValueError("tol must be > 0")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    weights = np.array([m.weight for m in modes])
    occup = np.array([m.occupancy for m in modes])
    if not np.any(weights > 0):
        raise DegenerateObjectiveError("all mode weights are zero")
    bg = _check_background(network, background)
    demand = trips.compliant_demand
    t0 = network.free_flow_times
    cap = network.capacities

    def road_load(x):
        return np.einsum("emn,m->e", x, occup) + bg

    def weighted_flow(x):
        return np.einsum("emn,m->e", x, weights)

    def objective(load, wflow):
        times = _vector_times(t0, cap, load, BPR_COEFFICIENT, BPR_EXPONENT)
        return float(np.dot(times, wflow))

    # Feasible start: all-or-nothing under background-only travel times.
    start_times = _vector_times(t0, cap, bg, BPR_COEFFICIENT, BPR_EXPONENT)
    x = _all_or_nothing(network, [start_times] * len(modes), trips, demand)

    load = road_load(x)
    wflow = weighted_flow(x)
    trace = [objective(load, wflow)]
    gaps: list[float] = []
    iterations = 0
    converged = False
    sights: list[np.ndarray] = []  # up to two previous targets, newest first
    for _ in range(max_iters):
        times = _vector_times(t0, cap, load, BPR_COEFFICIENT, BPR_EXPONENT)
        derivs = _vector_derivs(t0, cap, load, BPR_COEFFICIENT, BPR_EXPONENT)
        # dF/dx[e, m] = w_m t_e(load) + h_m t'_e(load) * weighted flow on e
        grad = weights[None, :] * times[:, None] + (
            occup[None, :] * derivs[:, None]
        ) * wflow[:, None]
        y = _all_or_nothing(network, grad.T, trips, demand)
        gap_value = float(np.sum(grad * (x.sum(axis=2) - y.sum(axis=2))))
        gap = gap_value / max(abs(trace[-1]), 1e-30)
        gaps.append(gap)
        if gap <= tol:
            converged = True
            break
        target = y
        if sights:
            curv_wflow = (
                _vector_curvs(t0, cap, load, BPR_COEFFICIENT, BPR_EXPONENT) * wflow
            )
            deltas = [
                (road_load(p) - load, weighted_flow(p) - wflow)
                for p in (y, *sights)
            ]
            for blend in _conjugate_targets(derivs, curv_wflow, deltas, sights, y):
                d_load = road_load(blend) - load
                d_wflow = weighted_flow(blend) - wflow
                # conjugacy does not guarantee descent; keep a blend only
                # if it points downhill
                if np.dot(derivs * d_load, wflow) + np.dot(times, d_wflow) < 0:
                    target = blend
                    break
        step = _exact_step(
            t0, cap, load, road_load(target) - load,
            wflow, weighted_flow(target) - wflow,
        )
        # Guard the descent: the derivative bisection can land on a
        # stationary point that is not a minimizer, so back off until the
        # recomputed objective does not increase.
        accepted = False
        while step > 1e-16:
            x_next = x * (1.0 - step) + target * step
            load_next = road_load(x_next)
            wflow_next = weighted_flow(x_next)
            f_next = objective(load_next, wflow_next)
            if f_next <= trace[-1]:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break  # numerically stalled; report the gap we got stuck at
        x, load, wflow = x_next, load_next, wflow_next
        sights = [target, *sights][:2]
        trace.append(f_next)
        iterations += 1
    return (
        CompliantFlows(x=x, occupancies=occup),
        SolveReport(
            objective_trace=tuple(trace),
            gap_trace=tuple(gaps),
            iterations=iterations,
            converged=converged,
        ),
    )


# ---------------------------------------------------------------------------
# Non-compliant assignment (cognition levels)
# ---------------------------------------------------------------------------


def solve_noncompliant(
    network: Network,
    trips: TripTable,
    compliant_aggregate,
    levels=None,
) -> NoncompliantFlows:
    """Route non-compliant demand level by level.

    Level 0 sees travel times from the compliant road load alone; level k
    sees compliant load plus the selfish load of all levels below k. Each
    (level, trip) demand takes a single shortest path, whole.
    """
    trips.check_against(network)
    agg = np.asarray(compliant_aggregate, dtype=float)
    if agg.shape != (network.n_edges,):
        raise ValueError(
            f"compliant_aggregate has shape {agg.shape}, expected ({network.n_edges},)"
        )
    if not np.all(np.isfinite(agg)) or np.any(agg < 0):
        raise ValueError("compliant_aggregate must be finite and >= 0")
    if levels is None:
        levels = range(N_LEVELS)
    selected = sorted(set(int(l) for l in levels))
    if any(l < 0 or l >= N_LEVELS for l in selected):
        raise ValueError(f"levels must be within 0..{N_LEVELS - 1}")

    demand = np.zeros((N_LEVELS, trips.n_trips))
    paths: list[list[tuple[int, ...] | None]] = [
        [None] * trips.n_trips for _ in range(N_LEVELS)
    ]
    load = agg.copy()
    t0 = network.free_flow_times
    cap = network.capacities
    for level in selected:
        costs = _vector_times(t0, cap, load, BPR_COEFFICIENT, BPR_EXPONENT)
        dist_to: dict[int, np.ndarray] = {}
        level_load = np.zeros(network.n_edges)
        for n in np.flatnonzero(trips.noncompliant_demand[level] > 0):
            o, d = trips.trips[n]
            if d not in dist_to:
                dist_to[d] = dijkstra_to(network, costs, d)
            found = shortest_path(network, costs, o, d, dist_to=dist_to[d])
            if found is None:
                raise InfeasibleTripError(
                    f"trip {n} ({o} -> {d}): unreachable for non-compliant level {level}"
                )
            path, _ = found
            q = trips.noncompliant_demand[level, n]
            paths[level][n] = tuple(path)
            demand[level, n] = q
            level_load[path] += q
        load = load + level_load
    return NoncompliantFlows(
        n_edges=network.n_edges,
        demand=demand,
        paths=tuple(tuple(row) for row in paths),
    )


# ---------------------------------------------------------------------------
# Interaction rounds and travel-time readouts
# ---------------------------------------------------------------------------


def iterate_interaction(
    network: Network,
    modes,
    trips: TripTable,
    tol: float = 1e-4,
    rounds: int = 2,
    max_iters: int = 500,
) -> tuple[CompliantFlows, NoncompliantFlows, list[SolveReport]]:
    """Alternate the two assignment problems so each side reacts to the other.

    Round 1 routes compliant demand against an empty network, then routes
    non-compliant demand against the result. Every later round re-solves the
    compliant problem with the previous selfish load as fixed background and
    lets the selfish travelers respond again.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    background = None
    reports: list[SolveReport] = []
    flows: CompliantFlows
    nonflows: NoncompliantFlows
    for _ in range(rounds):
        flows, report = solve_system_routing(
            network, modes, trips, background=background, tol=tol, max_iters=max_iters
        )
        nonflows = solve_noncompliant(network, trips, flows.aggregate)
        background = nonflows.aggregate
        reports.append(report)
    return flows, nonflows, reports


def loaded_edge_times(
    network: Network,
    flows: CompliantFlows,
    nonflows: NoncompliantFlows | None = None,
) -> np.ndarray:
    """Travel time per edge under compliant plus selfish road load."""
    load = flows.aggregate
    if nonflows is not None:
        load = load + nonflows.aggregate
    return _vector_times(
        network.free_flow_times, network.capacities, load, BPR_COEFFICIENT, BPR_EXPONENT
    )


def trip_travel_times(
    network: Network,
    flows: CompliantFlows,
    nonflows: NoncompliantFlows | None,
    trips: TripTable,
    modes,
) -> np.ndarray:
    """Shortest-path travel time per (mode, trip) in the loaded network.

    All modes share the same roads, so rows only differ when trips are
    unreachable for nobody; the per-mode shape is kept for downstream
    accessibility scoring, which reads one row per mode. Unreachable trips
    report +inf rather than raising.
    """
    modes = check_modes(modes)
    trips.check_against(network)
    costs = loaded_edge_times(network, flows, nonflows)
    times = np.full((len(modes), trips.n_trips), np.inf)
    dist_from: dict[int, np.ndarray] = {}
    for n, (o, d) in enumerate(trips.trips):
        if o not in dist_from:
            dist_from[o] = dijkstra_from(network, costs, o)
        times[:, n] = dist_from[o][d]
    return times


def mode_mean_travel_times(
    network: Network,
    flows: CompliantFlows,
    nonflows: NoncompliantFlows | None,
    trips: TripTable,
    modes,
) -> np.ndarray:
    """Demand-weighted mean realized trip time per mode for compliant
    passengers (time actually spent on assigned routes, not the best
    available path). Modes with no demand report nan."""
    modes = check_modes(modes)
    times = loaded_edge_times(network, flows, nonflows)
    total_time = np.einsum("e,emn->m", times, flows.x)
    total_demand = trips.compliant_demand.sum(axis=1)
    out = np.full(len(modes), np.nan)
    routed = total_demand > 0
    out[routed] = total_time[routed] / total_demand[routed]
    return out
