"""Upper-level search over mode weights.

The planner picks objective weights for the routing layer, scores the
resulting network with the equity metric, and keeps the most equitable
weight vector whose burden on compliant private-vehicle travelers (the
travel-time gap versus selfish traffic) stays within budget. The search is
an exhaustive simplex grid sweep, which for two modes is a scalar sweep of
the first mode's weight over {0, 1/(R-1), ..., 1}.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from equiflow.assignment import (
    CompliantFlows,
    NoncompliantFlows,
    TripTable,
    check_modes,
    iterate_interaction,
    loaded_edge_times,
    mode_mean_travel_times,
    trip_travel_times,
)
from equiflow.equity import ServiceCatalog, equity_report
from equiflow.errors import UndefinedGapError
from equiflow.network import Network


@dataclass(frozen=True)
class WeightCandidate:
    """A point on the mode-weight simplex: nonnegative, summing to one."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        weights = tuple(float(w) for w in self.weights)
        if not weights:
            raise ValueError("candidate needs at least one weight")
        if any(not np.isfinite(w) or w < 0 for w in weights):
            raise ValueError("weights must be finite and >= 0")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {sum(weights)!r}")
        object.__setattr__(self, "weights", weights)


@dataclass(frozen=True)
class CandidateOutcome:
    """Evaluation record for one weight vector."""

    candidate: WeightCandidate
    mem: float
    gap: float
    mode_mean_times: tuple[float, ...]
    feasible: bool


@dataclass(frozen=True)
class SweepResult:
    """Every candidate outcome in sweep order plus the selected optimum
    (None when no candidate meets the gap budget)."""

    candidates: tuple[CandidateOutcome, ...]
    selected: CandidateOutcome | None


# ---------------------------------------------------------------------------
# Travel-time gap
# ---------------------------------------------------------------------------


def _noncompliant_trip_times(times, nonflows):
    """Per-trip demand-weighted mean realized time of selfish travelers,
    evaluated on final loaded edge times; nan where a trip has none."""
    n_trips = nonflows.demand.shape[1]
    totals = np.zeros(n_trips)
    for level, row in enumerate(nonflows.paths):
        for trip, path in enumerate(row):
            if path:
                totals[trip] += nonflows.demand[level, trip] * times[list(path)].sum()
    q = nonflows.demand.sum(axis=0)
    out = np.full(n_trips, np.nan)
    moved = q > 0
    out[moved] = totals[moved] / q[moved]
    return out, q


def _private_mode_ids(modes):
    ids = [m.id for m in modes if m.private_vehicle]
    if not ids:
        raise UndefinedGapError("no private-vehicle mode configured")
    return ids


def _compliant_private_times(network, modes, flows, nonflows, trips):
    """Realized mean trip time of compliant private-vehicle travelers per
    trip, with the private demand weighting each trip. Trips without private
    compliant demand report nan."""
    priv = _private_mode_ids(modes)
    demand = trips.compliant_demand[priv].sum(axis=0)
    if not np.any(demand > 0):
        raise UndefinedGapError("no compliant private-vehicle demand")
    times = loaded_edge_times(network, flows, nonflows)
    spent = np.einsum("en,e->n", flows.x[:, priv, :].sum(axis=1), times)
    out = np.full(trips.n_trips, np.nan)
    routed = demand > 0
    out[routed] = spent[routed] / demand[routed]
    return out, demand


def private_mean_trip_time(
    network: Network,
    modes,
    flows: CompliantFlows,
    nonflows: NoncompliantFlows | None,
    trips: TripTable,
) -> float:
    """Demand-weighted mean realized trip time of compliant private-vehicle
    travelers across all trips."""
    modes = check_modes(modes)
    per_trip, demand = _compliant_private_times(network, modes, flows, nonflows, trips)
    routed = demand > 0
    return float(np.dot(per_trip[routed], demand[routed]) / demand[routed].sum())


def tt_gap(
    network: Network,
    modes,
    flows: CompliantFlows,
    nonflows: NoncompliantFlows,
    trips: TripTable,
    trip_times: np.ndarray,
) -> float:
    """Mean extra travel time compliant private-vehicle travelers carry
    relative to selfish traffic, in seconds, demand-weighted over trips.

    Per trip the selfish reference is the demand-weighted mean realized time
    over that trip's non-compliant levels. Trips with no selfish counterpart
    fall back to the network-wide demand-weighted mean selfish time; when no
    selfish demand exists anywhere, the reference is the loaded shortest-path
    time a hypothetical level-0 defector would find (trip_times row of the
    private mode).
    """
    modes = check_modes(modes)
    comp_times, comp_demand = _compliant_private_times(
        network, modes, flows, nonflows, trips
    )
    edge_times = loaded_edge_times(network, flows, nonflows)
    selfish_times, selfish_demand = _noncompliant_trip_times(edge_times, nonflows)
    total_selfish = float(selfish_demand.sum())
    network_ref = (
        float(np.nansum(selfish_times * selfish_demand) / total_selfish)
        if total_selfish > 0
        else None
    )
    private_row = _private_mode_ids(modes)[0]
    gap_sum = 0.0
    weight_sum = 0.0
    for n in np.flatnonzero(comp_demand > 0):
        if selfish_demand[n] > 0:
            reference = selfish_times[n]
        elif network_ref is not None:
            reference = network_ref
        else:
            reference = float(trip_times[private_row, n])
        gap_sum += comp_demand[n] * (comp_times[n] - reference)
        weight_sum += comp_demand[n]
    return float(gap_sum / weight_sum)


# ---------------------------------------------------------------------------
# Weight sweep
# ---------------------------------------------------------------------------


def _simplex_grid(n_modes: int, resolution: int):
    """All weight vectors with entries k/(resolution-1) summing to 1."""
    steps = resolution - 1
    points = []
    # Stars and bars: compositions of `steps` into n_modes parts.
    for cuts in combinations(range(steps + n_modes - 1), n_modes - 1):
        parts = []
        prev = -1
        for cut in cuts:
            parts.append(cut - prev - 1)
            prev = cut
        parts.append(steps + n_modes - 2 - prev)
        points.append(tuple(p / steps for p in parts))
    return points


def _evaluate_candidate(payload):
    (network, modes, trips, catalog, weights, gamma, rounds, tol, max_iters) = payload
    weighted_modes = tuple(
        replace(mode, weight=w) for mode, w in zip(modes, weights)
    )
    flows, nonflows, _ = iterate_interaction(
        network, weighted_modes, trips, tol=tol, rounds=rounds, max_iters=max_iters
    )
    times = trip_travel_times(network, flows, nonflows, trips, weighted_modes)
    report = equity_report(network, weighted_modes, trips, catalog, times)
    gap = tt_gap(network, weighted_modes, flows, nonflows, trips, times)
    means = mode_mean_travel_times(network, flows, nonflows, trips, weighted_modes)
    return CandidateOutcome(
        candidate=WeightCandidate(weights=weights),
        mem=report.mem,
        gap=gap,
        mode_mean_times=tuple(float(t) for t in means),
        feasible=bool(gap <= gamma),
    )


def optimize_weights(
    network: Network,
    modes,
    trips: TripTable,
    catalog: ServiceCatalog,
    gamma: float,
    grid_resolution: int = 21,
    rounds: int = 2,
    tol: float = 1e-4,
    max_iters: int = 500,
    jobs: int = 1,
) -> SweepResult:
    """Sweep the weight simplex and keep the most equitable feasible point.

    A candidate is feasible when its travel-time gap is at most gamma
    (gamma may be +inf for an unconstrained sweep, or 0 to demand no burden
    at all). Equal equity values are broken toward the larger weight on the
    cheapest mode; remaining ties keep the earliest candidate in sweep
    order. Candidates are independent, so jobs > 1 fans them out over
    processes; the result order and the selection are identical either way.
    """
    modes = check_modes(modes)
    if math.isnan(gamma) or gamma < 0:
        raise ValueError("gamma must be >= 0 (or +inf)")
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be >= 2")
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    # Sweep axis: the cheapest mode (lowest id on cost ties), ascending.
    axis = min(range(len(modes)), key=lambda m: (modes[m].cost_per_mile, m))
    grid = sorted(
        _simplex_grid(len(modes), grid_resolution),
        key=lambda ws: (ws[axis],) + ws,
    )
    payloads = [
        (network, modes, trips, catalog, weights, gamma, rounds, tol, max_iters)
        for weights in grid
    ]
    if jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = tuple(pool.map(_evaluate_candidate, payloads))
    else:
        outcomes = tuple(_evaluate_candidate(p) for p in payloads)
    selected = None
    for outcome in outcomes:
        if not outcome.feasible:
            continue
        if selected is None:
            selected = outcome
            continue
        better = (outcome.mem, outcome.candidate.weights[axis]) > (
            selected.mem,
            selected.candidate.weights[axis],
        )
        if better:
            selected = outcome
    return SweepResult(candidates=outcomes, selected=selected)
