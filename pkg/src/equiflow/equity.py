"""Accessibility counting, per-origin mobility index, and the population
weighted equity metric built on them.

The mobility index of an origin blends, over modes, how many priority
weighted services its residents can reach within each mode's time budget,
discounted by how much that mode's price stings at that origin. The equity
metric is one minus a population-weighted mean-absolute-difference ratio of
those indices: 1 means every origin enjoys the same mobility, values near 0
mean mobility is concentrated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from equiflow.assignment import ModeSpec, TripTable, check_modes
from equiflow.errors import UndefinedMetricError
from equiflow.network import Network, NodeAttr

# Default service priorities, overridable per service type in scenario files.
ESSENTIAL_PRIORITY = 2.0
NONESSENTIAL_PRIORITY = 1.0


@dataclass(frozen=True)
class ServiceType:
    """A category of destination service (groceries, clinics, ...)."""

    id: str
    priority: float
    essential: bool = False

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("service type id must be non-empty")
        if not np.isfinite(self.priority) or self.priority < 0:
            raise ValueError(f"service type {self.id}: priority must be finite and >= 0")


@dataclass(frozen=True, eq=False)
class ServiceCatalog:
    """Service types plus how many of each a node hosts."""

    service_types: tuple[ServiceType, ...]
    counts: dict[tuple[int, str], int]

    def __post_init__(self) -> None:
        types = tuple(self.service_types)
        seen = set()
        for st in types:
            if st.id in seen:
                raise ValueError(f"duplicate service type {st.id!r}")
            seen.add(st.id)
        counts = {}
        for key, value in dict(self.counts).items():
            node, type_id = key
            if type_id not in seen:
                raise ValueError(f"count for unknown service type {type_id!r}")
            count = int(value)
            if count < 0:
                raise ValueError(f"count for ({node}, {type_id}) must be >= 0")
            counts[(int(node), type_id)] = count
        object.__setattr__(self, "service_types", types)
        object.__setattr__(self, "counts", counts)

    @property
    def type_ids(self) -> tuple[str, ...]:
        return tuple(st.id for st in self.service_types)

    def has_type(self, type_id: str) -> bool:
        return any(st.id == type_id for st in self.service_types)

    def count(self, node: int, type_id: str) -> int:
        return self.counts.get((node, type_id), 0)

    def priorities(self) -> np.ndarray:
        return np.array([st.priority for st in self.service_types])


def accessibility_count(
    trip_times: np.ndarray,
    trips: TripTable,
    catalog: ServiceCatalog,
    origin: int,
    mode: ModeSpec,
    service_type: str,
) -> float:
    """Services of one type reachable from origin within the mode's time
    budget: the sum of service counts over destinations whose trip from
    origin arrives within mode.time_threshold. Destinations with no trip
    from this origin contribute nothing."""
    if not catalog.has_type(service_type):
        raise ValueError(f"unknown service type {service_type!r}")
    times = np.asarray(trip_times, dtype=float)
    if times.ndim != 2 or times.shape[1] != trips.n_trips:
        raise ValueError(
            f"trip_times has shape {times.shape}, expected (n_modes, {trips.n_trips})"
        )
    if not 0 <= mode.id < times.shape[0]:
        raise ValueError(f"mode id {mode.id} outside trip_times rows")
    reachable = {
        d
        for n, (o, d) in enumerate(trips.trips)
        if o == origin and times[mode.id, n] <= mode.time_threshold
    }
    return float(sum(catalog.count(d, service_type) for d in reachable))


def mobility_index(
    node: NodeAttr,
    modes,
    sigma: np.ndarray,
    catalog: ServiceCatalog,
) -> float:
    """Mobility index of one origin.

    sigma[m, s] is the accessibility count of mode m and service type s
    (catalog order). Each mode contributes its priority-weighted counts
    scaled by exp(-price_sensitivity * cost_per_mile).
    """
    modes = check_modes(modes)
    sig = np.asarray(sigma, dtype=float)
    if sig.shape != (len(modes), len(catalog.service_types)):
        raise ValueError(
            f"sigma has shape {sig.shape}, expected "
            f"({len(modes)}, {len(catalog.service_types)})"
        )
    if not np.all(np.isfinite(sig)) or np.any(sig < 0):
        raise ValueError("sigma entries must be finite and >= 0")
    weighted = sig @ catalog.priorities()
    prices = np.array([m.cost_per_mile for m in modes])
    return float(np.dot(np.exp(-node.price_sensitivity * prices), weighted))


def mem(mobility: np.ndarray, populations: np.ndarray) -> float:
    """Equity of a mobility-index vector, weighted by population.

    Equals 1 - (mean absolute pairwise difference) / (2 * mean), both
    population-weighted; lies in [0, 1] and hits 1 exactly when every
    populated origin has the same index. Undefined (raises) when the
    population-weighted index mass is zero.
    """
    mi = np.asarray(mobility, dtype=float)
    pop = np.asarray(populations, dtype=float)
    if mi.ndim != 1 or mi.shape != pop.shape:
        raise ValueError("mobility and populations must be 1-d and equally long")
    if not np.all(np.isfinite(mi)) or np.any(mi < 0):
        raise ValueError("mobility indices must be finite and >= 0")
    if not np.all(np.isfinite(pop)) or np.any(pop < 0):
        raise ValueError("populations must be finite and >= 0")
    total_pop = float(pop.sum())
    if total_pop <= 0:
        raise UndefinedMetricError("total population is zero")
    weighted_mass = float(np.dot(pop, mi))
    if weighted_mass <= 0:
        raise UndefinedMetricError(
            "population-weighted mobility is zero; equity is undefined"
        )
    spread = float(pop @ np.abs(mi[:, None] - mi[None, :]) @ pop)
    return 1.0 - spread / (2.0 * total_pop * weighted_mass)


@dataclass(frozen=True, eq=False)
class EquityReport:
    """Per-origin mobility indices, the populations weighting them, the
    equity value, and the accessibility counts behind it all
    (origin, mode, service type)."""

    origins: tuple[int, ...]
    mi: np.ndarray
    populations: np.ndarray
    mem: float
    accessibility: np.ndarray


def equity_report(
    network: Network,
    modes,
    trips: TripTable,
    catalog: ServiceCatalog,
    trip_times: np.ndarray,
) -> EquityReport:
    """Score every trip origin and fold the scores into one equity value.

    Origins are the distinct trip origins in ascending node order; their
    populations come from the network's node attributes.
    """
    modes = check_modes(modes)
    trips.check_against(network)
    origins = sorted({o for o, _ in trips.trips})
    if not origins:
        raise UndefinedMetricError("no trip origins to score")
    n_types = len(catalog.service_types)
    access = np.zeros((len(origins), len(modes), n_types))
    for i, origin in enumerate(origins):
        for mode in modes:
            for s, st in enumerate(catalog.service_types):
                access[i, mode.id, s] = accessibility_count(
                    trip_times, trips, catalog, origin, mode, st.id
                )
    mi = np.array(
        [
            mobility_index(network.nodes[origin], modes, access[i], catalog)
            for i, origin in enumerate(origins)
        ]
    )
    populations = np.array([network.nodes[o].population for o in origins])
    value = mem(mi, populations)
    return EquityReport(
        origins=tuple(origins),
        mi=mi,
        populations=populations,
        mem=value,
        accessibility=access,
    )
