"""Scenario files: one YAML document holding the network, modes, demand,
services, and experiment knobs, with explicit units.

Parsing is strict. Unknown keys, wrong types, and out-of-range values fail
with an error naming the offending field; YAML syntax errors carry the line
and column. serialize_scenario(parse) round-trips exactly, including float
values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

import numpy as np

from equiflow.assignment import N_LEVELS, ModeSpec, TripTable, check_modes
from equiflow.equity import (
    ESSENTIAL_PRIORITY,
    NONESSENTIAL_PRIORITY,
    ServiceCatalog,
    ServiceType,
)
from equiflow.errors import InputError
from equiflow.network import EdgeAttr, Network, NodeAttr

SUPPORTED_UNITS = {
    "time": "seconds",
    "flow": "passengers_per_hour",
    "length": "meters",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Solver and sweep settings a scenario can pin down."""

    gamma: float = math.inf
    rounds: int = 2
    tol: float = 1e-4
    max_iters: int = 500
    resolution: int = 21

    def __post_init__(self) -> None:
        if math.isnan(self.gamma) or self.gamma < 0:
            raise ValueError("gamma must be >= 0 (or .inf)")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.resolution < 2:
            raise ValueError("resolution must be >= 2")


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything one experiment needs, as parsed from a scenario file."""

    network: Network
    modes: tuple[ModeSpec, ...]
    trips: TripTable
    catalog: ServiceCatalog
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)


# ---------------------------------------------------------------------------
# Strict field readers
# ---------------------------------------------------------------------------


def _require_map(value, where, allowed):
    if not isinstance(value, dict):
        raise InputError(f"{where}: expected a mapping")
    unknown = set(value) - set(allowed)
    if unknown:
        raise InputError(f"{where}: unknown keys {', '.join(sorted(map(str, unknown)))}")
    return value


def _require_list(value, where):
    if not isinstance(value, list):
        raise InputError(f"{where}: expected a list")
    return value


def _number(mapping, key, where, *, required=True, default=None, minimum=None,
            positive=False, allow_inf=False):
    if key not in mapping:
        if required:
            raise InputError(f"{where}.{key}: required")
        return default
    value = mapping[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputError(f"{where}.{key}: expected a number")
    value = float(value)
    if math.isnan(value) or (not allow_inf and math.isinf(value)):
        raise InputError(f"{where}.{key}: must be finite")
    if positive and not value > 0:
        raise InputError(f"{where}.{key}: must be > 0")
    if minimum is not None and value < minimum:
        raise InputError(f"{where}.{key}: must be >= {minimum}")
    return value


def _integer(mapping, key, where, *, required=True, default=None, minimum=None):
    if key not in mapping:
        if required:
            raise InputError(f"{where}.{key}: required")
        return default
    value = mapping[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputError(f"{where}.{key}: expected an integer")
    if minimum is not None and value < minimum:
        raise InputError(f"{where}.{key}: must be >= {minimum}")
    return value


def _string(mapping, key, where, *, required=True, default=None):
    if key not in mapping:
        if required:
            raise InputError(f"{where}.{key}: required")
        return default
    value = mapping[key]
    if not isinstance(value, str) or not value:
        raise InputError(f"{where}.{key}: expected a non-empty string")
    return value


def _boolean(mapping, key, where, *, default=False):
    if key not in mapping:
        return default
    value = mapping[key]
    if not isinstance(value, bool):
        raise InputError(f"{where}.{key}: expected true or false")
    return value


# ---------------------------------------------------------------------------
# Parse
# ---------------------------------------------------------------------------

_TOP_KEYS = ("units", "nodes", "edges", "modes", "services", "service_counts",
             "trips", "experiment")


def parse_scenario(text: str) -> Scenario:
    """Parse scenario YAML into validated domain objects."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        place = f":{mark.line + 1}:{mark.column + 1}" if mark else ""
        raise InputError(f"scenario{place}: invalid YAML: {exc}") from exc
    if doc is None:
        raise InputError("scenario: file is empty")
    doc = _require_map(doc, "scenario", _TOP_KEYS)

    units = _require_map(doc.get("units", {}), "units", SUPPORTED_UNITS)
    for key, expected in SUPPORTED_UNITS.items():
        declared = _string(units, key, "units", required=True)
        if declared != expected:
            raise InputError(
                f"units.{key}: only {expected!r} is supported, got {declared!r}"
            )

    try:
        nodes = _parse_nodes(_require_list(doc.get("nodes"), "nodes"))
        edges = _parse_edges(_require_list(doc.get("edges", []), "edges"))
        network = Network(nodes=nodes, edges=edges)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    modes = _parse_modes(_require_list(doc.get("modes"), "modes"))
    catalog = _parse_catalog(
        _require_list(doc.get("services", []), "services"),
        _require_list(doc.get("service_counts", []), "service_counts"),
    )
    trips = _parse_trips(_require_list(doc.get("trips", []), "trips"), modes, network)
    experiment = _parse_experiment(doc.get("experiment", {}))
    return Scenario(
        network=network, modes=modes, trips=trips, catalog=catalog, experiment=experiment
    )


def _parse_nodes(items) -> tuple[NodeAttr, ...]:
    nodes = []
    for i, item in enumerate(items):
        where = f"nodes[{i}]"
        item = _require_map(item, where, ("id", "population", "price_sensitivity", "x", "y"))
        node_id = _integer(item, "id", where, minimum=0)
        has_x, has_y = "x" in item, "y" in item
        if has_x != has_y:
            raise InputError(f"{where}: x and y must be given together")
        position = (
            (_number(item, "x", where), _number(item, "y", where)) if has_x else None
        )
        nodes.append(
            NodeAttr(
                id=node_id,
                population=_number(item, "population", where, required=False,
                                   default=0.0, minimum=0.0),
                price_sensitivity=_number(item, "price_sensitivity", where,
                                          required=False, default=0.0, minimum=0.0),
                position=position,
            )
        )
    return tuple(nodes)


def _parse_edges(items) -> tuple[EdgeAttr, ...]:
    edges = []
    for i, item in enumerate(items):
        where = f"edges[{i}]"
        item = _require_map(item, where, ("from", "to", "free_flow_time", "capacity"))
        edges.append(
            EdgeAttr(
                tail=_integer(item, "from", where, minimum=0),
                head=_integer(item, "to", where, minimum=0),
                free_flow_time=_number(item, "free_flow_time", where, positive=True),
                capacity=_number(item, "capacity", where, positive=True),
            )
        )
    return tuple(edges)


def _parse_modes(items) -> tuple[ModeSpec, ...]:
    modes = []
    for i, item in enumerate(items):
        where = f"modes[{i}]"
        item = _require_map(
            item,
            where,
            ("name", "cost_per_mile", "occupancy", "time_threshold", "weight",
             "private_vehicle"),
        )
        modes.append(
            ModeSpec(
                id=i,
                name=_string(item, "name", where),
                cost_per_mile=_number(item, "cost_per_mile", where, minimum=0.0),
                occupancy=_number(item, "occupancy", where, positive=True),
                time_threshold=_number(item, "time_threshold", where, positive=True),
                weight=_number(item, "weight", where, minimum=0.0),
                private_vehicle=_boolean(item, "private_vehicle", where),
            )
        )
    try:
        return check_modes(modes)
    except ValueError as exc:
        raise InputError(f"modes: {exc}") from None


def _parse_catalog(service_items, count_items) -> ServiceCatalog:
    types = []
    for i, item in enumerate(service_items):
        where = f"services[{i}]"
        item = _require_map(item, where, ("id", "priority", "essential"))
        essential = _boolean(item, "essential", where)
        default_priority = ESSENTIAL_PRIORITY if essential else NONESSENTIAL_PRIORITY
        types.append(
            ServiceType(
                id=_string(item, "id", where),
                priority=_number(item, "priority", where, required=False,
                                 default=default_priority, minimum=0.0),
                essential=essential,
            )
        )
    counts: dict[tuple[int, str], int] = {}
    for i, item in enumerate(count_items):
        where = f"service_counts[{i}]"
        item = _require_map(item, where, ("node", "type", "count"))
        key = (
            _integer(item, "node", where, minimum=0),
            _string(item, "type", where),
        )
        if key in counts:
            raise InputError(f"{where}: duplicate entry for node {key[0]}, type {key[1]!r}")
        counts[key] = _integer(item, "count", where, minimum=0)
    try:
        return ServiceCatalog(service_types=tuple(types), counts=counts)
    except ValueError as exc:
        raise InputError(f"services: {exc}") from None


def _parse_trips(items, modes, network) -> TripTable:
    mode_names = {mode.name: mode.id for mode in modes}
    pairs = []
    compliant = np.zeros((len(modes), len(items)))
    noncompliant = np.zeros((N_LEVELS, len(items)))
    for i, item in enumerate(items):
        where = f"trips[{i}]"
        item = _require_map(
            item, where, ("origin", "destination", "compliant", "noncompliant")
        )
        pairs.append(
            (
                _integer(item, "origin", where, minimum=0),
                _integer(item, "destination", where, minimum=0),
            )
        )
        demand_map = item.get("compliant", {})
        if not isinstance(demand_map, dict):
            raise InputError(f"{where}.compliant: expected a mode-name mapping")
        for mode_name in demand_map:
            if mode_name not in mode_names:
                raise InputError(f"{where}.compliant: unknown mode {mode_name!r}")
            compliant[mode_names[mode_name], i] = _number(
                demand_map, mode_name, f"{where}.compliant", minimum=0.0
            )
        levels = item.get("noncompliant", [0.0] * N_LEVELS)
        levels = _require_list(levels, f"{where}.noncompliant")
        if len(levels) != N_LEVELS:
            raise InputError(
                f"{where}.noncompliant: expected {N_LEVELS} level demands"
            )
        for level, value in enumerate(levels):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InputError(f"{where}.noncompliant[{level}]: expected a number")
            if not math.isfinite(float(value)) or value < 0:
                raise InputError(f"{where}.noncompliant[{level}]: must be >= 0")
            noncompliant[level, i] = float(value)
    try:
        table = TripTable(
            trips=tuple(pairs),
            compliant_demand=compliant,
            noncompliant_demand=noncompliant,
        )
        table.check_against(network)
    except ValueError as exc:
        raise InputError(f"trips: {exc}") from None
    return table


def _parse_experiment(item) -> ExperimentConfig:
    where = "experiment"
    item = _require_map(
        item if item is not None else {},
        where,
        ("gamma", "rounds", "tol", "max_iters", "resolution"),
    )
    defaults = ExperimentConfig()
    try:
        return ExperimentConfig(
            gamma=_number(item, "gamma", where, required=False,
                          default=defaults.gamma, minimum=0.0, allow_inf=True),
            rounds=_integer(item, "rounds", where, required=False,
                            default=defaults.rounds, minimum=1),
            tol=_number(item, "tol", where, required=False,
                        default=defaults.tol, positive=True),
            max_iters=_integer(item, "max_iters", where, required=False,
                               default=defaults.max_iters, minimum=1),
            resolution=_integer(item, "resolution", where, required=False,
                                default=defaults.resolution, minimum=2),
        )
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from None


def load_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    return parse_scenario(text)


# ---------------------------------------------------------------------------
# Serialize
# ---------------------------------------------------------------------------


def serialize_scenario(scenario: Scenario) -> str:
    """Render a scenario back to scenario-file YAML (full float precision)."""
    doc: dict = {"units": dict(SUPPORTED_UNITS)}
    doc["nodes"] = []
    for node in scenario.network.nodes:
        entry: dict = {"id": node.id}
        if node.population:
            entry["population"] = node.population
        if node.price_sensitivity:
            entry["price_sensitivity"] = node.price_sensitivity
        if node.position is not None:
            entry["x"], entry["y"] = node.position
        doc["nodes"].append(entry)
    doc["edges"] = [
        {
            "from": edge.tail,
            "to": edge.head,
            "free_flow_time": edge.free_flow_time,
            "capacity": edge.capacity,
        }
        for edge in scenario.network.edges
    ]
    doc["modes"] = [
        {
            "name": mode.name,
            "cost_per_mile": mode.cost_per_mile,
            "occupancy": mode.occupancy,
            "time_threshold": mode.time_threshold,
            "weight": mode.weight,
            "private_vehicle": mode.private_vehicle,
        }
        for mode in scenario.modes
    ]
    doc["services"] = [
        {"id": st.id, "priority": st.priority, "essential": st.essential}
        for st in scenario.catalog.service_types
    ]
    doc["service_counts"] = [
        {"node": node, "type": type_id, "count": count}
        for (node, type_id), count in sorted(scenario.catalog.counts.items())
    ]
    doc["trips"] = []
    for n, (origin, destination) in enumerate(scenario.trips.trips):
        entry = {
            "origin": origin,
            "destination": destination,
            "compliant": {
                mode.name: float(scenario.trips.compliant_demand[mode.id, n])
                for mode in scenario.modes
                if scenario.trips.compliant_demand[mode.id, n] > 0
            },
            "noncompliant": [
                float(q) for q in scenario.trips.noncompliant_demand[:, n]
            ],
        }
        doc["trips"].append(entry)
    exp = scenario.experiment
    doc["experiment"] = {
        "gamma": exp.gamma,
        "rounds": exp.rounds,
        "tol": exp.tol,
        "max_iters": exp.max_iters,
        "resolution": exp.resolution,
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, width=100)


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(serialize_scenario(scenario))


# ---------------------------------------------------------------------------
# Grid scenario generator
# ---------------------------------------------------------------------------

# Fixture attributes for generated grids. Origins cycle through the
# population/price-sensitivity lists; destinations cycle through the service
# count patterns (grocery, clinic, cafe).
GRID_ORIGIN_POPULATIONS = (1400.0, 900.0, 500.0)
GRID_ORIGIN_PRICE_SENSITIVITIES = (0.4, 1.0, 2.0)
GRID_SERVICE_PATTERNS = ((2, 1, 3), (1, 0, 1), (0, 2, 2), (3, 1, 0), (1, 1, 1))
GRID_SERVICE_TYPES = (
    ("grocery", True),
    ("clinic", True),
    ("cafe", False),
)


def _default_grid_endpoints(rows: int, cols: int):
    """Three west-side origins and five east/center destinations."""
    first_col = [r * cols for r in (0, rows // 2, rows - 1)]
    origins = tuple(dict.fromkeys(first_col))
    last_col = [r * cols + (cols - 1) for r in range(rows)]
    center = (rows // 2) * cols + cols // 2
    destinations = tuple(sorted(dict.fromkeys(last_col + [center])))
    return origins, tuple(d for d in destinations if d not in origins)


def gen_grid(
    rows: int = 4,
    cols: int = 4,
    diagonals: bool = True,
    edge_length: float = 400.0,
    origins=None,
    destinations=None,
    *,
    speed: float = 10.0,
    capacity: float = 1200.0,
    trip_demand: float = 900.0,
    public_share: float = 0.5,
    noncompliance_rate: float = 0.1,
    weights: tuple[float, float] = (0.7, 0.3),
    public_threshold: float = 1200.0,
    private_threshold: float = 600.0,
    gamma: float = math.inf,
    rounds: int = 2,
    tol: float = 1e-4,
    resolution: int = 21,
) -> Scenario:
    """Build a rows x cols grid scenario with public and private modes.

    Every neighboring node pair gets a directed edge each way; diagonals add
    both diagonals of every cell, sqrt(2) longer. Free-flow time is edge
    length over speed. Each (origin, destination) pair becomes one trip
    carrying trip_demand passengers per hour: public_share of it rides
    public transit, the rest drives, and noncompliance_rate of the driving
    demand defects, split equally over the cognition levels.
    """
    if rows < 2 or cols < 2:
        raise ValueError("grid needs at least 2 rows and 2 columns")
    if not 0 <= public_share <= 1:
        raise ValueError("public_share must be within [0, 1]")
    if not 0 <= noncompliance_rate <= 1:
        raise ValueError("noncompliance_rate must be within [0, 1]")
    if not edge_length > 0 or not speed > 0:
        raise ValueError("edge_length and speed must be > 0")
    if not capacity > 0 or not trip_demand >= 0:
        raise ValueError("capacity must be > 0 and trip_demand >= 0")

    if origins is None or destinations is None:
        default_o, default_d = _default_grid_endpoints(rows, cols)
        origins = default_o if origins is None else tuple(origins)
        destinations = default_d if destinations is None else tuple(destinations)
    origins = tuple(int(o) for o in origins)
    destinations = tuple(int(d) for d in destinations)
    n_nodes = rows * cols
    for label, group in (("origin", origins), ("destination", destinations)):
        for node in group:
            if not 0 <= node < n_nodes:
                raise ValueError(f"{label} {node} outside the {rows}x{cols} grid")
    if set(origins) & set(destinations):
        raise ValueError("origins and destinations must be disjoint")

    straight_time = edge_length / speed
    diagonal_time = straight_time * math.sqrt(2.0)

    origin_attrs = {
        node: (
            GRID_ORIGIN_POPULATIONS[i % len(GRID_ORIGIN_POPULATIONS)],
            GRID_ORIGIN_PRICE_SENSITIVITIES[i % len(GRID_ORIGIN_PRICE_SENSITIVITIES)],
        )
        for i, node in enumerate(origins)
    }
    nodes = []
    for r in range(rows):
        for c in range(cols):
            node_id = r * cols + c
            population, sensitivity = origin_attrs.get(node_id, (0.0, 0.0))
            nodes.append(
                NodeAttr(
                    id=node_id,
                    population=population,
                    price_sensitivity=sensitivity,
                    position=(c * edge_length, r * edge_length),
                )
            )

    def length_factor(a: int, b: int) -> float:
        # Roads are "approximately" edge_length long: a stable +/-3 percent
        # per-direction variation keeps parallel routes from tying exactly,
        # so path choices do not flip on solver noise.
        return 1.0 + 0.03 * (((a * 8191 + b * 127) % 17) - 8) / 8.0

    def both_ways(a: int, b: int, travel_time: float):
        return (
            EdgeAttr(
                tail=a,
                head=b,
                free_flow_time=travel_time * length_factor(a, b),
                capacity=capacity,
            ),
            EdgeAttr(
                tail=b,
                head=a,
                free_flow_time=travel_time * length_factor(b, a),
                capacity=capacity,
            ),
        )

    edges: list[EdgeAttr] = []
    for r in range(rows):
        for c in range(cols - 1):
            edges.extend(both_ways(r * cols + c, r * cols + c + 1, straight_time))
    for r in range(rows - 1):
        for c in range(cols):
            edges.extend(both_ways(r * cols + c, (r + 1) * cols + c, straight_time))
    if diagonals:
        for r in range(rows - 1):
            for c in range(cols - 1):
                nw = r * cols + c
                ne = nw + 1
                sw = nw + cols
                se = sw + 1
                edges.extend(both_ways(nw, se, diagonal_time))
                edges.extend(both_ways(ne, sw, diagonal_time))

    network = Network(nodes=tuple(nodes), edges=tuple(edges))

    modes = (
        ModeSpec(
            id=0,
            name="public",
            cost_per_mile=0.5,
            occupancy=0.05,
            time_threshold=public_threshold,
            weight=float(weights[0]),
        ),
        ModeSpec(
            id=1,
            name="private",
            cost_per_mile=2.5,
            occupancy=1.0,
            time_threshold=private_threshold,
            weight=float(weights[1]),
            private_vehicle=True,
        ),
    )

    service_types = tuple(
        ServiceType(
            id=type_id,
            priority=ESSENTIAL_PRIORITY if essential else NONESSENTIAL_PRIORITY,
            essential=essential,
        )
        for type_id, essential in GRID_SERVICE_TYPES
    )
    counts: dict[tuple[int, str], int] = {}
    for i, dest in enumerate(destinations):
        pattern = GRID_SERVICE_PATTERNS[i % len(GRID_SERVICE_PATTERNS)]
        for (type_id, _), count in zip(GRID_SERVICE_TYPES, pattern):
            if count:
                counts[(dest, type_id)] = count
    catalog = ServiceCatalog(service_types=service_types, counts=counts)

    pairs = [(o, d) for o in origins for d in destinations]
    public_demand = public_share * trip_demand
    driving = (1.0 - public_share) * trip_demand
    defecting = noncompliance_rate * driving
    compliant = np.zeros((len(modes), len(pairs)))
    compliant[0, :] = public_demand
    compliant[1, :] = driving - defecting
    noncompliant = np.full((N_LEVELS, len(pairs)), defecting / N_LEVELS)
    trip_table = TripTable(
        trips=tuple(pairs),
        compliant_demand=compliant,
        noncompliant_demand=noncompliant,
    )

    experiment = ExperimentConfig(
        gamma=gamma, rounds=rounds, tol=tol, resolution=resolution
    )
    return Scenario(
        network=network,
        modes=modes,
        trips=trip_table,
        catalog=catalog,
        experiment=experiment,
    )
