"""Road network model: directed graph, volume-delay curve, deterministic Dijkstra.

Times are seconds, flows are passengers per hour, lengths are meters.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Volume-delay coefficients. Module-level so experiments can override them
# per call without touching the default congestion model.
BPR_COEFFICIENT = 0.15
BPR_EXPONENT = 4


@dataclass(frozen=True)
class NodeAttr:
    """Network node plus the traveler attributes used by equity scoring.

    population counts travelers who originate here; price_sensitivity scales
    how strongly monetary cost discounts a mode's accessibility contribution.
    position is an optional (x, y) pair in meters, used only by scenario
    generation and geodata tooling.
    """

    id: int
    population: float = 0.0
    price_sensitivity: float = 0.0
    position: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if not self.population >= 0:
            raise ValueError(f"node {self.id}: population must be >= 0")
        if not self.price_sensitivity >= 0:
            raise ValueError(f"node {self.id}: price_sensitivity must be >= 0")


@dataclass(frozen=True)
class EdgeAttr:
    """Directed road segment with free-flow time (s) and capacity (pax/h)."""

    tail: int
    head: int
    free_flow_time: float
    capacity: float

    def __post_init__(self) -> None:
        if self.tail == self.head:
            raise ValueError(f"self-loop edge at node {self.tail}")
        if not self.free_flow_time > 0:
            raise ValueError(
                f"edge ({self.tail}, {self.head}): free_flow_time must be > 0"
            )
        if not self.capacity > 0:
            raise ValueError(f"edge ({self.tail}, {self.head}): capacity must be > 0")


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable directed graph. Node ids must be 0..n-1 in list order.

    Parallel edges are allowed, self-loops are not. Adjacency is derived
    lazily from the edge list and never mutated afterwards, so instances can
    be shared freely across concurrent solves.
    """

    nodes: tuple[NodeAttr, ...]
    edges: tuple[EdgeAttr, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        for pos, node in enumerate(self.nodes):
            if node.id != pos:
                raise ValueError(
                    f"nodes[{pos}] has id {node.id}; ids must be 0..n-1 in order"
                )
        n = len(self.nodes)
        for pos, edge in enumerate(self.edges):
            if not (0 <= edge.tail < n and 0 <= edge.head < n):
                raise ValueError(
                    f"edges[{pos}] references a missing node "
                    f"({edge.tail} -> {edge.head})"
                )

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def out_edges(self) -> tuple[tuple[int, ...], ...]:
        """Outgoing edge indices per node, ascending within each node."""
        adj: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for idx, edge in enumerate(self.edges):
            adj[edge.tail].append(idx)
        return tuple(tuple(out) for out in adj)

    @cached_property
    def in_edges(self) -> tuple[tuple[int, ...], ...]:
        """Incoming edge indices per node, ascending within each node."""
        adj: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for idx, edge in enumerate(self.edges):
            adj[edge.head].append(idx)
        return tuple(tuple(inc) for inc in adj)

    @cached_property
    def free_flow_times(self) -> np.ndarray:
        arr = np.array([e.free_flow_time for e in self.edges], dtype=float)
        arr.flags.writeable = False
        return arr

    @cached_property
    def capacities(self) -> np.ndarray:
        arr = np.array([e.capacity for e in self.edges], dtype=float)
        arr.flags.writeable = False
        return arr


# ---------------------------------------------------------------------------
# Volume-delay curve
# ---------------------------------------------------------------------------


def _vector_times(free_flow, capacity, loads, coefficient, exponent):
    return free_flow * (1.0 + coefficient * (loads / capacity) ** exponent)


def _vector_derivs(free_flow, capacity, loads, coefficient, exponent):
    return (
        free_flow
        * (coefficient * exponent / capacity**exponent)
        * loads ** (exponent - 1)
    )


def _vector_curvs(free_flow, capacity, loads, coefficient, exponent):
    return (
        free_flow
        * (coefficient * exponent * (exponent - 1) / capacity**exponent)
        * loads ** (exponent - 2)
    )


def bpr_latency(
    edge: EdgeAttr,
    total_flow: float,
    coefficient: float = BPR_COEFFICIENT,
    exponent: float = BPR_EXPONENT,
) -> float:
    """Congested travel time (s) on one edge carrying total_flow."""
    if not total_flow >= 0:
        raise ValueError("total_flow must be >= 0")
    return float(
        _vector_times(edge.free_flow_time, edge.capacity, total_flow, coefficient, exponent)
    )


def bpr_latency_derivative(
    edge: EdgeAttr,
    total_flow: float,
    coefficient: float = BPR_COEFFICIENT,
    exponent: float = BPR_EXPONENT,
) -> float:
    """Marginal delay d(latency)/d(flow) at total_flow; used by the solver
    gradient."""
    if not total_flow >= 0:
        raise ValueError("total_flow must be >= 0")
    return float(
        _vector_derivs(edge.free_flow_time, edge.capacity, total_flow, coefficient, exponent)
    )


def edge_travel_times(
    network: Network,
    loads,
    coefficient: float = BPR_COEFFICIENT,
    exponent: float = BPR_EXPONENT,
) -> np.ndarray:
    """Vectorised bpr_latency over every edge of the network."""
    loads = np.asarray(loads, dtype=float)
    if loads.shape != (network.n_edges,):
        raise ValueError(
            f"loads has shape {loads.shape}, expected ({network.n_edges},)"
        )
    if not np.all(np.isfinite(loads)) or np.any(loads < 0):
        raise ValueError("edge loads must be finite and >= 0")
    return _vector_times(
        network.free_flow_times, network.capacities, loads, coefficient, exponent
    )


def edge_travel_time_derivatives(
    network: Network,
    loads,
    coefficient: float = BPR_COEFFICIENT,
    exponent: float = BPR_EXPONENT,
) -> np.ndarray:
    """Vectorised bpr_latency_derivative over every edge."""
    loads = np.asarray(loads, dtype=float)
    if loads.shape != (network.n_edges,):
        raise ValueError(
            f"loads has shape {loads.shape}, expected ({network.n_edges},)"
        )
    if not np.all(np.isfinite(loads)) or np.any(loads < 0):
        raise ValueError("edge loads must be finite and >= 0")
    return _vector_derivs(
        network.free_flow_times, network.capacities, loads, coefficient, exponent
    )


# ---------------------------------------------------------------------------
# Shortest paths
# ---------------------------------------------------------------------------


def edge_cost_vector(network: Network, costs) -> np.ndarray:
    """Validate a per-edge cost vector: one finite, nonnegative entry per edge."""
    arr = np.asarray(costs, dtype=float)
    if arr.shape != (network.n_edges,):
        raise ValueError(
            f"costs has shape {arr.shape}, expected ({network.n_edges},)"
        )
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("edge costs must be finite and >= 0")
    return arr


def _check_node(network: Network, node: int) -> None:
    if not 0 <= node < network.n_nodes:
        raise ValueError(f"node {node} not in network")


def dijkstra_from(network: Network, costs, origin: int) -> np.ndarray:
    """Least path cost from origin to every node; inf where unreachable."""
    costs = edge_cost_vector(network, costs)
    _check_node(network, origin)
    edges = network.edges
    out_edges = network.out_edges
    dist = [math.inf] * network.n_nodes
    dist[origin] = 0.0
    heap = [(0.0, origin)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for e in out_edges[u]:
            v = edges[e].head
            nd = d + costs[e]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return np.array(dist)


def dijkstra_to(network: Network, costs, dest: int) -> np.ndarray:
    """Least path cost from every node into dest; inf where dest is
    unreachable."""
    costs = edge_cost_vector(network, costs)
    _check_node(network, dest)
    edges = network.edges
    in_edges = network.in_edges
    dist = [math.inf] * network.n_nodes
    dist[dest] = 0.0
    heap = [(0.0, dest)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for e in in_edges[v]:
            u = edges[e].tail
            nd = d + costs[e]
            if nd < dist[u]:
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    return np.array(dist)


def _lex_tight_path(network, costs, origin, dest, dist_to, total, tol):
    # Depth-first over simple paths whose every prefix can still complete at
    # the optimal cost, trying edges in ascending id order. With strictly
    # positive costs no backtracking ever occurs; zero-cost plateaus make it
    # a true search but termination is guaranteed (simple paths only).
    edges = network.edges
    out_edges = network.out_edges
    frames = [(0.0, iter(out_edges[origin]))]
    path: list[int] = []
    visited = {origin}
    while frames:
        walked, edge_iter = frames[-1]
        step = None
        for e in edge_iter:
            head = edges[e].head
            if head in visited:
                continue
            if abs(walked + costs[e] + dist_to[head] - total) <= tol:
                step = (e, head)
                break
        if step is None:
            frames.pop()
            if path:
                visited.discard(edges[path.pop()].head)
            continue
        e, head = step
        path.append(e)
        if head == dest:
            return path
        visited.add(head)
        frames.append((walked + costs[e], iter(out_edges[head])))
    return None


def shortest_path(
    network: Network,
    costs,
    origin: int,
    dest: int,
    *,
    dist_to: np.ndarray | None = None,
) -> tuple[list[int], float] | None:
    """Minimum-cost path from origin to dest as (edge id list, cost).

    Among equal-cost optima the lexicographically smallest edge-id sequence
    is returned, which pins down one reproducible path per query. Returns
    None when dest is unreachable. dist_to may carry a precomputed
    dijkstra_to(network, costs, dest) to amortize repeated queries into the
    same destination.
    """
    costs = edge_cost_vector(network, costs)
    _check_node(network, origin)
    _check_node(network, dest)
    if dist_to is None:
        dist_to = dijkstra_to(network, costs, dest)
    total = float(dist_to[origin])
    if math.isinf(total):
        return None
    if origin == dest:
        return [], 0.0
    tol = 1e-12 * max(1.0, total)
    path = _lex_tight_path(network, costs, origin, dest, dist_to, total, tol)
    if path is None:
        raise RuntimeError(
            f"shortest-path reconstruction failed for {origin} -> {dest}"
        )
    return path, total
