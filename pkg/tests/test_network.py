"""Network model: volume-delay curve, validation, shortest paths."""

import math

import numpy as np
import pytest

from equiflow.network import (
    EdgeAttr,
    Network,
    NodeAttr,
    bpr_latency,
    bpr_latency_derivative,
    dijkstra_from,
    dijkstra_to,
    edge_travel_time_derivatives,
    edge_travel_times,
    shortest_path,
)


def make_network(n_nodes, edge_tuples):
    nodes = [NodeAttr(id=i) for i in range(n_nodes)]
    edges = [EdgeAttr(a, b, t, c) for a, b, t, c in edge_tuples]
    return Network(nodes=nodes, edges=edges)


def brute_force_min_cost(network, costs, origin, dest):
    """Exhaustive minimum over simple paths; None when unreachable."""
    best = None

    def walk(node, seen, acc):
        nonlocal best
        if node == dest:
            if best is None or acc < best:
                best = acc
            return
        for e in network.out_edges[node]:
            head = network.edges[e].head
            if head in seen:
                continue
            walk(head, seen | {head}, acc + costs[e])

    walk(origin, {origin}, 0.0)
    return best


# ---------------------------------------------------------------------------
# Volume-delay curve
# ---------------------------------------------------------------------------


class TestVolumeDelay:
    def test_free_flow(self):
        edge = EdgeAttr(0, 1, free_flow_time=1.0, capacity=10.0)
        assert bpr_latency(edge, 0.0) == 1.0

    def test_at_capacity(self):
        # t0 * (1 + 0.15 * 1^4), exactly representable
        edge = EdgeAttr(0, 1, free_flow_time=1.0, capacity=10.0)
        assert bpr_latency(edge, 10.0) == 1.15

    def test_double_capacity(self):
        # 1 + 0.15 * 16 = 3.4
        edge = EdgeAttr(0, 1, free_flow_time=2.0, capacity=10.0)
        assert bpr_latency(edge, 20.0) == pytest.approx(6.8, rel=1e-15)

    def test_derivative_at_capacity(self):
        # t0 * 0.15 * 4 / cap = 1 * 0.6 / 10
        edge = EdgeAttr(0, 1, free_flow_time=1.0, capacity=10.0)
        assert bpr_latency_derivative(edge, 10.0) == pytest.approx(0.06, rel=1e-15)

    def test_derivative_matches_finite_difference(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            edge = EdgeAttr(
                0, 1,
                free_flow_time=float(rng.uniform(0.5, 20.0)),
                capacity=float(rng.uniform(5.0, 200.0)),
            )
            x = float(rng.uniform(0.1, 3.0)) * edge.capacity
            h = 1e-5 * edge.capacity
            numeric = (bpr_latency(edge, x + h) - bpr_latency(edge, x - h)) / (2 * h)
            assert bpr_latency_derivative(edge, x) == pytest.approx(numeric, rel=1e-6)

    def test_monotone_and_convex(self):
        edge = EdgeAttr(0, 1, free_flow_time=3.0, capacity=40.0)
        xs = np.linspace(0.0, 120.0, 25)
        ts = [bpr_latency(edge, x) for x in xs]
        ds = [bpr_latency_derivative(edge, x) for x in xs]
        assert all(b >= a for a, b in zip(ts, ts[1:]))
        assert all(b >= a for a, b in zip(ds, ds[1:]))

    def test_vectorized_matches_scalar(self):
        net = make_network(3, [(0, 1, 2.0, 15.0), (1, 2, 4.0, 30.0), (0, 2, 9.0, 5.0)])
        loads = np.array([10.0, 45.0, 0.0])
        times = edge_travel_times(net, loads)
        derivs = edge_travel_time_derivatives(net, loads)
        for i, edge in enumerate(net.edges):
            assert times[i] == bpr_latency(edge, loads[i])
            assert derivs[i] == bpr_latency_derivative(edge, loads[i])

    def test_negative_flow_rejected(self):
        edge = EdgeAttr(0, 1, free_flow_time=1.0, capacity=10.0)
        with pytest.raises(ValueError):
            bpr_latency(edge, -1.0)
        net = make_network(2, [(0, 1, 1.0, 10.0)])
        with pytest.raises(ValueError, match="finite"):
            edge_travel_times(net, [float("nan")])
        with pytest.raises(ValueError, match="shape"):
            edge_travel_times(net, [1.0, 2.0])


# ---------------------------------------------------------------------------
# Graph validation
# ---------------------------------------------------------------------------


class TestValidation:
    def test_node_ids_must_match_positions(self):
        with pytest.raises(ValueError, match="ids must be 0..n-1"):
            Network(nodes=[NodeAttr(id=1)], edges=[])

    def test_edge_endpoints_must_exist(self):
        with pytest.raises(ValueError, match="missing node"):
            make_network(2, [(0, 5, 1.0, 1.0)])

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError, match="self-loop"):
            EdgeAttr(3, 3, 1.0, 1.0)

    def test_nonpositive_attrs_rejected(self):
        with pytest.raises(ValueError, match="free_flow_time"):
            EdgeAttr(0, 1, 0.0, 1.0)
        with pytest.raises(ValueError, match="capacity"):
            EdgeAttr(0, 1, 1.0, -2.0)
        with pytest.raises(ValueError, match="population"):
            NodeAttr(id=0, population=-1.0)

    def test_parallel_edges_allowed(self):
        net = make_network(2, [(0, 1, 1.0, 1.0), (0, 1, 2.0, 1.0)])
        assert net.n_edges == 2
        assert net.out_edges[0] == (0, 1)

    def test_adjacency(self):
        net = make_network(3, [(0, 1, 1.0, 1.0), (1, 2, 1.0, 1.0), (0, 2, 1.0, 1.0)])
        assert net.out_edges == ((0, 2), (1,), ())
        assert net.in_edges == ((), (0,), (1, 2))


# ---------------------------------------------------------------------------
# Shortest paths
# ---------------------------------------------------------------------------


class TestShortestPaths:
    def diamond(self):
        # Two parallel routes 0->3 through 1 and 2; costs make the upper
        # route (via node 1) cheaper.
        return make_network(
            4,
            [
                (0, 1, 1.0, 1.0),  # e0
                (0, 2, 4.0, 1.0),  # e1
                (1, 3, 2.0, 1.0),  # e2
                (2, 3, 1.0, 1.0),  # e3
            ],
        )

    def test_dijkstra_hand_values(self):
        net = self.diamond()
        costs = net.free_flow_times
        dist = dijkstra_from(net, costs, 0)
        assert dist.tolist() == [0.0, 1.0, 4.0, 3.0]
        back = dijkstra_to(net, costs, 3)
        assert back.tolist() == [3.0, 2.0, 1.0, 0.0]

    def test_shortest_path_hand_values(self):
        net = self.diamond()
        path, cost = shortest_path(net, net.free_flow_times, 0, 3)
        assert path == [0, 2]
        assert cost == 3.0

    def test_tie_breaks_to_smallest_edge_sequence(self):
        # Both routes cost exactly 2; the lexicographically smaller edge-id
        # sequence must win regardless of insertion order.
        net = make_network(
            4,
            [
                (0, 2, 1.0, 1.0),  # e0
                (0, 1, 1.0, 1.0),  # e1
                (2, 3, 1.0, 1.0),  # e2
                (1, 3, 1.0, 1.0),  # e3
            ],
        )
        path, cost = shortest_path(net, net.free_flow_times, 0, 3)
        assert cost == 2.0
        assert path == [0, 2]

    def test_zero_cost_edges(self):
        # A zero-cost plateau, including a 2-cycle, must not trap the search.
        net = make_network(
            3,
            [
                (0, 1, 1.0, 1.0),  # e0
                (1, 0, 1.0, 1.0),  # e1
                (1, 2, 1.0, 1.0),  # e2
                (0, 2, 3.0, 1.0),  # e3
            ],
        )
        costs = np.array([0.0, 0.0, 0.0, 1.0])
        path, cost = shortest_path(net, costs, 0, 2)
        assert cost == 0.0
        assert path == [0, 2]

    def test_unreachable_returns_none(self):
        net = make_network(3, [(0, 1, 1.0, 1.0)])
        costs = net.free_flow_times
        assert shortest_path(net, costs, 0, 2) is None
        assert math.isinf(dijkstra_from(net, costs, 0)[2])

    def test_origin_equals_dest(self):
        net = make_network(2, [(0, 1, 1.0, 1.0)])
        assert shortest_path(net, net.free_flow_times, 1, 1) == ([], 0.0)

    def test_node_bounds_checked(self):
        net = make_network(2, [(0, 1, 1.0, 1.0)])
        with pytest.raises(ValueError, match="not in network"):
            dijkstra_from(net, net.free_flow_times, 9)
        with pytest.raises(ValueError, match="not in network"):
            shortest_path(net, net.free_flow_times, 0, -1)

    def test_matches_exhaustive_search(self):
        # Random sparse digraphs with small integer costs: Dijkstra's answer
        # must equal the exhaustive simple-path minimum exactly (integer
        # sums are exact in floats).
        rng = np.random.default_rng(99)
        for _ in range(40):
            n = int(rng.integers(3, 8))
            pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
            keep = rng.random(len(pairs)) < 0.45
            edges = [
                (a, b, float(rng.integers(1, 10)), 1.0)
                for (a, b), k in zip(pairs, keep)
                if k
            ]
            if not edges:
                continue
            net = make_network(n, edges)
            costs = net.free_flow_times
            o, d = 0, n - 1
            expected = brute_force_min_cost(net, costs, o, d)
            found = shortest_path(net, costs, o, d)
            if expected is None:
                assert found is None
            else:
                path, cost = found
                assert cost == expected
                assert sum(costs[e] for e in path) == cost
                # The edge list must be a connected origin->dest walk.
                assert net.edges[path[0]].tail == o
                assert net.edges[path[-1]].head == d
                for e1, e2 in zip(path, path[1:]):
                    assert net.edges[e1].head == net.edges[e2].tail
