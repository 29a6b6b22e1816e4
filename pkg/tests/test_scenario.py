"""Scenario files and the grid generator."""

import math

import numpy as np
import pytest

from equiflow.errors import InputError
from equiflow.scenario import (
    ExperimentConfig,
    gen_grid,
    load_scenario,
    parse_scenario,
    save_scenario,
    serialize_scenario,
)

MINIMAL = """\
units:
  time: seconds
  flow: passengers_per_hour
  length: meters
nodes:
  - {id: 0, population: 100.0, price_sensitivity: 1.0}
  - {id: 1}
edges:
  - {from: 0, to: 1, free_flow_time: 30.0, capacity: 500.0}
modes:
  - {name: public, cost_per_mile: 0.5, occupancy: 0.05, time_threshold: 1200.0, weight: 0.7}
  - {name: private, cost_per_mile: 2.5, occupancy: 1.0, time_threshold: 600.0, weight: 0.3,
     private_vehicle: true}
services:
  - {id: clinic, priority: 2.0, essential: true}
service_counts:
  - {node: 1, type: clinic, count: 2}
trips:
  - origin: 0
    destination: 1
    compliant: {public: 45.0, private: 40.5}
    noncompliant: [1.5, 1.5, 1.5]
"""


class TestParsing:
    def test_minimal_document(self):
        sc = parse_scenario(MINIMAL)
        assert sc.network.n_nodes == 2
        assert sc.network.n_edges == 1
        assert [m.name for m in sc.modes] == ["public", "private"]
        assert sc.modes[1].private_vehicle
        assert sc.catalog.count(1, "clinic") == 2
        assert sc.trips.trips == ((0, 1),)
        assert sc.trips.compliant_demand[:, 0].tolist() == [45.0, 40.5]
        assert sc.trips.noncompliant_demand[:, 0].tolist() == [1.5, 1.5, 1.5]
        assert sc.experiment == ExperimentConfig()

    def test_units_are_mandatory_and_pinned(self):
        with pytest.raises(InputError, match="units"):
            parse_scenario(MINIMAL.replace("units:\n", "units_:\n", 1))
        with pytest.raises(InputError, match="units.time"):
            parse_scenario(MINIMAL.replace("time: seconds", "time: minutes"))

    def test_empty_and_invalid_documents(self):
        with pytest.raises(InputError, match="file is empty"):
            parse_scenario("")
        with pytest.raises(InputError, match=r"scenario:\d+:\d+: invalid YAML"):
            parse_scenario("nodes: [\n")
        with pytest.raises(InputError, match="unknown key"):
            parse_scenario(MINIMAL + "profit: 9000\n")

    def test_field_errors_are_addressed(self):
        bad_edge = MINIMAL.replace("capacity: 500.0", "capacity: -3")
        with pytest.raises(InputError, match=r"edges\[0\].capacity"):
            parse_scenario(bad_edge)
        bad_node = MINIMAL.replace("{id: 1}", "{id: 7}")
        with pytest.raises(InputError, match="ids must be 0..n-1"):
            parse_scenario(bad_node)
        bad_trip = MINIMAL.replace("destination: 1", "destination: 9")
        with pytest.raises(InputError, match="missing node"):
            parse_scenario(bad_trip)

    def test_unknown_mode_in_trip(self):
        doc = MINIMAL.replace("public: 45.0", "zeppelin: 45.0")
        with pytest.raises(InputError, match=r"trips\[0\].compliant: unknown mode 'zeppelin'"):
            parse_scenario(doc)

    def test_noncompliant_needs_all_levels(self):
        doc = MINIMAL.replace("[1.5, 1.5, 1.5]", "[1.5, 1.5]")
        with pytest.raises(InputError, match="expected 3 level demands"):
            parse_scenario(doc)

    def test_trips_may_be_absent(self):
        doc = MINIMAL.split("trips:")[0]
        sc = parse_scenario(doc)
        assert sc.trips.n_trips == 0

    def test_experiment_overrides(self):
        doc = MINIMAL + "experiment: {gamma: 12.5, rounds: 3, resolution: 5}\n"
        sc = parse_scenario(doc)
        assert sc.experiment.gamma == 12.5
        assert sc.experiment.rounds == 3
        assert sc.experiment.resolution == 5
        assert sc.experiment.tol == 1e-4

    def test_experiment_gamma_inf(self):
        doc = MINIMAL + "experiment: {gamma: .inf}\n"
        assert math.isinf(parse_scenario(doc).experiment.gamma)
        with pytest.raises(InputError, match="gamma"):
            parse_scenario(MINIMAL + "experiment: {gamma: -1}\n")


class TestRoundTrip:
    def test_serialize_parse_identity(self):
        sc = gen_grid(rows=3, cols=3)
        text = serialize_scenario(sc)
        again = parse_scenario(text)
        assert serialize_scenario(again) == text

    def test_round_trip_preserves_content(self):
        sc = parse_scenario(MINIMAL)
        again = parse_scenario(serialize_scenario(sc))
        assert again.network.nodes == sc.network.nodes
        assert again.network.edges == sc.network.edges
        assert again.modes == sc.modes
        assert again.catalog.counts == sc.catalog.counts
        assert again.trips.trips == sc.trips.trips
        assert np.array_equal(again.trips.compliant_demand, sc.trips.compliant_demand)
        assert np.array_equal(
            again.trips.noncompliant_demand, sc.trips.noncompliant_demand
        )
        assert again.experiment == sc.experiment

    def test_file_round_trip(self, tmp_path):
        sc = gen_grid(rows=2, cols=3, diagonals=False)
        path = tmp_path / "grid.yaml"
        save_scenario(sc, path)
        again = load_scenario(path)
        assert serialize_scenario(again) == serialize_scenario(sc)

    def test_zero_trip_scenario_round_trips(self):
        sc = parse_scenario(MINIMAL.split("trips:")[0])
        text = serialize_scenario(sc)
        assert parse_scenario(text).trips.n_trips == 0
        assert serialize_scenario(parse_scenario(text)) == text

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            load_scenario(tmp_path / "missing.yaml")


class TestGenGrid:
    def test_default_shape(self):
        sc = gen_grid()
        assert sc.network.n_nodes == 16
        # 24 straight neighbor pairs + 18 cell diagonals, one edge each way
        assert sc.network.n_edges == 84
        assert sc.trips.n_trips == 15  # 3 origins x 5 destinations
        assert [m.name for m in sc.modes] == ["public", "private"]
        assert sc.catalog.type_ids == ("grocery", "clinic", "cafe")

    def test_no_diagonals(self):
        sc = gen_grid(diagonals=False)
        assert sc.network.n_edges == 48

    def test_endpoints_are_disjoint_sets(self):
        sc = gen_grid()
        origins = {o for o, _ in sc.trips.trips}
        destinations = {d for _, d in sc.trips.trips}
        assert origins == {0, 8, 12}
        assert destinations == {3, 7, 10, 11, 15}
        assert not origins & destinations

    def test_demand_split(self):
        sc = gen_grid(trip_demand=900.0, public_share=0.5, noncompliance_rate=0.1)
        public, private = sc.trips.compliant_demand[:, 0]
        levels = sc.trips.noncompliant_demand[:, 0]
        assert public == 450.0
        assert private == pytest.approx(405.0, rel=1e-12)
        assert levels.sum() == pytest.approx(45.0, rel=1e-12)
        assert np.all(levels == levels[0])
        total = sc.trips.compliant_demand.sum(0) + sc.trips.noncompliant_demand.sum(0)
        assert np.allclose(total, 900.0, rtol=1e-12)

    def test_edge_times_near_nominal(self):
        # 400 m at 10 m/s is nominally 40 s; each direction gets its own
        # small deterministic perturbation.
        sc = gen_grid(diagonals=False)
        times = sc.network.free_flow_times
        assert np.all(times >= 40.0 * 0.97 - 1e-9)
        assert np.all(times <= 40.0 * 1.03 + 1e-9)
        assert len(np.unique(times)) > 1

    def test_generator_is_deterministic(self):
        a = serialize_scenario(gen_grid())
        b = serialize_scenario(gen_grid())
        assert a == b

    def test_positions_follow_the_grid(self):
        sc = gen_grid(rows=2, cols=2, edge_length=100.0)
        assert sc.network.nodes[0].position == (0.0, 0.0)
        assert sc.network.nodes[1].position == (100.0, 0.0)
        assert sc.network.nodes[2].position == (0.0, 100.0)

    def test_custom_endpoints(self):
        sc = gen_grid(origins=(0,), destinations=(3,))
        assert sc.trips.trips == ((0, 3),)
        assert sc.network.nodes[0].population == 1400.0

    def test_validation(self):
        with pytest.raises(ValueError, match="at least 2"):
            gen_grid(rows=1)
        with pytest.raises(ValueError, match="public_share"):
            gen_grid(public_share=1.5)
        with pytest.raises(ValueError, match="noncompliance_rate"):
            gen_grid(noncompliance_rate=-0.1)
        with pytest.raises(ValueError, match="outside the"):
            gen_grid(origins=(99,))
        with pytest.raises(ValueError, match="disjoint"):
            gen_grid(origins=(0,), destinations=(0,))

    def test_solvable_end_to_end(self):
        from equiflow.assignment import iterate_interaction

        sc = gen_grid(rows=2, cols=2, trip_demand=100.0)
        flows, nonflows, reports = iterate_interaction(
            sc.network, sc.modes, sc.trips,
            tol=sc.experiment.tol, rounds=sc.experiment.rounds,
        )
        assert all(r.converged for r in reports)
        assert flows.conservation_violation(sc.network, sc.trips) < 1e-9
