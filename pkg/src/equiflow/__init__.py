"""Multi-modal traffic assignment with accessibility-equity scoring.

The package routes compliant demand system-optimally under per-mode
objective weights, lets non-compliant travelers respond selfishly in
bounded-rationality levels, scores each origin's access to services, and
searches the weight simplex for the most equitable configuration whose
burden on compliant drivers stays within budget.
"""

from equiflow.assignment import (
    CompliantFlows,
    ModeSpec,
    N_LEVELS,
    NoncompliantFlows,
    SolveReport,
    TripTable,
    iterate_interaction,
    loaded_edge_times,
    mode_mean_travel_times,
    solve_noncompliant,
    solve_system_routing,
    system_objective,
    trip_travel_times,
)
from equiflow.bilevel import (
    CandidateOutcome,
    SweepResult,
    WeightCandidate,
    optimize_weights,
    private_mean_trip_time,
    tt_gap,
)
from equiflow.equity import (
    EquityReport,
    ServiceCatalog,
    ServiceType,
    accessibility_count,
    equity_report,
    mem,
    mobility_index,
)
from equiflow.errors import (
    DegenerateObjectiveError,
    EquiflowError,
    InfeasibleTripError,
    InputError,
    MissingIsochroneError,
    SolveError,
    UndefinedGapError,
    UndefinedMetricError,
)
from equiflow.geodata import (
    Isochrone,
    PoiRecord,
    count_pois,
    geodata_equity_report,
    load_isochrones,
    load_pois,
    mi_from_geodata,
    point_in_polygon,
)
from equiflow.network import (
    BPR_COEFFICIENT,
    BPR_EXPONENT,
    EdgeAttr,
    Network,
    NodeAttr,
    bpr_latency,
    bpr_latency_derivative,
    dijkstra_from,
    dijkstra_to,
    edge_cost_vector,
    edge_travel_times,
    edge_travel_time_derivatives,
    shortest_path,
)
from equiflow.scenario import (
    ExperimentConfig,
    Scenario,
    gen_grid,
    load_scenario,
    parse_scenario,
    save_scenario,
    serialize_scenario,
)

__version__ = "0.1.0"
