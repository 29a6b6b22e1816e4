"""Command-line entry points.

Commands: gen-grid (emit a grid scenario file), assign (solve the
interaction and write flow/equity tables), optimize (sweep mode weights),
mi-geo (score mobility from isochrones and POIs). Outputs are plain CSV and
JSON written with full float precision; running a command twice on the same
inputs produces byte-identical files.

Exit codes: 0 success, 1 usage error, 2 unreadable or invalid input,
3 infeasible assignment, 4 undefined metric.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from equiflow.assignment import (
    iterate_interaction,
    loaded_edge_times,
    mode_mean_travel_times,
    trip_travel_times,
)
from equiflow.bilevel import optimize_weights, private_mean_trip_time, tt_gap
from equiflow.equity import equity_report
from equiflow.errors import (
    InputError,
    SolveError,
    UndefinedGapError,
    UndefinedMetricError,
)
from equiflow.geodata import geodata_equity_report, load_isochrones, load_pois
from equiflow.scenario import gen_grid, load_scenario, save_scenario

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_UNDEFINED = 4


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; this tool reserves 2 for input files.
    def error(self, message):
        self.exit(EXIT_USAGE, f"error: usage: {message}\n")


def _fmt(value) -> str:
    """Full-precision decimal text for numbers; empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_rows(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(cell) if not isinstance(cell, str) else cell for cell in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n",
        encoding="utf-8",
    )


def _json_number(value):
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else repr(value)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen_grid(args) -> int:
    scenario = gen_grid(
        rows=args.rows,
        cols=args.cols,
        diagonals=not args.no_diagonals,
        edge_length=args.edge_length,
        origins=[int(x) for x in args.origins.split(",")] if args.origins else None,
        destinations=(
            [int(x) for x in args.destinations.split(",")] if args.destinations else None
        ),
        speed=args.speed,
        capacity=args.capacity,
        trip_demand=args.demand,
        public_share=args.public_share,
        noncompliance_rate=args.noncompliance_rate,
        gamma=args.gamma,
    )
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    save_scenario(scenario, out)
    print(f"wrote {out} ({scenario.network.n_nodes} nodes, "
          f"{scenario.network.n_edges} edges, {scenario.trips.n_trips} trips)")
    return EXIT_OK


def _edge_table(network, flows, nonflows):
    times = loaded_edge_times(network, flows, nonflows)
    compliant = flows.aggregate
    selfish = nonflows.aggregate
    rows = []
    for idx, edge in enumerate(network.edges):
        rows.append(
            (
                idx,
                edge.tail,
                edge.head,
                edge.free_flow_time,
                edge.capacity,
                compliant[idx],
                selfish[idx],
                compliant[idx] + selfish[idx],
                times[idx],
            )
        )
    return rows


def cmd_assign(args) -> int:
    scenario = load_scenario(args.scenario)
    rounds = args.rounds if args.rounds is not None else scenario.experiment.rounds
    tol = args.tol if args.tol is not None else scenario.experiment.tol
    out = _out_dir(args)
    network, modes, trips = scenario.network, scenario.modes, scenario.trips

    per_round = []
    flows = nonflows = None
    for upto in range(1, rounds + 1):
        flows, nonflows, reports = iterate_interaction(
            network, modes, trips, tol=tol, rounds=upto,
            max_iters=scenario.experiment.max_iters,
        )
        edge_rows = _edge_table(network, flows, nonflows)
        _write_rows(
            out / f"edge_times_round{upto}.csv",
            ("edge", "from", "to", "free_flow_time", "capacity",
             "compliant_load", "noncompliant_load", "total_load", "travel_time"),
            edge_rows,
        )
        try:
            private_mean = private_mean_trip_time(network, modes, flows, nonflows, trips)
        except UndefinedGapError:
            private_mean = None
        report = reports[-1]
        per_round.append(
            {
                "round": upto,
                "mean_edge_time": _json_number(np.mean([r[-1] for r in edge_rows])),
                "mean_private_compliant_trip_time": _json_number(private_mean),
                "objective": _json_number(report.objective_trace[-1]),
                "relative_gap": _json_number(
                    report.gap_trace[-1] if report.gap_trace else None
                ),
                "fw_iterations": report.iterations,
                "fw_converged": report.converged,
            }
        )

    times = trip_travel_times(network, flows, nonflows, trips, modes)
    trip_rows = []
    for mode in modes:
        for n, (o, d) in enumerate(trips.trips):
            trip_rows.append((mode.name, n, o, d, times[mode.id, n]))
    _write_rows(
        out / "trip_times.csv",
        ("mode", "trip", "origin", "destination", "travel_time"),
        trip_rows,
    )

    summary = {
        "rounds": rounds,
        "tol": tol,
        "weights": {mode.name: mode.weight for mode in modes},
        "per_round": per_round,
        "mode_mean_times": {
            mode.name: _json_number(value)
            for mode, value in zip(
                modes, mode_mean_travel_times(network, flows, nonflows, trips, modes)
            )
        },
    }
    try:
        equity = equity_report(network, modes, trips, scenario.catalog, times)
        summary["mem"] = _json_number(equity.mem)
        summary["mobility_index"] = {
            str(node): _json_number(value)
            for node, value in zip(equity.origins, equity.mi)
        }
    except UndefinedMetricError:
        summary["mem"] = None
        summary["mobility_index"] = None
    try:
        summary["tt_gap"] = _json_number(
            tt_gap(network, modes, flows, nonflows, trips, times)
        )
    except UndefinedGapError:
        summary["tt_gap"] = None
    _write_json(out / "summary.json", summary)
    return EXIT_OK


def cmd_optimize(args) -> int:
    scenario = load_scenario(args.scenario)
    gamma = args.gamma if args.gamma is not None else scenario.experiment.gamma
    resolution = (
        args.resolution if args.resolution is not None else scenario.experiment.resolution
    )
    rounds = args.rounds if args.rounds is not None else scenario.experiment.rounds
    tol = args.tol if args.tol is not None else scenario.experiment.tol
    out = _out_dir(args)
    result = optimize_weights(
        scenario.network,
        scenario.modes,
        scenario.trips,
        scenario.catalog,
        gamma=gamma,
        grid_resolution=resolution,
        rounds=rounds,
        tol=tol,
        max_iters=scenario.experiment.max_iters,
        jobs=args.jobs,
    )
    names = [mode.name for mode in scenario.modes]
    header = (
        ["candidate"]
        + [f"weight_{name}" for name in names]
        + ["mem", "tt_gap", "feasible"]
        + [f"mean_time_{name}" for name in names]
    )
    rows = []
    for idx, outcome in enumerate(result.candidates):
        rows.append(
            [idx]
            + list(outcome.candidate.weights)
            + [outcome.mem, outcome.gap, str(outcome.feasible).lower()]
            + list(outcome.mode_mean_times)
        )
    _write_rows(out / "sweep.csv", header, rows)

    selected = None
    if result.selected is not None:
        selected = {
            "weights": {
                name: _json_number(w)
                for name, w in zip(names, result.selected.candidate.weights)
            },
            "mem": _json_number(result.selected.mem),
            "tt_gap": _json_number(result.selected.gap),
        }
    _write_json(
        out / "summary.json",
        {
            "gamma": _json_number(gamma),
            "resolution": resolution,
            "rounds": rounds,
            "candidates": len(result.candidates),
            "feasible_candidates": sum(1 for c in result.candidates if c.feasible),
            "selected": selected,
        },
    )
    if selected is None:
        print("no feasible weight vector under the given gap budget")
    else:
        pretty = ", ".join(
            f"{name}={w}" for name, w in selected["weights"].items()
        )
        print(f"selected weights: {pretty} (mem {selected['mem']})")
    return EXIT_OK


def cmd_mi_geo(args) -> int:
    scenario = load_scenario(args.scenario)
    isochrones = load_isochrones(args.isochrones)
    pois = load_pois(args.pois, scenario.catalog)
    out = _out_dir(args)
    report = geodata_equity_report(
        scenario.network.nodes, scenario.modes, isochrones, pois, scenario.catalog
    )
    breakdown_rows = []
    for i, node in enumerate(report.origins):
        for mode in scenario.modes:
            for s, st in enumerate(scenario.catalog.service_types):
                breakdown_rows.append(
                    (node, mode.name, st.id, report.accessibility[i, mode.id, s])
                )
    _write_rows(
        out / "mi_breakdown.csv",
        ("node", "mode", "service_type", "reachable_count"),
        breakdown_rows,
    )
    _write_rows(
        out / "mi_nodes.csv",
        ("node", "population", "mobility_index"),
        [
            (node, report.populations[i], report.mi[i])
            for i, node in enumerate(report.origins)
        ],
    )
    _write_json(out / "summary.json", {"mem": _json_number(report.mem)})
    print(f"mem: {report.mem!r}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser wiring
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="equiflow",
        description="Multi-modal traffic assignment with equity scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-grid", help="generate a grid scenario file")
    gen.add_argument("--rows", type=int, default=4)
    gen.add_argument("--cols", type=int, default=4)
    gen.add_argument("--no-diagonals", action="store_true")
    gen.add_argument("--edge-length", type=float, default=400.0, help="meters")
    gen.add_argument("--speed", type=float, default=10.0, help="meters per second")
    gen.add_argument("--capacity", type=float, default=1200.0, help="passengers/hour")
    gen.add_argument("--demand", type=float, default=900.0,
                     help="total passengers/hour per trip")
    gen.add_argument("--public-share", type=float, default=0.5)
    gen.add_argument("--noncompliance-rate", type=float, default=0.1)
    gen.add_argument("--gamma", type=float, default=math.inf,
                     help="travel-time gap budget (s)")
    gen.add_argument("--origins", help="comma-separated node ids")
    gen.add_argument("--destinations", help="comma-separated node ids")
    gen.add_argument("--out", required=True, help="scenario file to write")
    gen.set_defaults(func=cmd_gen_grid)

    assign = sub.add_parser("assign", help="solve the assignment interaction")
    assign.add_argument("--scenario", required=True)
    assign.add_argument("--out", required=True, help="output directory")
    assign.add_argument("--rounds", type=int, default=None)
    assign.add_argument("--tol", type=float, default=None)
    assign.set_defaults(func=cmd_assign)

    opt = sub.add_parser("optimize", help="sweep mode weights for equity")
    opt.add_argument("--scenario", required=True)
    opt.add_argument("--out", required=True, help="output directory")
    opt.add_argument("--gamma", type=float, default=None)
    opt.add_argument("--resolution", type=int, default=None)
    opt.add_argument("--rounds", type=int, default=None)
    opt.add_argument("--tol", type=float, default=None)
    opt.add_argument("--jobs", type=int, default=max(1, os.cpu_count() or 1))
    opt.set_defaults(func=cmd_optimize)

    geo = sub.add_parser("mi-geo", help="mobility index from map data")
    geo.add_argument("--scenario", required=True,
                     help="scenario file providing nodes, modes, services")
    geo.add_argument("--isochrones", required=True, help="GeoJSON feature collection")
    geo.add_argument("--pois", required=True, help="CSV of points of interest")
    geo.add_argument("--out", required=True, help="output directory")
    geo.set_defaults(func=cmd_mi_geo)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InputError as exc:
        return _fail(EXIT_INPUT, exc)
    except SolveError as exc:
        return _fail(EXIT_INFEASIBLE, exc)
    except UndefinedMetricError as exc:
        return _fail(EXIT_UNDEFINED, exc)
    except OSError as exc:
        return _fail(EXIT_INPUT, exc)
    except ValueError as exc:
        return _fail(EXIT_INPUT, exc)


def _fail(code: int, exc: Exception) -> int:
    message = " ".join(str(exc).split())
    print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
