"""Map-derived accessibility: isochrone polygons, point-of-interest tables,
and the mobility index computed from them instead of from a solved network.

Isochrones arrive as a GeoJSON-style FeatureCollection of Polygon or
MultiPolygon features tagged with node, mode, and threshold properties.
Points of interest arrive as a delimited text table with x, y, and
service_type columns. Containment is even-odd ray casting over all rings,
with boundary points counting as inside.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from equiflow.assignment import check_modes
from equiflow.equity import EquityReport, ServiceCatalog, mem, mobility_index
from equiflow.errors import InputError, MissingIsochroneError
from equiflow.network import NodeAttr

Ring = tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class PoiRecord:
    """One point of interest."""

    x: float
    y: float
    service_type: str

    def __post_init__(self) -> None:
        if not np.isfinite(self.x) or not np.isfinite(self.y):
            raise ValueError("poi coordinates must be finite")
        if not self.service_type:
            raise ValueError("poi service_type must be non-empty")


def _orientation(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _on_segment(ax, ay, bx, by, px, py):
    if _orientation(ax, ay, bx, by, px, py) != 0.0:
        return False
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def _segments_intersect(p1, p2, p3, p4):
    d1 = _orientation(*p3, *p4, *p1)
    d2 = _orientation(*p3, *p4, *p2)
    d3 = _orientation(*p1, *p2, *p3)
    d4 = _orientation(*p1, *p2, *p4)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0:
        return True
    for a, b, p in ((p3, p4, p1), (p3, p4, p2), (p1, p2, p3), (p1, p2, p4)):
        if _on_segment(*a, *b, *p):
            return True
    return False


def _normalize_ring(vertices, where: str) -> Ring:
    points = []
    for i, vertex in enumerate(vertices):
        try:
            x, y = vertex
        except (TypeError, ValueError):
            raise ValueError(f"{where}: vertex {i} is not an (x, y) pair") from None
        points.append((float(x), float(y)))
    if len(points) >= 2 and points[0] == points[-1]:
        points.pop()  # accept closed-ring input, store open
    if len(points) < 3:
        raise ValueError(f"{where}: ring needs at least 3 distinct vertices")
    m = len(points)
    for i in range(m):
        if points[i] == points[(i + 1) % m]:
            raise ValueError(f"{where}: zero-length segment at vertex {i}")
    # Reject self-intersection: non-adjacent segments may not touch at all,
    # adjacent segments may meet only at their shared vertex.
    segs = [(points[i], points[(i + 1) % m]) for i in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            adjacent = j == i + 1 or (i == 0 and j == m - 1)
            a1, a2 = segs[i]
            b1, b2 = segs[j]
            if adjacent:
                shared = a2 if j == i + 1 else a1
                other_a = a1 if shared == a2 else a2
                other_b = b2 if shared == b1 else b1
                if _on_segment(*shared, *other_b, *other_a) or _on_segment(
                    *shared, *other_a, *other_b
                ):
                    raise ValueError(f"{where}: ring folds back on itself at vertex {j}")
            elif _segments_intersect(a1, a2, b1, b2):
                raise ValueError(
                    f"{where}: ring self-intersects (segments {i} and {j})"
                )
    return tuple(points)


@dataclass(frozen=True)
class Isochrone:
    """Reachable region for one (node, mode) within a time threshold,
    as one or more simple polygon rings interpreted with even-odd parity."""

    node: int
    mode: int
    threshold: float
    rings: tuple[Ring, ...]

    def __post_init__(self) -> None:
        if self.node < 0 or self.mode < 0:
            raise ValueError("isochrone node and mode ids must be >= 0")
        if not self.threshold > 0:
            raise ValueError("isochrone threshold must be > 0")
        if not self.rings:
            raise ValueError("isochrone needs at least one ring")
        where = f"isochrone (node {self.node}, mode {self.mode})"
        rings = tuple(
            _normalize_ring(ring, f"{where} ring {i}")
            for i, ring in enumerate(self.rings)
        )
        object.__setattr__(self, "rings", rings)


def point_in_polygon(point, polygon: Isochrone) -> bool:
    """Even-odd containment over all rings; boundary points are inside."""
    px, py = float(point[0]), float(point[1])
    for ring in polygon.rings:
        m = len(ring)
        for i in range(m):
            ax, ay = ring[i]
            bx, by = ring[(i + 1) % m]
            if _on_segment(ax, ay, bx, by, px, py):
                return True
    inside = False
    for ring in polygon.rings:
        m = len(ring)
        for i in range(m):
            ax, ay = ring[i]
            bx, by = ring[(i + 1) % m]
            if (ay > py) != (by > py):
                x_cross = ax + (py - ay) * (bx - ax) / (by - ay)
                if px < x_cross:
                    inside = not inside
    return inside


def count_pois(polygon: Isochrone, pois, service_type: str) -> int:
    """How many points of interest of one type fall inside the polygon."""
    return sum(
        1
        for poi in pois
        if poi.service_type == service_type and point_in_polygon((poi.x, poi.y), polygon)
    )


def isochrone_index(isochrones) -> dict[tuple[int, int], Isochrone]:
    """Index isochrones by (node, mode); duplicates are rejected."""
    index: dict[tuple[int, int], Isochrone] = {}
    for iso in isochrones:
        key = (iso.node, iso.mode)
        if key in index:
            raise InputError(f"duplicate isochrone for node {key[0]}, mode {key[1]}")
        index[key] = iso
    return index


def mi_from_geodata(node: NodeAttr, modes, isochrones, pois, catalog: ServiceCatalog) -> float:
    """Mobility index of one node from map data alone: count reachable
    services inside each mode's isochrone and fold them exactly as the
    network-based index does."""
    modes = check_modes(modes)
    index = isochrones if isinstance(isochrones, dict) else isochrone_index(isochrones)
    sigma = np.zeros((len(modes), len(catalog.service_types)))
    for mode in modes:
        iso = index.get((node.id, mode.id))
        if iso is None:
            raise MissingIsochroneError(
                f"no isochrone for node {node.id}, mode {mode.name}"
            )
        for s, st in enumerate(catalog.service_types):
            sigma[mode.id, s] = count_pois(iso, pois, st.id)
    return mobility_index(node, modes, sigma, catalog)


def geodata_equity_report(nodes, modes, isochrones, pois, catalog: ServiceCatalog) -> EquityReport:
    """Score a set of nodes from isochrones and POIs, then fold into the
    population-weighted equity value."""
    modes = check_modes(modes)
    nodes = tuple(nodes)
    if not nodes:
        raise InputError("no nodes to score")
    index = isochrone_index(isochrones)
    n_types = len(catalog.service_types)
    access = np.zeros((len(nodes), len(modes), n_types))
    mi = np.zeros(len(nodes))
    for i, node in enumerate(nodes):
        for mode in modes:
            iso = index.get((node.id, mode.id))
            if iso is None:
                raise MissingIsochroneError(
                    f"no isochrone for node {node.id}, mode {mode.name}"
                )
            for s, st in enumerate(catalog.service_types):
                access[i, mode.id, s] = count_pois(iso, pois, st.id)
        mi[i] = mobility_index(node, modes, access[i], catalog)
    populations = np.array([node.population for node in nodes])
    value = mem(mi, populations)
    return EquityReport(
        origins=tuple(node.id for node in nodes),
        mi=mi,
        populations=populations,
        mem=value,
        accessibility=access,
    )


# ---------------------------------------------------------------------------
# File loading
# ---------------------------------------------------------------------------


def load_isochrones(path) -> tuple[Isochrone, ...]:
    """Read a FeatureCollection of tagged Polygon/MultiPolygon features."""
    try:
        with open(path, encoding="utf-8") as handle:
            doc = json.load(handle)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise InputError(f"{path}: expected a FeatureCollection")
    features = doc.get("features")
    if not isinstance(features, list):
        raise InputError(f"{path}: features must be a list")
    isochrones = []
    for i, feature in enumerate(features):
        where = f"{path}: features[{i}]"
        if not isinstance(feature, dict):
            raise InputError(f"{where}: expected a Feature object")
        props = feature.get("properties") or {}
        geometry = feature.get("geometry") or {}
        try:
            node = int(props["node"])
            mode = int(props["mode"])
            threshold = float(props["threshold"])
        except (KeyError, TypeError, ValueError):
            raise InputError(
                f"{where}: properties need integer node, integer mode, "
                "numeric threshold"
            ) from None
        gtype = geometry.get("type")
        coords = geometry.get("coordinates")
        if gtype == "Polygon":
            ring_sets = [coords]
        elif gtype == "MultiPolygon":
            ring_sets = coords
        else:
            raise InputError(f"{where}: geometry must be Polygon or MultiPolygon")
        try:
            rings = tuple(ring for rings in ring_sets for ring in rings)
            isochrones.append(
                Isochrone(node=node, mode=mode, threshold=threshold, rings=rings)
            )
        except (TypeError, ValueError) as exc:
            raise InputError(f"{where}: {exc}") from None
    return tuple(isochrones)


def load_pois(path, catalog: ServiceCatalog | None = None) -> tuple[PoiRecord, ...]:
    """Read a delimited POI table with x, y, service_type columns. When a
    catalog is given, rows naming unknown service types are rejected."""
    try:
        with open(path, encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None:
                return ()
            missing = {"x", "y", "service_type"} - set(reader.fieldnames)
            if missing:
                raise InputError(
                    f"{path}: missing columns {', '.join(sorted(missing))}"
                )
            records = []
            for row_no, row in enumerate(reader, start=2):
                try:
                    poi = PoiRecord(
                        x=float(row["x"]),
                        y=float(row["y"]),
                        service_type=(row["service_type"] or "").strip(),
                    )
                except (TypeError, ValueError) as exc:
                    raise InputError(f"{path}:{row_no}: {exc}") from None
                if catalog is not None and not catalog.has_type(poi.service_type):
                    raise InputError(
                        f"{path}:{row_no}: unknown service type {poi.service_type!r}"
                    )
                records.append(poi)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    return tuple(records)
