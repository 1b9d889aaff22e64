"""
Core domain types for the waste-collection planner.

Everything downstream (matrix construction, forecasting, selection, routing,
the planning service) shares these types. All of them are immutable after
construction; validation is report-based so that invalid data can still be
loaded, inspected and reported on.
"""

import csv
import json
from dataclasses import dataclass
from datetime import date as Date
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

WEEKDAY_NAMES = ("monday", "tuesday", "wednesday", "thursday", "friday",
                 "saturday", "sunday")


class InsufficientHistoryError(ValueError):
    """Raised when a container's collection history is too short to use."""


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 coordinate in decimal degrees."""
    lat: float
    lon: float


@dataclass(frozen=True)
class Container:
    """A collection point: one public waste container.

    capacity_kg is the maximum waste load, unload_time_s the time a crew
    needs to empty it, and small_only marks containers reachable only by
    small vehicles (narrow streets).
    """
    id: str
    lat: float
    lon: float
    capacity_kg: float
    unload_time_s: float = 0.0
    small_only: bool = False
    has_sensor: bool = False
    address: str = ""
    group: str = ""

    @property
    def location(self) -> GeoPoint:
        return GeoPoint(self.lat, self.lon)


@dataclass(frozen=True)
class Vehicle:
    """A collection truck with a load limit and a narrow-street access flag."""
    id: str
    capacity_kg: float
    small: bool = False
    cost_per_km: float = 0.0
    registration: str = ""


@dataclass(frozen=True)
class CostMatrix:
    """Pairwise travel costs over depot + containers.

    Index 0 is the depot; container i sits at index ``index_map[id] >= 1``.
    Matrices may be asymmetric: entry (i, j) is the cost of travelling
    i -> j and need not equal (j, i). No triangle inequality is assumed.
    """
    distance: np.ndarray   # meters, (n+1) x (n+1)
    duration: np.ndarray   # seconds, (n+1) x (n+1)
    ids: Tuple[str, ...]   # container ids in matrix order (index 1..n)

    def __post_init__(self):
        self.distance.setflags(write=False)
        self.duration.setflags(write=False)

    @property
    def node_count(self) -> int:
        return len(self.ids) + 1

    @property
    def index_map(self) -> Dict[str, int]:
        return {cid: i + 1 for i, cid in enumerate(self.ids)}

    def to_dict(self) -> dict:
        return {
            "ids": list(self.ids),
            "distance": self.distance.tolist(),
            "duration": self.duration.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CostMatrix":
        return cls(
            distance=np.asarray(d["distance"], dtype=float),
            duration=np.asarray(d["duration"], dtype=float),
            ids=tuple(d["ids"]),
        )


@dataclass(frozen=True)
class PlanningInstance:
    """One routing problem: containers with today's demands, a fleet, costs.

    demands maps container id -> kg to collect (estimated fill * capacity).
    unassigned_penalty is added to the fitness, in meters, for every
    penalized container left out of all routes.
    """
    depot: GeoPoint
    containers: Tuple[Container, ...]
    demands: Dict[str, float]
    vehicles: Tuple[Vehicle, ...]
    matrix: CostMatrix
    unassigned_penalty: float = 500.0

    def container_by_id(self, cid: str) -> Container:
        for c in self.containers:
            if c.id == cid:
                return c
        raise KeyError(cid)


@dataclass(frozen=True)
class Route:
    """An ordered visit list for one vehicle, depot implicit at both ends."""
    vehicle_id: str
    container_ids: Tuple[str, ...]
    distance_m: float = 0.0
    duration_s: float = 0.0
    load_kg: float = 0.0

    def to_dict(self) -> dict:
        return {
            "vehicle_id": self.vehicle_id,
            "container_ids": list(self.container_ids),
            "distance_m": self.distance_m,
            "duration_s": self.duration_s,
            "load_kg": self.load_kg,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Route":
        return cls(d["vehicle_id"], tuple(d["container_ids"]),
                   d["distance_m"], d["duration_s"], d["load_kg"])


@dataclass(frozen=True)
class Solution:
    """A full assignment: one route per vehicle plus unassigned containers."""
    routes: Tuple[Route, ...]
    unassigned: Tuple[str, ...]
    fitness: float

    def assigned_ids(self) -> List[str]:
        out: List[str] = []
        for r in self.routes:
            out.extend(r.container_ids)
        return out

    def to_dict(self) -> dict:
        return {
            "routes": [r.to_dict() for r in self.routes],
            "unassigned": list(self.unassigned),
            "fitness": self.fitness,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Solution":
        return cls(tuple(Route.from_dict(r) for r in d["routes"]),
                   tuple(d["unassigned"]), d["fitness"])


@dataclass(frozen=True)
class FillRecord:
    """One collection event: the truck emptied the container on `date`
    and weighed `collected_kg`. sensor_fill is an optional volumetric
    reading (fill fraction) taken the same day, when the container has one.
    """
    container_id: str
    date: Date
    collected_kg: float
    collected_yesterday: bool = False
    sensor_fill: Optional[float] = None

    @property
    def day_of_week(self) -> str:
        return WEEKDAY_NAMES[self.date.weekday()]


@dataclass(frozen=True)
class FillRateSeries:
    """Gap-free estimated daily fill increments for one container.

    rates[k] is the fill fraction added on day start + k. collection_dates
    records the days a truck actually emptied the container, which feeds
    the collected-yesterday feature during forecasting.
    """
    container_id: str
    start: Date
    rates: Tuple[float, ...]
    collection_dates: Tuple[Date, ...] = ()

    def __len__(self) -> int:
        return len(self.rates)

    @property
    def end(self) -> Date:
        from datetime import timedelta
        return self.start + timedelta(days=len(self.rates) - 1)

    def date_of(self, k: int) -> Date:
        from datetime import timedelta
        return self.start + timedelta(days=k)


@dataclass(frozen=True)
class Forecast:
    """Predicted fill fraction of one container on one date.

    predicted_fill is clamped to [0, 1]; overflow marks predictions that
    exceeded 1 before clamping (worth an alert, impossible as a load).
    """
    container_id: str
    date: Date
    predicted_fill: float
    model_tag: str
    overflow: bool = False

    def to_dict(self) -> dict:
        return {
            "container_id": self.container_id,
            "date": self.date.isoformat(),
            "predicted_fill": self.predicted_fill,
            "model_tag": self.model_tag,
            "overflow": self.overflow,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Forecast":
        return cls(d["container_id"], Date.fromisoformat(d["date"]),
                   d["predicted_fill"], d["model_tag"], d.get("overflow", False))


# ---------------------------------------------------------------------------
# Validation


def validate_instance(instance: PlanningInstance) -> List[str]:
    """Check every instance invariant and return the list of violations.

    An empty list means the instance is fully valid. Violations name the
    offending entity and the broken rule; nothing raises.
    """
    report: List[str] = []
    seen = set()
    for c in instance.containers:
        if c.id in seen:
            report.append(f"container {c.id}: duplicate id")
        seen.add(c.id)
        if c.capacity_kg <= 0:
            report.append(f"container {c.id}: capacity must be positive")
        if c.unload_time_s < 0:
            report.append(f"container {c.id}: unload time must be non-negative")
        if not -90.0 <= c.lat <= 90.0:
            report.append(f"container {c.id}: latitude out of range")
        if not -180.0 <= c.lon <= 180.0:
            report.append(f"container {c.id}: longitude out of range")
        demand = instance.demands.get(c.id)
        if demand is not None:
            if demand < 0:
                report.append(f"container {c.id}: negative demand")
            elif demand > c.capacity_kg:
                report.append(f"container {c.id}: demand exceeds capacity")

    seen_v = set()
    for v in instance.vehicles:
        if v.id in seen_v:
            report.append(f"vehicle {v.id}: duplicate id")
        seen_v.add(v.id)
        if v.capacity_kg <= 0:
            report.append(f"vehicle {v.id}: capacity must be positive")
    if not instance.vehicles:
        report.append("fleet: no vehicles")

    has_small_vehicle = any(v.small for v in instance.vehicles)
    if any(c.small_only for c in instance.containers) and not has_small_vehicle:
        report.append("fleet: small-access containers but no compatible vehicle")

    m = instance.matrix
    n = m.node_count
    for name, grid in (("distance", m.distance), ("duration", m.duration)):
        if grid.shape != (n, n):
            report.append(f"matrix: {name} shape {grid.shape} != ({n}, {n})")
            continue
        if not np.all(np.isfinite(grid)):
            report.append(f"matrix: {name} has non-finite entries")
        if np.any(grid < 0):
            report.append(f"matrix: {name} has negative entries")
        if np.any(np.diagonal(grid) != 0):
            report.append(f"matrix: {name} diagonal not zero")
    known = set(m.ids)
    for c in instance.containers:
        if c.id not in known:
            report.append(f"matrix: container {c.id} missing from matrix")

    if instance.unassigned_penalty <= 0:
        report.append("instance: unassigned penalty must be positive")
    return report


# ---------------------------------------------------------------------------
# File formats. All files are comma-separated UTF-8 with a header row.


def _fmt_bool(b: bool) -> str:
    return "true" if b else "false"


def parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "1", "yes", "y"):
        return True
    if v in ("false", "0", "no", "n", ""):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def write_containers(path, containers: Iterable[Container]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["id", "lat", "lon", "capacity_kg", "unload_time_s",
                    "small_only", "has_sensor", "address", "group"])
        for c in containers:
            w.writerow([c.id, repr(c.lat), repr(c.lon), repr(c.capacity_kg),
                        repr(c.unload_time_s), _fmt_bool(c.small_only),
                        _fmt_bool(c.has_sensor), c.address, c.group])


def read_containers(path) -> List[Container]:
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            out.append(Container(
                id=row["id"],
                lat=float(row["lat"]),
                lon=float(row["lon"]),
                capacity_kg=float(row["capacity_kg"]),
                unload_time_s=float(row["unload_time_s"]),
                small_only=parse_bool(row["small_only"]),
                has_sensor=parse_bool(row["has_sensor"]),
                address=row.get("address", ""),
                group=row.get("group", ""),
            ))
    return out


def write_vehicles(path, vehicles: Iterable[Vehicle]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["id", "capacity_kg", "small", "cost_per_km", "registration"])
        for v in vehicles:
            w.writerow([v.id, repr(v.capacity_kg), _fmt_bool(v.small),
                        repr(v.cost_per_km), v.registration])


def read_vehicles(path) -> List[Vehicle]:
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            out.append(Vehicle(
                id=row["id"],
                capacity_kg=float(row["capacity_kg"]),
                small=parse_bool(row["small"]),
                cost_per_km=float(row["cost_per_km"]),
                registration=row.get("registration", ""),
            ))
    return out


def write_history(path, records: Iterable[FillRecord]) -> None:
    records = list(records)
    with_sensor = any(r.sensor_fill is not None for r in records)
    header = ["container_id", "date", "collected_kg", "collected_yesterday"]
    if with_sensor:
        header.append("sensor_fill")
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for r in records:
            row = [r.container_id, r.date.isoformat(), repr(r.collected_kg),
                   _fmt_bool(r.collected_yesterday)]
            if with_sensor:
                row.append("" if r.sensor_fill is None else repr(r.sensor_fill))
            w.writerow(row)


def read_history(path) -> List[FillRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            sensor = row.get("sensor_fill", "")
            out.append(FillRecord(
                container_id=row["container_id"],
                date=Date.fromisoformat(row["date"]),
                collected_kg=float(row["collected_kg"]),
                collected_yesterday=parse_bool(row["collected_yesterday"]),
                sensor_fill=float(sensor) if sensor not in ("", None) else None,
            ))
    return out


def write_forecasts(path, forecasts: Iterable[Forecast]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["container_id", "date", "predicted_fill", "model_tag"])
        for fc in forecasts:
            w.writerow([fc.container_id, fc.date.isoformat(),
                        repr(fc.predicted_fill), fc.model_tag])


def read_forecasts(path) -> List[Forecast]:
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            out.append(Forecast(
                container_id=row["container_id"],
                date=Date.fromisoformat(row["date"]),
                predicted_fill=float(row["predicted_fill"]),
                model_tag=row["model_tag"],
            ))
    return out


def write_depot(path, depot: GeoPoint) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["lat", "lon"])
        w.writerow([repr(depot.lat), repr(depot.lon)])


def read_depot(path) -> GeoPoint:
    with open(path, newline="", encoding="utf-8") as f:
        row = next(csv.DictReader(f))
    return GeoPoint(float(row["lat"]), float(row["lon"]))


def dump_json(obj, path) -> None:
    Path(path).write_text(to_canonical_json(obj), encoding="utf-8")


def to_canonical_json(obj) -> str:
    """Serialize deterministically: sorted keys, stable float repr."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False)
