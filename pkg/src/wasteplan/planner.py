"""
Day-plan orchestration: forecasts -> selection -> routing -> metrics.

A Store is a directory of input files (containers, vehicles, history,
depot, cost matrices) plus an append-only plans/ directory. Plan ids are
content hashes of the inputs and the request, so identical requests against
identical data always yield the same id and the same stored document, and a
rerun returns the persisted plan untouched.
"""

import hashlib
import json
from dataclasses import dataclass
from datetime import date as Date
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

from . import costmatrix, forecast as fc, router, selection as sel
from .model import (Container, CostMatrix, FillRecord, Forecast, GeoPoint,
                    PlanningInstance, Route, Solution, read_containers,
                    read_depot, read_history, read_vehicles, to_canonical_json)

DEFAULT_PENALTY_M = 500.0


class Store:
    """File layout for one deployment area."""

    def __init__(self, root):
        self.root = Path(root)
        self.plans_dir = self.root / "plans"

    # -- input files

    @property
    def containers_path(self) -> Path:
        return self.root / "containers.csv"

    @property
    def vehicles_path(self) -> Path:
        return self.root / "vehicles.csv"

    @property
    def history_path(self) -> Path:
        return self.root / "history.csv"

    @property
    def depot_path(self) -> Path:
        return self.root / "depot.csv"

    @property
    def matrix_paths(self) -> Tuple[Path, Path, Path]:
        return (self.root / "matrix_distance.csv",
                self.root / "matrix_duration.csv",
                self.root / "matrix_ids.txt")

    def containers(self) -> List[Container]:
        return read_containers(self.containers_path)

    def vehicles(self):
        return read_vehicles(self.vehicles_path)

    def history(self) -> List[FillRecord]:
        return read_history(self.history_path)

    def depot(self) -> GeoPoint:
        return read_depot(self.depot_path)

    def has_matrix(self) -> bool:
        return all(p.exists() for p in self.matrix_paths)

    def matrix(self) -> CostMatrix:
        dist, dur, ids = self.matrix_paths
        if not self.has_matrix():
            raise ValueError("cost matrix not built for this store")
        return costmatrix.load_matrix(dist, dur, costmatrix.read_id_order(ids))

    def save_matrix(self, matrix: CostMatrix) -> None:
        dist, dur, ids = self.matrix_paths
        costmatrix.save_matrix(matrix, dist, dur, ids)

    def data_fingerprint(self) -> str:
        """Hash of every input file the planner reads."""
        h = hashlib.sha256()
        for p in (self.containers_path, self.vehicles_path, self.history_path,
                  self.depot_path, *self.matrix_paths):
            h.update(p.name.encode())
            h.update(p.read_bytes() if p.exists() else b"<absent>")
        return h.hexdigest()

    # -- plans

    def plan_path(self, plan_id: str) -> Path:
        return self.plans_dir / f"{plan_id}.json"

    def save_plan(self, document: dict) -> None:
        """Append-only: an existing plan file is never rewritten."""
        self.plans_dir.mkdir(parents=True, exist_ok=True)
        path = self.plan_path(document["plan_id"])
        if path.exists():
            return
        path.write_text(to_canonical_json(document), encoding="utf-8")

    def load_plan(self, plan_id: str) -> dict:
        path = self.plan_path(plan_id)
        if not path.exists():
            raise KeyError(plan_id)
        return json.loads(path.read_text(encoding="utf-8"))

    def list_plans(self) -> List[dict]:
        if not self.plans_dir.exists():
            return []
        out = []
        for p in sorted(self.plans_dir.glob("*.json")):
            doc = json.loads(p.read_text(encoding="utf-8"))
            out.append({"plan_id": doc["plan_id"], "date": doc["date"],
                        "model_tag": doc["model_tag"]})
        return out


@dataclass(frozen=True)
class PlanRequest:
    date: Date
    criteria: sel.SelectionCriteria = sel.SelectionCriteria()
    solver: router.SolverConfig = router.SolverConfig()
    model_tag: str = "gp"
    window: int = fc.DEFAULT_WINDOW
    penalize_optional: bool = False

    def to_dict(self) -> dict:
        return {
            "date": self.date.isoformat(),
            "criteria": {
                "mandatory_threshold": self.criteria.mandatory_threshold,
                "optional_threshold": self.criteria.optional_threshold,
                "force_include": sorted(self.criteria.force_include),
                "force_exclude": sorted(self.criteria.force_exclude),
                "inclusive": self.criteria.inclusive,
            },
            "solver": self.solver.to_dict(),
            "model_tag": self.model_tag,
            "window": self.window,
            "penalize_optional": self.penalize_optional,
        }


def plan_id_for(request: PlanRequest, fingerprint: str) -> str:
    payload = {"request": request.to_dict(), "data": fingerprint}
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode()).hexdigest()[:20]


def forecast_for_date(containers: Sequence[Container],
                      records: Sequence[FillRecord], planning_date: Date,
                      model_tag: str, window: int = fc.DEFAULT_WINDOW,
                      **fit_kwargs) -> List[Forecast]:
    """Per-container fill forecast for one date.

    Containers with fewer than two usable records, or whose history already
    reaches the date, produce no forecast (the selector treats them as
    "no data"). A volumetric-sensor reading stored for the planning date
    overrides the model for that container.
    """
    if model_tag not in fc.MODEL_TAGS:
        raise ValueError(f"unknown model tag {model_tag!r}")
    by_container: Dict[str, List[FillRecord]] = {}
    sensor_readings: Dict[Tuple[str, str], float] = {}
    for r in records:
        if r.sensor_fill is not None:
            sensor_readings[(r.container_id, r.date.isoformat())] = r.sensor_fill
            if r.collected_kg == 0:
                continue  # reading-only row, not a collection event
        by_container.setdefault(r.container_id, []).append(r)

    out: List[Forecast] = []
    for c in containers:
        reading = sensor_readings.get((c.id, planning_date.isoformat()))
        if c.has_sensor and reading is not None:
            out.append(Forecast(c.id, planning_date,
                                min(max(reading, 0.0), 1.0), "sensor",
                                overflow=reading > 1.0))
            continue
        recs = by_container.get(c.id, [])
        try:
            series = fc.derive_daily_rates(recs, c)
        except fc.InsufficientHistoryError:
            continue
        horizon = (planning_date - series.end).days
        if horizon < 1 or len(series) < window + 7:
            continue
        model = fc.fit_model(model_tag, series, window, **fit_kwargs)
        out.append(fc.predict(model, series, horizon)[-1])
    return out


def build_instance(containers: Sequence[Container], vehicles, matrix: CostMatrix,
                   depot: GeoPoint, selected: Iterable[str],
                   fills: Dict[str, float],
                   penalty: float = DEFAULT_PENALTY_M) -> PlanningInstance:
    chosen = [c for c in containers if c.id in set(selected)]
    demands = {c.id: fills.get(c.id, 0.0) * c.capacity_kg for c in chosen}
    return PlanningInstance(depot=depot, containers=tuple(chosen),
                            demands=demands, vehicles=tuple(vehicles),
                            matrix=matrix, unassigned_penalty=penalty)


def plan_day(store: Store, request: PlanRequest) -> dict:
    """Run the full pipeline and persist the plan document.

    Idempotent: if the store already holds a plan for these inputs the
    stored document is returned as-is.
    """
    fingerprint = store.data_fingerprint()
    plan_id = plan_id_for(request, fingerprint)
    try:
        return store.load_plan(plan_id)
    except KeyError:
        pass

    containers = store.containers()
    vehicles = store.vehicles()
    depot = store.depot()
    matrix = store.matrix()
    records = store.history()

    forecasts = forecast_for_date(containers, records, request.date,
                                  request.model_tag, request.window)
    fills = {f.container_id: f.predicted_fill for f in forecasts}
    result = sel.select(forecasts, request.criteria,
                        universe=[c.id for c in containers])

    instance = build_instance(containers, vehicles, matrix, depot,
                              result.selected, fills)
    penalized = set(result.mandatory)
    if request.penalize_optional:
        penalized |= set(result.optional)

    if result.selected:
        solution, trace = router.solve(instance, penalized, request.solver)
    else:
        empty = [Route(vehicle_id=v.id, container_ids=()) for v in vehicles]
        solution = Solution(routes=tuple(empty), unassigned=(), fitness=0.0)
        trace = [(0, 0.0)]

    document = _document(plan_id, request, fingerprint, result, fills,
                         containers, solution, trace)
    store.save_plan(document)
    return document


def _route_entry(route: Route) -> dict:
    return {
        "vehicle_id": route.vehicle_id,
        "container_ids": list(route.container_ids),
        "containers": len(route.container_ids),
        "distance_m": route.distance_m,
        "duration_s": route.duration_s,
        "load_kg": route.load_kg,
    }


def _document(plan_id: str, request: PlanRequest, fingerprint: str,
              result: sel.SelectionResult, fills: Dict[str, float],
              containers: Sequence[Container], solution: Solution,
              trace: List[Tuple[int, float]]) -> dict:
    routed = sum(len(r.container_ids) for r in solution.routes)
    totals = {
        "containers": routed,
        "distance_m": sum(r.distance_m for r in solution.routes),
        "duration_s": sum(r.duration_s for r in solution.routes),
        "load_kg": sum(r.load_kg for r in solution.routes),
    }
    averages = {k: (totals[k] / routed if routed else 0.0)
                for k in ("distance_m", "duration_s", "load_kg")}
    demands = {c.id: fills.get(c.id, 0.0) * c.capacity_kg
               for c in containers if c.id in fills}
    return {
        "plan_id": plan_id,
        "date": request.date.isoformat(),
        "model_tag": request.model_tag,
        "request": request.to_dict(),
        "data_fingerprint": fingerprint,
        "selection": {
            "mandatory": sorted(result.mandatory),
            "optional": sorted(result.optional),
            "excluded": sorted(result.excluded),
            "reasons": dict(sorted(result.reasons.items())),
        },
        "fills": dict(sorted(fills.items())),
        "demands": dict(sorted(demands.items())),
        "routes": [_route_entry(r) for r in solution.routes],
        "unassigned": list(solution.unassigned),
        "fitness": solution.fitness,
        "totals": totals,
        "averages": averages,
        "trace": [[it, fit] for it, fit in trace],
    }


def plan_export_bytes(document: dict) -> bytes:
    return to_canonical_json(document).encode("utf-8")


# ---------------------------------------------------------------------------
# Baseline comparison


def read_baseline(path) -> List[Tuple[str, List[str]]]:
    """Baseline routes file: one row per truck, vehicle id then visit order."""
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            parts = [p.strip() for p in line.strip().split(",") if p.strip()]
            if not parts:
                continue
            out.append((parts[0], parts[1:]))
    return out


def _metric_block(rows: List[dict]) -> dict:
    total = {
        "containers": sum(r["containers"] for r in rows),
        "distance_m": sum(r["distance_m"] for r in rows),
        "duration_s": sum(r["duration_s"] for r in rows),
        "load_kg": sum(r["load_kg"] for r in rows),
    }
    n = total["containers"]
    average = {k: (total[k] / n if n else 0.0)
               for k in ("distance_m", "duration_s", "load_kg")}
    return {"per_truck": rows, "total": total, "average": average}


def compare(document: dict, baseline_routes: Sequence[Tuple[str, Sequence[str]]],
            store: Store) -> dict:
    """Side-by-side metrics of a plan against externally supplied routes.

    Baseline routes are costed against the same matrix and the plan's
    demand snapshot. Savings are quoted on per-container averages, plus the
    extrapolation "our average times their container count vs their total".
    """
    matrix = store.matrix()
    containers = store.containers()
    known = set(matrix.index_map)
    demands = document.get("demands", {})

    base_rows = []
    base_ids: List[str] = []
    for vehicle_id, cids in baseline_routes:
        unknown = [c for c in cids if c not in known]
        if unknown:
            raise ValueError(f"baseline references unknown containers: {unknown}")
        route = Route(vehicle_id=vehicle_id, container_ids=tuple(cids))
        base_rows.append({
            "vehicle_id": vehicle_id,
            "containers": len(cids),
            "distance_m": router.route_cost(route, matrix),
            "duration_s": router.route_duration(route, matrix, containers),
            "load_kg": sum(demands.get(c, 0.0) for c in cids),
        })
        base_ids.extend(cids)

    plan_rows = [{k: r[k] for k in
                  ("vehicle_id", "containers", "distance_m", "duration_s", "load_kg")}
                 for r in document["routes"]]
    plan_block = _metric_block(plan_rows)
    base_block = _metric_block(base_rows)

    plan_ids = {c for r in document["routes"] for c in r["container_ids"]}
    base_set = set(base_ids)
    overlap_pct = (100.0 * len(plan_ids & base_set) / len(base_set)
                   if base_set else 0.0)

    plan_avg = plan_block["average"]["distance_m"]
    base_avg = base_block["average"]["distance_m"]
    base_total = base_block["total"]["distance_m"]
    savings_avg_pct = (100.0 * (base_avg - plan_avg) / base_avg
                       if base_avg else 0.0)
    extrapolated = plan_avg * base_block["total"]["containers"]
    extrapolated_savings_pct = (100.0 * (base_total - extrapolated) / base_total
                                if base_total else 0.0)
    return {
        "plan": plan_block,
        "baseline": base_block,
        "overlap_pct": overlap_pct,
        "savings_avg_pct": savings_avg_pct,
        "extrapolated_distance_m": extrapolated,
        "extrapolated_savings_pct": extrapolated_savings_pct,
        "duration_delta_s": (plan_block["total"]["duration_s"]
                             - base_block["total"]["duration_s"]),
    }


# ---------------------------------------------------------------------------
# GeoJSON export


def export_geojson(document: dict, store: Store) -> dict:
    """One FeatureCollection: a point per container in the plan's universe
    (fill, selection class, access flag) and a line per non-empty route,
    depot at both ends. Coordinates are [longitude, latitude]."""
    containers = {c.id: c for c in store.containers()}
    depot = store.depot()
    selection = document["selection"]
    klass: Dict[str, str] = {}
    for name in ("mandatory", "optional", "excluded"):
        for cid in selection[name]:
            klass[cid] = name
    fills = document.get("fills", {})

    features = []
    for cid in sorted(klass):
        c = containers.get(cid)
        if c is None:
            raise ValueError(f"container {cid} has no coordinates in the store")
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [c.lon, c.lat]},
            "properties": {
                "container_id": cid,
                "fill": fills.get(cid),
                "selection": klass[cid],
                "small_only": c.small_only,
            },
        })
    for r in document["routes"]:
        if not r["container_ids"]:
            continue
        coords = [[depot.lon, depot.lat]]
        for cid in r["container_ids"]:
            c = containers.get(cid)
            if c is None:
                raise ValueError(f"container {cid} has no coordinates in the store")
            coords.append([c.lon, c.lat])
        coords.append([depot.lon, depot.lat])
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": coords},
            "properties": {
                "vehicle_id": r["vehicle_id"],
                "containers": r["containers"],
                "distance_m": r["distance_m"],
                "duration_s": r["duration_s"],
                "load_kg": r["load_kg"],
            },
        })
    return {"type": "FeatureCollection", "features": features}


def trace_csv(document: dict) -> str:
    lines = ["iteration,best_fitness"]
    for it, fit in document["trace"]:
        lines.append(f"{it},{fit!r}")
    return "\n".join(lines) + "\n"
