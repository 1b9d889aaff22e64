"""
Synthetic planning instances: containers, a two-truck fleet and months of
collection history driven by per-container latent fill processes.

Each container accumulates fill at a weekly-periodic noisy daily rate and
is emptied whenever it crosses its trigger level, producing the sparse
collection records a real operator would have. Narrow-street containers get
their final collection phased so they are close to full on the day after
the history ends, which is the natural planning date for the instance.
"""

import math
import random
from dataclasses import dataclass
from datetime import date as Date, timedelta
from pathlib import Path
from typing import Dict, List, Optional

from .model import (Container, FillRecord, GeoPoint, Vehicle,
                    write_containers, write_depot, write_history, write_vehicles)

DEFAULT_CENTER = GeoPoint(36.7202, -4.4203)
NOISE_SD = 0.10


@dataclass(frozen=True)
class GeneratorConfig:
    n_containers: int = 217
    n_small_only: int = 9
    container_capacity_kg: float = 75.0
    unload_time_s: float = 210.0
    small_truck_capacity_kg: float = 1700.0
    big_truck_capacity_kg: float = 2000.0
    months_history: int = 11
    seed: int = 0
    start: Date = Date(2017, 4, 1)
    center: GeoPoint = DEFAULT_CENTER
    # Keep the city compact enough that inserting one more container costs
    # well under the unassigned penalty; otherwise dropping a distant
    # mandatory container is the genuinely optimal move.
    spread_km: float = 1.2

    def validate(self) -> None:
        if self.n_containers < 1:
            raise ValueError("need at least one container")
        if not 0 <= self.n_small_only <= self.n_containers:
            raise ValueError("small-access count must be within the container count")
        if self.months_history < 0:
            raise ValueError("history months must be non-negative")

    @property
    def history_days(self) -> int:
        return self.months_history * 30

    @property
    def planning_date(self) -> Date:
        return self.start + timedelta(days=self.history_days)


@dataclass
class GeneratedInstance:
    containers: List[Container]
    vehicles: List[Vehicle]
    records: List[FillRecord]
    depot: GeoPoint
    planning_date: Date
    # Latent fill fraction at the planning date, unclamped; not written to
    # files (a real deployment never knows it), kept for verification.
    true_fill: Optional[Dict[str, float]] = None


def _daily_rate(base: float, weekend_factor: float, d: Date,
                rng: random.Random) -> float:
    rate = base * (weekend_factor if d.weekday() >= 5 else 1.0)
    return max(0.0, rate * (1.0 + rng.gauss(0.0, NOISE_SD)))


def generate(config: GeneratorConfig) -> GeneratedInstance:
    config.validate()
    rng = random.Random(config.seed)
    width = len(str(config.n_containers))
    ids = [f"C{i:0{width}d}" for i in range(1, config.n_containers + 1)]
    small_ids = set(rng.sample(ids, config.n_small_only))

    # 1 degree latitude ~ 111.32 km; longitude shrinks with cos(latitude).
    dlat = config.spread_km / 111.32
    dlon = config.spread_km / (111.32 * math.cos(math.radians(config.center.lat)))

    containers: List[Container] = []
    records: List[FillRecord] = []
    true_fill: Dict[str, float] = {}
    end = config.start + timedelta(days=config.history_days - 1)
    for i, cid in enumerate(ids):
        c = Container(
            id=cid,
            lat=config.center.lat + rng.uniform(-dlat, dlat),
            lon=config.center.lon + rng.uniform(-dlon, dlon),
            capacity_kg=config.container_capacity_kg,
            unload_time_s=config.unload_time_s,
            small_only=cid in small_ids,
            has_sensor=rng.random() < 0.05,
            address=f"{100 + i} Collection Rd",
            group=f"district-{i % 12 + 1}",
        )
        containers.append(c)
        if config.history_days == 0:
            true_fill[cid] = 0.0
            continue

        base = rng.uniform(0.08, 0.20)
        weekend_factor = rng.uniform(1.25, 1.75)
        trigger = rng.uniform(0.50, 0.80)
        mean_rate = base * (5 + 2 * weekend_factor) / 7.0
        # Last stretch without collections so narrow-street containers sit
        # near full on the planning date (overshoot the mandatory threshold
        # so forecast error cannot drop them out of the mandatory set).
        hold_days = 0
        if c.small_only:
            hold_days = max(0, min(max(1, math.ceil(1.05 / mean_rate) - 1),
                                   config.history_days - 2))
        hold_from = end - timedelta(days=hold_days - 1) if hold_days else None

        fill = rng.uniform(0.0, 0.5)
        last_collection: Optional[Date] = None
        day = config.start
        while day <= end:
            fill += _daily_rate(base, weekend_factor, day, rng)
            in_hold = hold_from is not None and day >= hold_from
            flush = hold_from is not None and day == hold_from - timedelta(days=1)
            if (fill >= trigger and not in_hold) or (flush and fill > 0.05):
                records.append(FillRecord(
                    container_id=cid,
                    date=day,
                    collected_kg=min(fill, 1.0) * c.capacity_kg,
                    collected_yesterday=last_collection == day - timedelta(days=1),
                ))
                last_collection = day
                fill = 0.0
            day += timedelta(days=1)
        # fill by the end of the planning date itself
        fill += _daily_rate(base, weekend_factor, config.planning_date, rng)
        true_fill[cid] = fill

    vehicles = [
        Vehicle(id="small-truck", capacity_kg=config.small_truck_capacity_kg,
                small=True, cost_per_km=0.9, registration="TR-0001"),
        Vehicle(id="big-truck", capacity_kg=config.big_truck_capacity_kg,
                small=False, cost_per_km=1.1, registration="TR-0002"),
    ]
    records.sort(key=lambda r: (r.date, r.container_id))
    return GeneratedInstance(containers=containers, vehicles=vehicles,
                             records=records, depot=config.center,
                             planning_date=config.planning_date,
                             true_fill=true_fill)


def write_instance(out_dir, config: GeneratorConfig) -> GeneratedInstance:
    """Generate and write containers/vehicles/history/depot files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gen = generate(config)
    write_containers(out / "containers.csv", gen.containers)
    write_vehicles(out / "vehicles.csv", gen.vehicles)
    write_history(out / "history.csv", gen.records)
    write_depot(out / "depot.csv", gen.depot)
    return gen
