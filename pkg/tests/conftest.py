import random

import numpy as np
import pytest

from wasteplan import costmatrix, generator, planner
from wasteplan.model import Container, CostMatrix, GeoPoint, PlanningInstance, Vehicle


def planar_matrix(points, detour=1.4, asym=1.25, speed=8.33):
    """Asymmetric cost matrix from planar points (meters); node 0 is depot."""
    n = len(points)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dx = points[i][0] - points[j][0]
            dy = points[i][1] - points[j][1]
            d = (dx * dx + dy * dy) ** 0.5 * detour
            if i < j:
                d *= asym
            dist[i, j] = d
    return dist, dist / speed


def random_instance(rng: random.Random, n_containers: int, n_vehicles: int,
                    with_small: bool, box_m: float = 100.0) -> PlanningInstance:
    """Small routing instance with controlled geometry.

    The coordinate box keeps every insertion delta well under the default
    500 m penalty, so the optimum never drops a fittable penalized
    container (the penalty-dominance regime).
    """
    ids = [f"c{i}" for i in range(n_containers)]
    points = [(rng.uniform(0, box_m), rng.uniform(0, box_m))
              for _ in range(n_containers + 1)]
    dist, dur = planar_matrix(points)
    matrix = CostMatrix(distance=dist, duration=dur, ids=tuple(ids))
    small_count = rng.randrange(1, max(2, n_containers // 2)) if with_small else 0
    containers = tuple(
        Container(id=cid, lat=0.0, lon=0.0, capacity_kg=75.0,
                  unload_time_s=210.0, small_only=i < small_count)
        for i, cid in enumerate(ids))
    demands = {cid: rng.uniform(20.0, 70.0) for cid in ids}
    vehicles = [Vehicle(id="v0", capacity_kg=rng.uniform(80.0, 260.0), small=True)]
    if n_vehicles == 2:
        vehicles.append(Vehicle(id="v1", capacity_kg=rng.uniform(80.0, 260.0),
                                small=False))
    return PlanningInstance(depot=GeoPoint(0.0, 0.0), containers=containers,
                            demands=demands, vehicles=tuple(vehicles),
                            matrix=matrix)


def build_store(root, n_containers=30, n_small_only=3, months=6, seed=77,
                asymmetry=1.1):
    """Generated instance files + matrix under `root`; returns (store, gen)."""
    config = generator.GeneratorConfig(n_containers=n_containers,
                                       n_small_only=n_small_only,
                                       months_history=months, seed=seed)
    gen = generator.write_instance(root, config)
    store = planner.Store(root)
    matrix = costmatrix.build_matrix(gen.depot, gen.containers,
                                     costmatrix.HaversineProvider(),
                                     asymmetry_factor=asymmetry)
    store.save_matrix(matrix)
    return store, gen


@pytest.fixture(scope="session")
def small_store(tmp_path_factory):
    root = tmp_path_factory.mktemp("store")
    return build_store(root)
