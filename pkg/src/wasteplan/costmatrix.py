"""
Distance/duration matrix construction and file I/O.

Real deployments would pull pairwise travel costs from a routing API; here
providers are pluggable. The synthetic provider scales great-circle
distances by an urban detour factor and derives durations from a fixed
speed. Matrices may be asymmetric and are never assumed to satisfy the
triangle inequality.
"""

import csv
import math
from typing import List, Sequence, Tuple

import numpy as np

from .model import Container, CostMatrix, GeoPoint

EARTH_RADIUS_M = 6_371_000.0

# Urban defaults: road distance ~1.4x straight line, mean speed 30 km/h.
DEFAULT_DETOUR_FACTOR = 1.4
DEFAULT_SPEED_MPS = 8.33


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters between two coordinates."""
    lat1, lon1 = math.radians(a.lat), math.radians(a.lon)
    lat2, lon2 = math.radians(b.lat), math.radians(b.lon)
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


class MatrixProvider:
    """Source of pairwise (distance_m, duration_s) travel costs."""

    def pair(self, a: GeoPoint, b: GeoPoint) -> Tuple[float, float]:
        raise NotImplementedError


class HaversineProvider(MatrixProvider):
    """Synthetic provider: haversine * detour factor, duration = distance / speed."""

    def __init__(self, detour_factor: float = DEFAULT_DETOUR_FACTOR,
                 speed_mps: float = DEFAULT_SPEED_MPS):
        if detour_factor <= 0 or speed_mps <= 0:
            raise ValueError("detour factor and speed must be positive")
        self.detour_factor = detour_factor
        self.speed_mps = speed_mps

    def pair(self, a: GeoPoint, b: GeoPoint) -> Tuple[float, float]:
        dist = haversine_distance(a, b) * self.detour_factor
        return dist, dist / self.speed_mps


def build_matrix(depot: GeoPoint, containers: Sequence[Container],
                 provider: MatrixProvider,
                 asymmetry_factor: float = 1.0) -> CostMatrix:
    """Build the (n+1)^2 cost matrices over depot (index 0) + containers.

    Entries above the diagonal (i < j) are multiplied by asymmetry_factor,
    which injects reproducible directional costs; 1.0 keeps the provider's
    values, which are symmetric for the haversine provider. Durations are
    rescaled by the same factor so both matrices stay consistent.
    """
    if not containers:
        raise ValueError("containers must be non-empty")
    ids = [c.id for c in containers]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate container ids")
    points = [depot] + [c.location for c in containers]
    n = len(points)
    dist = np.zeros((n, n))
    dur = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            d, t = provider.pair(points[i], points[j])
            if i < j:
                d *= asymmetry_factor
                t *= asymmetry_factor
            dist[i, j] = d
            dur[i, j] = t
    return CostMatrix(distance=dist, duration=dur, ids=tuple(ids))


def _read_grid(path) -> np.ndarray:
    rows: List[List[float]] = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.reader(f):
            if not row:
                continue
            rows.append([float(x) for x in row])
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    width = len(rows[0])
    if any(len(r) != width for r in rows) or len(rows) != width:
        raise ValueError(f"{path}: grid is not square")
    grid = np.array(rows, dtype=float)
    bad = np.argwhere(grid < 0)
    if bad.size:
        r, c = bad[0]
        raise ValueError(f"{path}: negative entry ({r},{c})")
    if not np.all(np.isfinite(grid)):
        raise ValueError(f"{path}: non-finite entry")
    return grid


def load_matrix(distance_file, duration_file, id_order: Sequence[str]) -> CostMatrix:
    """Load verbatim distance/duration grids; node 0 is the depot.

    id_order gives the container ids for indices 1..n and must match the
    grid dimension (n+1).
    """
    dist = _read_grid(distance_file)
    dur = _read_grid(duration_file)
    if dist.shape != dur.shape:
        raise ValueError("distance and duration grids differ in size")
    ids = tuple(id_order)
    if dist.shape[0] != len(ids) + 1:
        raise ValueError(
            f"grid order {dist.shape[0]} does not match id order ({len(ids)} ids + depot)")
    if np.any(np.diagonal(dist) != 0) or np.any(np.diagonal(dur) != 0):
        raise ValueError("matrix diagonal must be zero")
    return CostMatrix(distance=dist, duration=dur, ids=ids)


def save_matrix(matrix: CostMatrix, distance_file, duration_file, ids_file) -> None:
    """Write grids with full-precision floats so load round-trips bit-exactly."""
    for path, grid in ((distance_file, matrix.distance), (duration_file, matrix.duration)):
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            for row in grid:
                w.writerow([repr(float(x)) for x in row])
    with open(ids_file, "w", encoding="utf-8") as f:
        for cid in matrix.ids:
            f.write(cid + "\n")


def read_id_order(ids_file) -> List[str]:
    with open(ids_file, encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip()]
