"""
Route optimization for a heterogeneous, site-constrained fleet.

The problem: assign selected containers to trucks and order each truck's
visits so total driven distance is minimal, subject to per-truck load
capacity and narrow-street access (some containers only fit a small truck).
Distance matrices are directional, so a route and its reverse differ.

The solver is a (1+1) evolutionary loop built on ruin and recreate: each
iteration removes a radial cluster of assigned containers from the
incumbent (or from a fresh random solution) and greedily reinserts them at
the cheapest feasible positions. Unassigned containers go back into every
reinsertion pool, so capacity-displaced containers keep competing for
slots. A container left out of all routes adds a fixed penalty to the
fitness when it belongs to the penalized set.

A memoized exhaustive oracle (every assignment, every visit order) covers
instances of up to 8 containers for verification.
"""

import itertools
import math
import random
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .model import CostMatrix, PlanningInstance, Route, Solution

# Below this route length plain Python beats numpy's call overhead.
_VECTOR_MIN = 12

_CAP_EPS = 1e-9

BRUTE_FORCE_LIMIT = 8


@dataclass(frozen=True)
class SolverConfig:
    iterations: int = 10_000
    ruin_fraction: float = 0.3
    seed: int = 0
    acceptance: str = "greedy"        # "greedy" | "threshold"
    threshold_initial: float = 500.0  # threshold mode only
    threshold_decay: float = 0.999
    ruin_base: str = "best"           # "best" | "fresh_random"
    restart_after: int = 100          # stagnation restart; 0 disables

    def validate(self) -> None:
        if self.iterations < 1:
            raise ValueError("iteration budget must be >= 1")
        if not 0.0 < self.ruin_fraction < 1.0:
            raise ValueError("ruin fraction must be in (0, 1)")
        if self.acceptance not in ("greedy", "threshold"):
            raise ValueError(f"unknown acceptance mode {self.acceptance!r}")
        if self.ruin_base not in ("best", "fresh_random"):
            raise ValueError(f"unknown ruin base {self.ruin_base!r}")
        if self.restart_after < 0:
            raise ValueError("restart_after must be >= 0")

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "ruin_fraction": self.ruin_fraction,
            "seed": self.seed,
            "acceptance": self.acceptance,
            "threshold_initial": self.threshold_initial,
            "threshold_decay": self.threshold_decay,
            "ruin_base": self.ruin_base,
            "restart_after": self.restart_after,
        }


class _Workspace:
    """Instance data reshaped for the solver: matrix node indices throughout."""

    def __init__(self, instance: PlanningInstance):
        self.instance = instance
        index_map = instance.matrix.index_map
        self.nodes: List[int] = []
        n1 = instance.matrix.node_count
        self.demand = [0.0] * n1
        self.small_only = [False] * n1
        self.id_of: List[Optional[str]] = [None] * n1
        for c in instance.containers:
            nd = index_map[c.id]
            self.nodes.append(nd)
            self.demand[nd] = float(instance.demands[c.id])
            self.small_only[nd] = c.small_only
            self.id_of[nd] = c.id
        self.D = instance.matrix.distance
        self.Dlist: List[List[float]] = self.D.tolist()
        self.vcap = [v.capacity_kg for v in instance.vehicles]
        self.vsmall = [v.small for v in instance.vehicles]
        self.penalty = instance.unassigned_penalty

    def node_of(self, cid: str) -> int:
        idx = self.instance.matrix.index_map.get(cid)
        if idx is None:
            raise ValueError(f"unknown container id {cid!r}")
        return idx


class _State:
    """Mutable working solution: node-index routes, per-route loads, leftovers."""

    __slots__ = ("routes", "loads", "unassigned")

    def __init__(self, routes: List[List[int]], loads: List[float],
                 unassigned: List[int]):
        self.routes = routes
        self.loads = loads
        self.unassigned = unassigned

    def copy(self) -> "_State":
        return _State([list(r) for r in self.routes], list(self.loads),
                      list(self.unassigned))


def _route_distance(route: List[int], ws: _Workspace) -> float:
    if not route:
        return 0.0
    if len(route) < _VECTOR_MIN:
        D = ws.Dlist
        prev = 0
        total = 0.0
        for nd in route:
            total += D[prev][nd]
            prev = nd
        return total + D[prev][0]
    path = np.empty(len(route) + 2, dtype=np.intp)
    path[0] = path[-1] = 0
    path[1:-1] = route
    return float(ws.D[path[:-1], path[1:]].sum())


def _state_fitness(state: _State, ws: _Workspace, penalized: Set[int]) -> float:
    total = 0.0
    for route in state.routes:
        total += _route_distance(route, ws)
    pen = sum(1 for nd in state.unassigned if nd in penalized)
    return total + ws.penalty * pen


def _best_insertion(route: List[int], node: int, ws: _Workspace) -> Tuple[float, int]:
    """Cheapest position to splice `node` into `route`; first position wins ties."""
    D = ws.Dlist
    if not route:
        return D[0][node] + D[node][0], 0
    if len(route) < _VECTOR_MIN:
        row = D[node]
        best_delta = math.inf
        best_pos = 0
        prev = 0
        for pos in range(len(route) + 1):
            nxt = route[pos] if pos < len(route) else 0
            delta = D[prev][node] + row[nxt] - D[prev][nxt]
            if delta < best_delta:
                best_delta = delta
                best_pos = pos
            prev = nxt
        return best_delta, best_pos
    path = np.empty(len(route) + 2, dtype=np.intp)
    path[0] = path[-1] = 0
    path[1:-1] = route
    a, b = path[:-1], path[1:]
    Dm = ws.D
    deltas = Dm[a, node] + Dm[node, b] - Dm[a, b]
    pos = int(np.argmin(deltas))
    return float(deltas[pos]), pos


def _random_state(ws: _Workspace, rng: random.Random) -> _State:
    nv = len(ws.vcap)
    routes: List[List[int]] = [[] for _ in range(nv)]
    loads = [0.0] * nv
    unassigned: List[int] = []
    order = list(ws.nodes)
    rng.shuffle(order)
    for nd in order:
        candidates = [v for v in range(nv)
                      if loads[v] + ws.demand[nd] <= ws.vcap[v]
                      and (not ws.small_only[nd] or ws.vsmall[v])]
        if candidates:
            v = candidates[rng.randrange(len(candidates))]
            routes[v].append(nd)
            loads[v] += ws.demand[nd]
        else:
            unassigned.append(nd)
    return _State(routes, loads, unassigned)


def _ruin_state(state: _State, fraction: float, rng: random.Random,
                ws: _Workspace, penalized: Optional[Set[int]] = None) -> List[int]:
    """Radial ruin: remove the ceil(fraction * assigned) containers nearest a
    random seed (outbound distance). The seed is a random assigned
    container; when penalized containers sit unassigned, half the ruins
    center on one of those instead, vacating exactly the region where the
    stranded container needs room. Returns the removed nodes."""
    assigned = [nd for route in state.routes for nd in route]
    if not assigned:
        return []
    count = min(math.ceil(fraction * len(assigned)), len(assigned))
    stranded = ([nd for nd in state.unassigned if nd in penalized]
                if penalized else [])
    if stranded and rng.random() < 0.5:
        seed = stranded[rng.randrange(len(stranded))]
    else:
        seed = assigned[rng.randrange(len(assigned))]
    row = ws.Dlist[seed]
    order = sorted(assigned, key=lambda nd: (row[nd], ws.id_of[nd]))
    removed = order[:count]
    removed_set = set(removed)
    for v, route in enumerate(state.routes):
        kept = [nd for nd in route if nd not in removed_set]
        if len(kept) != len(route):
            state.routes[v] = kept
            state.loads[v] = sum(ws.demand[nd] for nd in kept)
    return removed


def _recreate_state(state: _State, pool: List[int], rng: random.Random,
                    ws: _Workspace, penalized: Optional[Set[int]] = None) -> None:
    """Reinsert every pooled container at its cheapest feasible position.

    Insertion order is random, except that penalized containers go first
    (in random order among themselves): when capacity is scarce they must
    not lose the packing race to containers whose omission is free. A
    container with no feasible slot in any route becomes unassigned.
    Tie-breaks: lower route index, lower position.
    """
    if penalized:
        first = [nd for nd in pool if nd in penalized]
        rest = [nd for nd in pool if nd not in penalized]
        rng.shuffle(first)
        rng.shuffle(rest)
        pool = first + rest
    else:
        rng.shuffle(pool)
    nv = len(ws.vcap)
    for nd in pool:
        need = ws.demand[nd]
        small = ws.small_only[nd]
        best_delta = math.inf
        best_v = -1
        best_pos = 0
        for v in range(nv):
            if state.loads[v] + need > ws.vcap[v]:
                continue
            if small and not ws.vsmall[v]:
                continue
            delta, pos = _best_insertion(state.routes[v], nd, ws)
            if delta < best_delta:
                best_delta, best_v, best_pos = delta, v, pos
        if best_v >= 0:
            state.routes[best_v].insert(best_pos, nd)
            state.loads[best_v] += need
        else:
            state.unassigned.append(nd)


def _to_solution(state: _State, ws: _Workspace, penalized: Set[int]) -> Solution:
    instance = ws.instance
    T = instance.matrix.duration
    unload = {c.id: c.unload_time_s for c in instance.containers}
    routes = []
    for v, vehicle in enumerate(instance.vehicles):
        seq = state.routes[v]
        ids = tuple(ws.id_of[nd] for nd in seq)
        dist = _route_distance(seq, ws)
        dur = 0.0
        prev = 0
        for nd in seq:
            dur += float(T[prev, nd]) + unload[ws.id_of[nd]]
            prev = nd
        if seq:
            dur += float(T[prev, 0])
        routes.append(Route(vehicle_id=vehicle.id, container_ids=ids,
                            distance_m=dist, duration_s=dur,
                            load_kg=state.loads[v]))
    unassigned = tuple(sorted(ws.id_of[nd] for nd in state.unassigned))
    fitness = _state_fitness(state, ws, penalized)
    return Solution(routes=tuple(routes), unassigned=unassigned, fitness=fitness)


def _from_solution(solution: Solution, ws: _Workspace) -> _State:
    by_vehicle = {r.vehicle_id: r for r in solution.routes}
    routes: List[List[int]] = []
    loads: List[float] = []
    for vehicle in ws.instance.vehicles:
        r = by_vehicle.get(vehicle.id)
        seq = [ws.node_of(cid) for cid in r.container_ids] if r else []
        routes.append(seq)
        loads.append(sum(ws.demand[nd] for nd in seq))
    unassigned = [ws.node_of(cid) for cid in solution.unassigned]
    return _State(routes, loads, unassigned)


def _penalized_nodes(ws: _Workspace, penalized_set: Iterable[str]) -> Set[int]:
    wanted = set(penalized_set)
    return {nd for nd in ws.nodes if ws.id_of[nd] in wanted}


# ---------------------------------------------------------------------------
# Public operations


def route_cost(route: Route, matrix: CostMatrix) -> float:
    """Directional distance of depot -> visits -> depot; empty routes cost 0."""
    if not route.container_ids:
        return 0.0
    index_map = matrix.index_map
    D = matrix.distance
    prev = 0
    total = 0.0
    for cid in route.container_ids:
        idx = index_map.get(cid)
        if idx is None:
            raise ValueError(f"unknown container id {cid!r}")
        total += float(D[prev, idx])
        prev = idx
    return total + float(D[prev, 0])


def route_duration(route: Route, matrix: CostMatrix,
                   containers: Iterable) -> float:
    """Directional travel time plus unload time of every visited container."""
    if not route.container_ids:
        return 0.0
    unload = {c.id: c.unload_time_s for c in containers}
    index_map = matrix.index_map
    T = matrix.duration
    prev = 0
    total = 0.0
    for cid in route.container_ids:
        idx = index_map.get(cid)
        if idx is None:
            raise ValueError(f"unknown container id {cid!r}")
        total += float(T[prev, idx]) + unload[cid]
        prev = idx
    return total + float(T[prev, 0])


def evaluate(solution: Solution, instance: PlanningInstance,
             penalized_set: Iterable[str]) -> float:
    """Total route distance plus penalty per unassigned penalized container."""
    penalized = set(penalized_set)
    total = sum(route_cost(r, instance.matrix) for r in solution.routes)
    pen = sum(1 for cid in solution.unassigned if cid in penalized)
    return total + instance.unassigned_penalty * pen


def check_feasibility(solution: Solution, instance: PlanningInstance) -> List[str]:
    """Capacity, site-compatibility and duplicate-visit violations."""
    violations: List[str] = []
    vehicles = {v.id: v for v in instance.vehicles}
    containers = {c.id: c for c in instance.containers}
    seen: Set[str] = set()
    for r in solution.routes:
        vehicle = vehicles.get(r.vehicle_id)
        if vehicle is None:
            violations.append(f"route {r.vehicle_id}: unknown vehicle")
            continue
        load = 0.0
        for cid in r.container_ids:
            if cid in seen:
                violations.append(f"container {cid}: visited more than once")
            seen.add(cid)
            c = containers.get(cid)
            if c is None:
                violations.append(f"route {r.vehicle_id}: unknown container {cid}")
                continue
            load += instance.demands.get(cid, 0.0)
            if c.small_only and not vehicle.small:
                violations.append(
                    f"container {cid}: needs a small vehicle, assigned to {vehicle.id}")
        if load > vehicle.capacity_kg + _CAP_EPS:
            violations.append(
                f"route {r.vehicle_id}: load {load:.3f} kg exceeds "
                f"capacity {vehicle.capacity_kg:.3f} kg")
    for cid in solution.unassigned:
        if cid in seen:
            violations.append(f"container {cid}: both routed and unassigned")
    return violations


def random_solution(instance: PlanningInstance, rng: random.Random,
                    penalized_set: Iterable[str] = ()) -> Solution:
    """Shuffle containers and append each to a random compatible vehicle with
    remaining capacity; the rest go unassigned. Always feasible."""
    ws = _Workspace(instance)
    state = _random_state(ws, rng)
    return _to_solution(state, ws, _penalized_nodes(ws, penalized_set))


def ruin(solution: Solution, instance: PlanningInstance, ruin_fraction: float,
         rng: random.Random,
         penalized_set: Iterable[str] = ()) -> Tuple[Solution, List[str]]:
    """Remove ceil(fraction * assigned) containers around a random seed.

    Returns the reduced (still feasible) solution and the removed ids.
    """
    ws = _Workspace(instance)
    state = _from_solution(solution, ws)
    penalized = _penalized_nodes(ws, penalized_set)
    removed = _ruin_state(state, ruin_fraction, rng, ws, penalized)
    partial = _to_solution(state, ws, penalized)
    return partial, [ws.id_of[nd] for nd in removed]


def recreate(partial: Solution, removed_ids: Sequence[str],
             instance: PlanningInstance, rng: random.Random,
             penalized_set: Iterable[str] = ()) -> Solution:
    """Reinsert removed plus currently unassigned containers in random order,
    each at the cheapest feasible position; leftovers stay unassigned."""
    ws = _Workspace(instance)
    state = _from_solution(partial, ws)
    pool = [ws.node_of(cid) for cid in removed_ids] + state.unassigned
    state.unassigned = []
    penalized = _penalized_nodes(ws, penalized_set)
    _recreate_state(state, pool, rng, ws, penalized)
    return _to_solution(state, ws, penalized)


def solve(instance: PlanningInstance, penalized_set: Iterable[str],
          config: SolverConfig) -> Tuple[Solution, List[Tuple[int, float]]]:
    """Run the (1+1) ruin-and-recreate loop for the configured budget.

    ruin_base "best" ruins the incumbent (standard large-neighborhood
    practice); "fresh_random" draws a new random solution every iteration.
    Greedy acceptance replaces the incumbent only on strict improvement;
    threshold acceptance lets the incumbent drift within a decaying margin
    while the best-so-far is tracked separately. In "best" mode the
    incumbent is re-randomized after restart_after iterations without a new
    best, since the cheapest-insertion neighborhood around a local optimum
    is too small to escape on tiny instances. Deterministic per seed.

    Returns the best solution and the improvement trace as
    (iteration, best_fitness) pairs, starting with the initial solution.
    """
    config.validate()
    ws = _Workspace(instance)
    rng = random.Random(config.seed)
    penalized = _penalized_nodes(ws, penalized_set)

    best = _random_state(ws, rng)
    best_fit = _state_fitness(best, ws, penalized)
    current, current_fit = best, best_fit
    threshold = config.threshold_initial
    stale = 0
    trace: List[Tuple[int, float]] = [(0, best_fit)]

    for it in range(1, config.iterations + 1):
        if config.ruin_base == "fresh_random":
            cand = _random_state(ws, rng)
        else:
            if config.restart_after and stale >= config.restart_after:
                current = _random_state(ws, rng)
                current_fit = _state_fitness(current, ws, penalized)
                stale = 0
            cand = current.copy()
        removed = _ruin_state(cand, config.ruin_fraction, rng, ws, penalized)
        pool = removed + cand.unassigned
        cand.unassigned = []
        _recreate_state(cand, pool, rng, ws, penalized)
        fit = _state_fitness(cand, ws, penalized)

        if config.acceptance == "greedy":
            if fit < current_fit:
                current, current_fit = cand, fit
        else:
            if fit < current_fit + threshold:
                current, current_fit = cand, fit
            threshold *= config.threshold_decay
        if fit < best_fit:
            best, best_fit = cand, fit
            stale = 0
            trace.append((it, fit))
        else:
            stale += 1

    return _to_solution(best, ws, penalized), trace


def brute_force(instance: PlanningInstance,
                penalized_set: Iterable[str]) -> Solution:
    """Exact optimum by exhaustive search; guarded to small instances.

    Every split of containers over vehicles/unassigned is enumerated; the
    cheapest visit order per container set is found by trying every
    permutation (memoized across splits, since route distance does not
    depend on the vehicle).
    """
    n = len(instance.containers)
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"instance too large: {n} containers > {BRUTE_FORCE_LIMIT}")
    ws = _Workspace(instance)
    penalized = _penalized_nodes(ws, penalized_set)
    nv = len(instance.vehicles)
    nodes = sorted(ws.nodes, key=lambda nd: ws.id_of[nd])
    D = ws.Dlist

    tsp_cache: Dict[frozenset, Tuple[float, Tuple[int, ...]]] = {
        frozenset(): (0.0, ())}

    def tsp(group: Tuple[int, ...]) -> Tuple[float, Tuple[int, ...]]:
        key = frozenset(group)
        hit = tsp_cache.get(key)
        if hit is not None:
            return hit
        best_cost = math.inf
        best_perm: Tuple[int, ...] = ()
        for perm in itertools.permutations(sorted(group)):
            cost = 0.0
            prev = 0
            for nd in perm:
                cost += D[prev][nd]
                prev = nd
            cost += D[prev][0]
            if cost < best_cost:
                best_cost, best_perm = cost, perm
        tsp_cache[key] = (best_cost, best_perm)
        return best_cost, best_perm

    best_fit = math.inf
    best_assign: Optional[Tuple[int, ...]] = None
    for assign in itertools.product(range(nv + 1), repeat=n):
        loads = [0.0] * nv
        feasible = True
        groups: List[List[int]] = [[] for _ in range(nv)]
        pen = 0
        for k, slot in enumerate(assign):
            nd = nodes[k]
            if slot == nv:
                if nd in penalized:
                    pen += 1
                continue
            if ws.small_only[nd] and not ws.vsmall[slot]:
                feasible = False
                break
            loads[slot] += ws.demand[nd]
            if loads[slot] > ws.vcap[slot]:
                feasible = False
                break
            groups[slot].append(nd)
        if not feasible:
            continue
        fit = ws.penalty * pen
        for group in groups:
            fit += tsp(tuple(group))[0]
            if fit >= best_fit:
                break
        if fit < best_fit:
            best_fit = fit
            best_assign = assign
    if best_assign is None:
        raise RuntimeError("no feasible assignment found")

    routes: List[List[int]] = [[] for _ in range(nv)]
    unassigned: List[int] = []
    for k, slot in enumerate(best_assign):
        if slot == nv:
            unassigned.append(nodes[k])
        else:
            routes[slot].append(nodes[k])
    state = _State([list(tsp(tuple(g))[1]) for g in routes],
                   [sum(ws.demand[nd] for nd in g) for g in routes],
                   unassigned)
    return _to_solution(state, ws, penalized)
