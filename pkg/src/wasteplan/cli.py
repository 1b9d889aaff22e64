"""
Command-line front end. All planning logic lives in the library; the CLI
wires files to it, or talks to a running service when --server is given.
Randomized commands print the seed they ran with so every run can be
reproduced from its output.
"""

import argparse
import json
import random
import sys
from datetime import date as Date
from pathlib import Path

from . import costmatrix, forecast as fc, generator, planner, router
from .model import read_containers, read_depot, write_forecasts
from .selection import SelectionCriteria, select


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def _pick_seed(seed) -> int:
    return random.SystemRandom().randrange(2 ** 31) if seed is None else seed


def _parse_date(s: str) -> Date:
    return Date.fromisoformat(s)


def _id_list(s: str):
    return frozenset(x.strip() for x in s.split(",") if x.strip())


def cmd_gen_instance(args) -> int:
    seed = _pick_seed(args.seed)
    config = generator.GeneratorConfig(
        n_containers=args.containers,
        n_small_only=args.small_only,
        container_capacity_kg=args.capacity_kg,
        unload_time_s=args.unload_s,
        small_truck_capacity_kg=args.small_truck_capacity,
        big_truck_capacity_kg=args.big_truck_capacity,
        months_history=args.months,
        seed=seed,
        start=_parse_date(args.start_date),
    )
    gen = generator.write_instance(args.out, config)
    _emit({
        "command": "gen-instance",
        "out": str(args.out),
        "seed": seed,
        "containers": len(gen.containers),
        "small_only": sum(c.small_only for c in gen.containers),
        "vehicles": len(gen.vehicles),
        "history_records": len(gen.records),
        "planning_date": gen.planning_date.isoformat(),
    })
    return 0


def cmd_build_matrix(args) -> int:
    store = planner.Store(args.store)
    containers = read_containers(store.containers_path)
    depot = read_depot(store.depot_path)
    provider = costmatrix.HaversineProvider(detour_factor=args.detour,
                                            speed_mps=args.speed_mps)
    matrix = costmatrix.build_matrix(depot, containers, provider,
                                     asymmetry_factor=args.asymmetry)
    store.save_matrix(matrix)
    _emit({"command": "build-matrix", "store": str(args.store),
           "nodes": matrix.node_count, "asymmetry": args.asymmetry})
    return 0


def _fit_kwargs(args) -> dict:
    """Hyperparameter overrides for the chosen model; empty means defaults
    (grid-searched kernel for gp)."""
    kwargs = {}
    if args.model == "gp" and args.gp_params:
        parts = [float(x) for x in args.gp_params.split(",")]
        if len(parts) != 3:
            raise ValueError("--gp-params wants signal_sd,length_scale,noise_sd")
        kwargs["params"] = tuple(parts)
    if args.model == "svr":
        if args.svr_c is not None:
            kwargs["C"] = args.svr_c
        if args.svr_epsilon is not None:
            kwargs["epsilon"] = args.svr_epsilon
    return kwargs


def cmd_forecast(args) -> int:
    store = planner.Store(args.store)
    forecasts = planner.forecast_for_date(store.containers(), store.history(),
                                          _parse_date(args.date), args.model,
                                          args.window, **_fit_kwargs(args))
    out_path = Path(args.out) if args.out else store.root / "forecasts.csv"
    write_forecasts(out_path, forecasts)
    _emit({"command": "forecast", "date": args.date, "model": args.model,
           "forecasts": len(forecasts), "out": str(out_path)})
    return 0


def cmd_backtest(args) -> int:
    store = planner.Store(args.store)
    containers = store.containers()
    records = store.history()
    by_container = {}
    for r in records:
        by_container.setdefault(r.container_id, []).append(r)
    series_list = []
    for c in containers:
        try:
            series_list.append(fc.derive_daily_rates(by_container.get(c.id, []), c))
        except fc.InsufficientHistoryError:
            continue
    results = fc.backtest_many(series_list, args.model, args.horizon,
                               args.window, workers=args.workers,
                               **_fit_kwargs(args))
    lines = ["container_id,model_mae,baseline_mae"]
    for r in results:
        lines.append(f"{r.container_id},{r.model_mae!r},{r.baseline_mae!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    wins = sum(1 for r in results if r.model_mae < r.baseline_mae)
    _emit({"command": "backtest", "model": args.model, "containers": len(results),
           "beat_baseline": wins,
           "mean_model_mae": (sum(r.model_mae for r in results) / len(results)
                              if results else None),
           "mean_baseline_mae": (sum(r.baseline_mae for r in results) / len(results)
                                 if results else None)})
    return 0


def _request_from_args(args, seed: int) -> planner.PlanRequest:
    criteria = SelectionCriteria(
        mandatory_threshold=args.mandatory_threshold,
        optional_threshold=args.optional_threshold,
        force_include=_id_list(args.force_include),
        force_exclude=_id_list(args.force_exclude),
        inclusive=args.inclusive,
    )
    solver = router.SolverConfig(
        iterations=args.iterations,
        ruin_fraction=args.ruin_fraction,
        seed=seed,
        acceptance=args.acceptance,
        threshold_initial=args.threshold_initial,
        threshold_decay=args.threshold_decay,
        ruin_base=args.ruin_base,
    )
    return planner.PlanRequest(
        date=_parse_date(args.date),
        criteria=criteria,
        solver=solver,
        model_tag=args.model,
        window=args.window,
        penalize_optional=args.penalize_optional,
    )


def _plan_payload(request: planner.PlanRequest) -> dict:
    d = request.to_dict()
    return {
        "date": d["date"],
        "criteria": d["criteria"],
        "solver_config": d["solver"],
        "model_tag": d["model_tag"],
        "window": d["window"],
        "penalize_optional": d["penalize_optional"],
    }


def cmd_plan(args) -> int:
    seed = _pick_seed(args.seed)
    request = _request_from_args(args, seed)
    store = planner.Store(args.store)
    if args.server:
        import httpx
        base = args.server.rstrip("/")
        resp = httpx.post(f"{base}/plans", json=_plan_payload(request),
                          timeout=600.0)
        resp.raise_for_status()
        plan_id = resp.json()["plan_id"]
        document = httpx.get(f"{base}/plans/{plan_id}", timeout=60.0).json()
        geojson = httpx.get(f"{base}/plans/{plan_id}/geojson", timeout=60.0).json()
    else:
        document = planner.plan_day(store, request)
        plan_id = document["plan_id"]
        geojson = planner.export_geojson(document, store)

    out_dir = Path(args.out) if args.out else store.root
    out_dir.mkdir(parents=True, exist_ok=True)
    plan_file = out_dir / f"{plan_id}.json"
    plan_file.write_bytes(planner.plan_export_bytes(document))
    geojson_file = out_dir / f"{plan_id}.geojson"
    geojson_file.write_text(json.dumps(geojson, sort_keys=True, indent=2),
                            encoding="utf-8")
    _emit({
        "command": "plan",
        "plan_id": plan_id,
        "seed": seed,
        "date": args.date,
        "fitness": document["fitness"],
        "routes": sum(1 for r in document["routes"] if r["container_ids"]),
        "selected": len(document["selection"]["mandatory"])
        + len(document["selection"]["optional"]),
        "unassigned": len(document["unassigned"]),
        "total_distance_m": document["totals"]["distance_m"],
        "plan_file": str(plan_file),
        "geojson_file": str(geojson_file),
    })
    return 0


def cmd_compare(args) -> int:
    store = planner.Store(args.store)
    document = store.load_plan(args.plan_id)
    baseline = planner.read_baseline(args.baseline)
    report = planner.compare(document, baseline, store)
    text = json.dumps(report, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text)
    return 0


def cmd_serve(args) -> int:
    from .service import serve
    serve(args.store, host=args.host, port=args.port)
    return 0


def cmd_solve_oracle(args) -> int:
    seed = _pick_seed(args.seed)
    request = _request_from_args(args, seed)
    store = planner.Store(args.store)
    containers = store.containers()
    forecasts = planner.forecast_for_date(containers, store.history(),
                                          request.date, request.model_tag,
                                          request.window)
    result = select(forecasts, request.criteria,
                    universe=[c.id for c in containers])
    fills = {f.container_id: f.predicted_fill for f in forecasts}
    instance = planner.build_instance(containers, store.vehicles(),
                                      store.matrix(), store.depot(),
                                      result.selected, fills)
    solution = router.brute_force(instance, result.mandatory)
    _emit({
        "command": "solve-oracle",
        "date": args.date,
        "fitness": solution.fitness,
        "routes": [r.to_dict() for r in solution.routes],
        "unassigned": list(solution.unassigned),
    })
    return 0


def _add_hyper_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gp-params", default=None,
                   help="fix the gp kernel: signal_sd,length_scale,noise_sd "
                        "(default: grid search)")
    p.add_argument("--svr-c", type=float, default=None)
    p.add_argument("--svr-epsilon", type=float, default=None)


def _add_plan_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--date", required=True, help="planning date (ISO-8601)")
    p.add_argument("--model", default="gp", choices=list(fc.MODEL_TAGS))
    p.add_argument("--window", type=int, default=fc.DEFAULT_WINDOW)
    p.add_argument("--mandatory-threshold", type=float, default=0.80)
    p.add_argument("--optional-threshold", type=float, default=0.50)
    p.add_argument("--force-include", default="", help="comma-separated ids")
    p.add_argument("--force-exclude", default="", help="comma-separated ids")
    p.add_argument("--inclusive", action="store_true",
                   help="compare thresholds with >= instead of >")
    p.add_argument("--penalize-optional", action="store_true",
                   help="count unassigned optional containers in the fitness penalty")
    p.add_argument("--iterations", type=int, default=10_000)
    p.add_argument("--ruin-fraction", type=float, default=0.3)
    p.add_argument("--acceptance", default="greedy", choices=["greedy", "threshold"])
    p.add_argument("--threshold-initial", type=float, default=500.0)
    p.add_argument("--threshold-decay", type=float, default=0.999)
    p.add_argument("--ruin-base", default="best", choices=["best", "fresh_random"])
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wasteplan",
        description="Predictive waste-collection planning toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-instance", help="write a synthetic instance")
    p.add_argument("--out", required=True)
    p.add_argument("--containers", type=int, default=217)
    p.add_argument("--small-only", type=int, default=9)
    p.add_argument("--capacity-kg", type=float, default=75.0)
    p.add_argument("--unload-s", type=float, default=210.0)
    p.add_argument("--small-truck-capacity", type=float, default=1700.0)
    p.add_argument("--big-truck-capacity", type=float, default=2000.0)
    p.add_argument("--months", type=int, default=11)
    p.add_argument("--start-date", default="2017-04-01")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_gen_instance)

    p = sub.add_parser("build-matrix", help="build synthetic cost matrices")
    p.add_argument("--store", required=True)
    p.add_argument("--asymmetry", type=float, default=1.1)
    p.add_argument("--detour", type=float, default=costmatrix.DEFAULT_DETOUR_FACTOR)
    p.add_argument("--speed-mps", type=float, default=costmatrix.DEFAULT_SPEED_MPS)
    p.set_defaults(func=cmd_build_matrix)

    p = sub.add_parser("forecast", help="forecast fills for one date")
    p.add_argument("--store", required=True)
    p.add_argument("--date", required=True)
    p.add_argument("--model", default="gp", choices=list(fc.MODEL_TAGS))
    p.add_argument("--window", type=int, default=fc.DEFAULT_WINDOW)
    _add_hyper_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("backtest", help="score models against held-out history")
    p.add_argument("--store", required=True)
    p.add_argument("--model", default="gp", choices=list(fc.MODEL_TAGS))
    p.add_argument("--horizon", type=int, default=30)
    p.add_argument("--window", type=int, default=fc.DEFAULT_WINDOW)
    _add_hyper_flags(p)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("plan", help="plan one collection day")
    p.add_argument("--store", required=True)
    p.add_argument("--out", default=None, help="output directory (default: store)")
    p.add_argument("--server", default=None,
                   help="run against a wasteplan service instead of locally")
    _add_plan_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("compare", help="compare a plan against baseline routes")
    p.add_argument("--store", required=True)
    p.add_argument("--plan-id", required=True)
    p.add_argument("--baseline", required=True,
                   help="csv: vehicle_id,container,container,...")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--store", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("solve-oracle",
                       help="exact solution by exhaustive search (small instances)")
    p.add_argument("--store", required=True)
    _add_plan_flags(p)
    p.set_defaults(func=cmd_solve_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
