"""
HTTP API over a planning store, consumed by the CLI and the dispatcher UI.

Plans are created under a process-wide lock (single writer per store) and
read back as immutable snapshots; every mutation is an append to the plan
history, never an overwrite.
"""

import threading
from dataclasses import asdict
from datetime import date as Date
from typing import List, Literal

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from . import forecast as fc
from . import planner, router, selection as sel


class CriteriaModel(BaseModel):
    mandatory_threshold: float = 0.80
    optional_threshold: float = 0.50
    force_include: List[str] = Field(default_factory=list)
    force_exclude: List[str] = Field(default_factory=list)
    inclusive: bool = False

    def to_criteria(self) -> sel.SelectionCriteria:
        return sel.SelectionCriteria(
            mandatory_threshold=self.mandatory_threshold,
            optional_threshold=self.optional_threshold,
            force_include=frozenset(self.force_include),
            force_exclude=frozenset(self.force_exclude),
            inclusive=self.inclusive,
        )


class SolverConfigModel(BaseModel):
    iterations: int = 10_000
    ruin_fraction: float = 0.3
    seed: int = 0
    acceptance: Literal["greedy", "threshold"] = "greedy"
    threshold_initial: float = 500.0
    threshold_decay: float = 0.999
    ruin_base: Literal["best", "fresh_random"] = "best"

    def to_config(self) -> router.SolverConfig:
        return router.SolverConfig(**self.model_dump())


class PlanRequestModel(BaseModel):
    date: Date
    criteria: CriteriaModel = Field(default_factory=CriteriaModel)
    solver_config: SolverConfigModel = Field(default_factory=SolverConfigModel)
    model_tag: Literal["linear", "gp", "svr"] = "gp"
    window: int = fc.DEFAULT_WINDOW
    penalize_optional: bool = False

    def to_request(self) -> planner.PlanRequest:
        return planner.PlanRequest(
            date=self.date,
            criteria=self.criteria.to_criteria(),
            solver=self.solver_config.to_config(),
            model_tag=self.model_tag,
            window=self.window,
            penalize_optional=self.penalize_optional,
        )


class PlanCreatedModel(BaseModel):
    plan_id: str


class BaselineRouteModel(BaseModel):
    vehicle_id: str
    container_ids: List[str]


class CompareRequestModel(BaseModel):
    routes: List[BaselineRouteModel]


class ForecastModel(BaseModel):
    container_id: str
    date: Date
    predicted_fill: float
    model_tag: str
    overflow: bool = False


def create_app(store_root) -> FastAPI:
    store = planner.Store(store_root)
    app = FastAPI(title="wasteplan", version="0.1.0")
    plan_lock = threading.Lock()

    @app.exception_handler(ValueError)
    def _value_error(_, exc: ValueError):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=400, content={"reason": str(exc)})

    @app.get("/containers")
    def containers() -> List[dict]:
        return [asdict(c) for c in store.containers()]

    @app.get("/history/{container_id}")
    def history(container_id: str) -> List[dict]:
        known = {c.id for c in store.containers()}
        if container_id not in known:
            raise HTTPException(404, detail=f"unknown container {container_id}")
        return [
            {
                "date": r.date.isoformat(),
                "collected_kg": r.collected_kg,
                "collected_yesterday": r.collected_yesterday,
                "sensor_fill": r.sensor_fill,
            }
            for r in store.history() if r.container_id == container_id
        ]

    @app.get("/forecasts")
    def forecasts(date: Date, model: Literal["linear", "gp", "svr"] = "gp",
                  window: int = fc.DEFAULT_WINDOW) -> List[ForecastModel]:
        out = planner.forecast_for_date(store.containers(), store.history(),
                                        date, model, window)
        return [ForecastModel(**f.to_dict()) for f in out]

    @app.post("/plans", response_model=PlanCreatedModel)
    def create_plan(request: PlanRequestModel) -> PlanCreatedModel:
        with plan_lock:
            document = planner.plan_day(store, request.to_request())
        return PlanCreatedModel(plan_id=document["plan_id"])

    @app.get("/plans")
    def list_plans() -> List[dict]:
        return store.list_plans()

    @app.get("/plans/{plan_id}")
    def get_plan(plan_id: str) -> dict:
        try:
            return store.load_plan(plan_id)
        except KeyError:
            raise HTTPException(404, detail=f"unknown plan {plan_id}")

    @app.get("/plans/{plan_id}/geojson")
    def plan_geojson(plan_id: str) -> dict:
        try:
            document = store.load_plan(plan_id)
        except KeyError:
            raise HTTPException(404, detail=f"unknown plan {plan_id}")
        return planner.export_geojson(document, store)

    @app.post("/plans/{plan_id}/compare")
    def plan_compare(plan_id: str, body: CompareRequestModel) -> dict:
        try:
            document = store.load_plan(plan_id)
        except KeyError:
            raise HTTPException(404, detail=f"unknown plan {plan_id}")
        baseline = [(r.vehicle_id, r.container_ids) for r in body.routes]
        return planner.compare(document, baseline, store)

    @app.get("/plans/{plan_id}/trace", response_class=PlainTextResponse)
    def plan_trace(plan_id: str) -> str:
        try:
            document = store.load_plan(plan_id)
        except KeyError:
            raise HTTPException(404, detail=f"unknown plan {plan_id}")
        return planner.trace_csv(document)

    return app


def serve(store_root, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn
    uvicorn.run(create_app(store_root), host=host, port=port)
