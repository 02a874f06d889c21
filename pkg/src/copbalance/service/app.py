"""FastAPI service wrapping the analysis, simulation, and tuning pipeline.

Package errors map onto HTTP statuses by category: config -> 422,
data -> 400, runtime -> 409.  The body always carries the error class
name, detail, and category so thin clients can translate them.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__, control, phase, pipeline, plant, zones
from ..errors import BalanceError
from . import schemas

_STATUS_BY_CATEGORY = {"config": 422, "data": 400, "runtime": 409}


def _zone_bounds(model: schemas.ZoneBoundsModel) -> zones.ZoneBounds:
    return zones.ZoneBounds(
        foot_length=model.foot_length_cm, center_frac=model.center_frac,
        d1_hp=model.d1_hp, d2_hp=model.d2_hp,
        d1_lp=model.d1_lp, d2_lp=model.d2_lp,
        d1_ud=model.d1_ud, d2_ud=model.d2_ud,
    )


def _conic(model: schemas.MapModel) -> phase.ConicMap:
    if model.kind == "conic":
        if not model.coefficients or len(model.coefficients) != 6:
            raise BalanceError("a conic map needs six coefficients")
        return phase.ConicMap.from_coefficients(model.coefficients)
    return phase.ConicMap.from_ellipse(
        center=model.center, semi_axes=(model.semi_x_cm, model.semi_y_cm),
        angle=model.angle_rad,
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="copbalance",
        description="COP sway analysis and intermittent balance-control "
                    "simulation",
        version=__version__,
    )

    @app.exception_handler(BalanceError)
    async def balance_error_handler(request: Request, exc: BalanceError):
        body = schemas.ErrorBody(
            error=type(exc).__name__, detail=str(exc), category=exc.category,
        )
        return JSONResponse(status_code=_STATUS_BY_CATEGORY[exc.category],
                            content=body.model_dump())

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(request: Request,
                                       exc: RequestValidationError):
        body = schemas.ErrorBody(
            error="ValidationError", detail=str(exc.errors()),
            category="config",
        )
        return JSONResponse(status_code=422, content=body.model_dump())

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        # domain objects validate constructor arguments with ValueError;
        # reaching one here means the request carried unusable values
        body = schemas.ErrorBody(
            error="ValueError", detail=str(exc), category="config",
        )
        return JSONResponse(status_code=422, content=body.model_dump())

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/analyze", response_model=schemas.AnalyzeResponse)
    def analyze(req: schemas.AnalyzeRequest):
        options = pipeline.AnalyzeOptions(
            cop_source=req.cop_source,
            filter_cutoff_hz=req.filter_cutoff_hz,
            filter_order=req.filter_order,
            min_load_n=req.min_load_n,
            distance_metric=req.distance_metric,
            bounds=_zone_bounds(req.zones),
        )
        result = pipeline.analyze_record(req.record_text, options,
                                         sidecar_text=req.sidecar_text)
        conic = schemas.ConicModel(
            **{k: v for k, v in result.conic.to_dict().items()
               if k != "normalization"},
            kind=result.conic.kind,
            normalization=phase.CONIC_NORMALIZATION,
        )
        return schemas.AnalyzeResponse(
            trial_id=result.trial.id,
            sample_rate_hz=result.trial.sample_rate,
            samples=len(result.trial.samples),
            duration_s=result.trial.duration,
            poincare=schemas.PoincareModel(**result.poincare.to_dict()),
            conic=conic,
            occupancy=result.occupancy_by_short(),
            d_mean_cm=float(np.mean(result.distances)),
            d_max_cm=float(np.max(result.distances)),
            summary=result.summary_text(),
            trajectory_csv=result.trajectory_csv() if req.include_series else None,
            distances_csv=result.distances_csv() if req.include_series else None,
            occupancy_csv=result.occupancy_csv() if req.include_series else None,
        )

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SimulateRequest):
        params = plant.PlantParams(
            mass=req.plant.mass_kg, com_height=req.plant.com_height_m,
            inertia=req.plant.inertia, viscous_damping=req.plant.damping,
            torque_per_intensity=req.plant.torque_per_intensity,
            gravity=req.plant.gravity, dt=req.plant.dt_s,
            cop_y_amplitude=req.plant.cop_y_amplitude_cm,
            cop_y_freq_hz=req.plant.cop_y_freq_hz,
            noise_std=req.plant.noise_std_cm,
        )
        options = pipeline.SimulateOptions(
            duration_s=req.duration_s, seed=req.seed,
            pulses=tuple(plant.DisturbancePulse(p.t_start_s, p.duration_s,
                                                p.torque_nm)
                         for p in req.pulses),
            params=params,
            gains=control.PidGains(req.gains.kp, req.gains.ki, req.gains.kd),
            fuzzy=control.fuzzy_config_from_vertices(
                small=req.fuzzy.small, big=req.fuzzy.big,
                inactive=req.fuzzy.inactive, active=req.fuzzy.active,
                activation_threshold=req.fuzzy.threshold,
            ),
            u_max=req.u_max, windup_limit=req.windup_limit,
            interior_is_safe=req.interior_is_safe,
            control_enabled=req.control_enabled,
            conic=_conic(req.map),
            bounds=_zone_bounds(req.zones),
        )
        trace = pipeline.simulate(options)
        summary = trace.summary()
        return schemas.SimulateResponse(
            **summary,
            trace_csv=trace.to_csv_text() if req.include_trace else None,
        )

    @app.post("/tune", response_model=schemas.TuneResponse)
    def tune(req: schemas.TuneRequest):
        result = pipeline.tune(pipeline.TuneOptions(
            plant_name=req.plant, kp_min=req.kp_min, kp_max=req.kp_max,
            horizon_s=req.horizon_s, dt_s=req.dt_s, preset=req.preset,
        ))
        return schemas.TuneResponse(**result)

    @app.post("/report", response_model=schemas.ReportResponse)
    def report(req: schemas.ReportRequest):
        return schemas.ReportResponse(text=pipeline.compose_report(
            analysis=req.analysis, simulation=req.simulation,
            tuning=req.tuning,
        ))

    return app


app = create_app()
