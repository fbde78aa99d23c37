"""FastAPI application over a loaded checkpoint.

The service is read-only: state (checkpoint, standardizer, attribution
background, motion library) is assembled at startup and never mutates, so
any number of concurrent requests may share it. The CLI drives the same
Predictor code path, keeping the two interfaces numerically identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..data import NULL_MOTION_ID, SiteRecord, site_from_dict
from ..errors import InputError, LiqformerError
from ..explain import Instance
from ..pipeline import Predictor, load_motions_dir, load_prepared
from ..checkpoint import read_checkpoint, model_version
from ..signal import MotionRecord, NullMotion, encode_motion
from .schemas import (
    ExplainRequest,
    ExplainResponse,
    GroupPhi,
    HealthResponse,
    MotionCatalogResponse,
    MotionIn,
    PredictRequest,
    PredictResponse,
    SensitivityRequest,
    SensitivityResponse,
    SiteIn,
)

MAX_BATCH = 1000


@dataclass(frozen=True)
class ServiceState:
    """Immutable after startup; endpoints reject requests until loaded."""

    predictor: Predictor
    background: list[Instance]
    motions: dict[str, MotionRecord] = field(default_factory=dict)


def build_state(checkpoint_path, prepared_path, motions_dir=None) -> ServiceState:
    cfg, params = read_checkpoint(checkpoint_path)
    blob = Path(checkpoint_path).read_bytes()
    prepared = load_prepared(prepared_path)
    predictor = Predictor(
        cfg,
        params,
        prepared.dataset.standardizer,
        prepared.dataset.spectral,
        version=model_version(blob),
    )
    motions = {}
    if motions_dir is not None:
        wanted = {s.motion_id for s in prepared.dataset.sites if not s.is_null_twin}
        motions = load_motions_dir(motions_dir, wanted)
    background = predictor.background_from(prepared.train)
    return ServiceState(predictor=predictor, background=background, motions=motions)


def _site_record(site: SiteIn) -> SiteRecord:
    return site_from_dict(site.model_dump())


def _raw_motion(state: ServiceState, motion: MotionIn) -> MotionRecord | NullMotion:
    if motion.motion_id is not None:
        if motion.motion_id == NULL_MOTION_ID:
            return NullMotion()
        raw = state.motions.get(motion.motion_id)
        if raw is None:
            raise InputError(f"unknown motion_id {motion.motion_id!r}")
        return raw
    return MotionRecord(motion.samples, motion.dt, "inline")


def _predict_one(state: ServiceState, site: SiteIn, motion: MotionIn) -> PredictResponse:
    record = _site_record(site)
    raw = _raw_motion(state, motion)
    spectrum = encode_motion(raw, state.predictor.spectral)
    pred = state.predictor.predict_site(record, spectrum)
    return PredictResponse(
        p_liq=pred.p_liq, p_noliq=pred.p_noliq, model_version=state.predictor.version
    )


def create_app(state: ServiceState | None) -> FastAPI:
    app = FastAPI(title="liqformer", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        loc = ".".join(str(p) for p in first.get("loc", ()) if p != "body")
        return JSONResponse(status_code=400, content={"error": first.get("msg", "invalid body"), "field": loc})

    @app.exception_handler(LiqformerError)
    async def domain_handler(request: Request, exc: LiqformerError):
        return JSONResponse(status_code=400, content={"error": str(exc), "field": None})

    def require_state() -> ServiceState:
        if state is None:
            raise _Unloaded()
        return state

    class _Unloaded(Exception):
        pass

    @app.exception_handler(_Unloaded)
    async def unloaded_handler(request: Request, exc: _Unloaded):
        return JSONResponse(status_code=503, content={"error": "no model loaded", "field": None})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        if state is None:
            return HealthResponse(status="no_model_loaded", model_version="")
        return HealthResponse(status="ok", model_version=state.predictor.version)

    @app.get("/motions", response_model=MotionCatalogResponse)
    def motions() -> MotionCatalogResponse:
        s = require_state()
        return MotionCatalogResponse(motions=sorted(s.motions.keys()))

    @app.post("/predict", response_model=PredictResponse)
    def predict(req: PredictRequest) -> PredictResponse:
        s = require_state()
        return _predict_one(s, req.site, req.motion)

    @app.post("/batch", response_model=list[PredictResponse])
    def batch(reqs: list[PredictRequest]) -> list[PredictResponse]:
        s = require_state()
        if len(reqs) > MAX_BATCH:
            return JSONResponse(
                status_code=413,
                content={"error": f"batch of {len(reqs)} exceeds the {MAX_BATCH}-site cap", "field": None},
            )
        return [_predict_one(s, r.site, r.motion) for r in reqs]

    @app.post("/explain", response_model=ExplainResponse)
    def explain(req: ExplainRequest) -> ExplainResponse:
        s = require_state()
        record = _site_record(req.site)
        raw = _raw_motion(s, req.motion)
        spectrum = encode_motion(raw, s.predictor.spectral)
        inst = s.predictor.instance_for_site(record, spectrum)
        attr = s.predictor.explain_instance(inst, s.background, n_perms=req.n_perms, seed=req.seed)
        return ExplainResponse(
            base_value=attr.base_value,
            fx=attr.fx,
            n_samples=attr.n_samples,
            groups=[
                GroupPhi(name=n, phi=float(p), std_err=float(e))
                for n, p, e in zip(attr.group_names, attr.phi, attr.std_err)
            ],
        )

    @app.post("/sensitivity", response_model=SensitivityResponse)
    def sensitivity(req: SensitivityRequest) -> SensitivityResponse:
        s = require_state()
        record = _site_record(req.site)
        raw = _raw_motion(s, req.motion)
        grid = s.predictor.sensitivity(record, raw, req.pga_factors, req.spt_factors)
        return SensitivityResponse(
            pga_factors=list(grid.pga_factors),
            spt_factors=list(grid.spt_factors),
            p=[[float(v) for v in row] for row in grid.p],
        )

    return app
