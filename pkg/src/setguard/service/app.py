"""FastAPI service wrapping the toolkit.

The handler functions are plain callables so the CLI can run them in-process;
the endpoints only add transport and error mapping.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__, pipeline
from ..sim import ScenarioTrace, metric_er
from .models import (
    HealthResponse,
    IdentifyRequest,
    IdentifyResponse,
    ReportRequest,
    ReportResponse,
    SimulateRequest,
    SimulateResponse,
    SynthRequest,
    SynthResponse,
)


def handle_identify(req: IdentifyRequest) -> IdentifyResponse:
    bank = req.bank.to_core()
    M = pipeline.identify_bank(bank)
    return IdentifyResponse(model=M.to_json(), order=M.order,
                            samples=bank.total_samples)


def handle_synth(req: SynthRequest) -> SynthResponse:
    scenario = req.scenario.to_core()
    bundle = pipeline.synthesize_bundle(
        req.bank.to_core(), scenario, req.scenario.seed_points(),
        build_aux=req.options.build_aux,
        coverage_target=req.options.coverage_target,
        coverage_samples=req.options.coverage_samples,
        j_max=req.options.j_max,
        seed=req.options.seed)
    return SynthResponse(bundle=bundle.to_json(),
                         coverage=bundle.meta["coverage"],
                         stalled=bundle.meta["stalled"])


def handle_simulate(req: SimulateRequest) -> SimulateResponse:
    try:
        bundle = pipeline.Bundle.from_json(req.bundle)
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"malformed bundle: {exc}") from exc
    scenario = req.scenario.to_core()
    seed = req.scenario.seed if req.seed is None else req.seed
    trace = pipeline.simulate(scenario, bundle, seed=seed, mode=req.mode)
    return SimulateResponse(trace_csv=trace.to_csv(), e_r=metric_er(trace),
                            seed=seed, mode=req.mode,
                            tubes=trace.tubes if req.include_tubes else None)


def handle_report(req: ReportRequest) -> ReportResponse:
    traces = {name: [ScenarioTrace.from_csv(c) for c in csvs]
              for name, csvs in req.traces.items()}
    return ReportResponse(table=pipeline.report(traces))


def create_app() -> FastAPI:
    app = FastAPI(title="setguard", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/identify", response_model=IdentifyResponse)
    def identify(req: IdentifyRequest):
        return _run(handle_identify, req)

    @app.post("/synth", response_model=SynthResponse)
    def synth(req: SynthRequest):
        return _run(handle_synth, req)

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest):
        return _run(handle_simulate, req)

    @app.post("/report", response_model=ReportResponse)
    def report(req: ReportRequest):
        return _run(handle_report, req)

    return app


def _run(handler, req):
    try:
        return handler(req)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


app = create_app()
