"""HTTP face of the handlers: one POST endpoint per capability."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import handlers
from .flow import StepTooLargeError
from .oscillator import BracketingError, IsotropyError
from .quantum import QuadratureError, TruncationError
from .schemas import (
    AvoidRequest,
    ClassifyRequest,
    CoherentRequest,
    ConvergentsRequest,
    FlowRequest,
    GramianRequest,
    KappaRequest,
    KfrakRequest,
    LambdaRequest,
)

NUMERICAL_ERRORS = (StepTooLargeError, QuadratureError, TruncationError, BracketingError)

app = FastAPI(title="obslab", version="0.1.0")


def _run(handler, req):
    try:
        return handler(req)
    except (ValueError, IsotropyError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    except NUMERICAL_ERRORS as exc:
        raise HTTPException(status_code=500, detail=str(exc)) from exc


@app.post("/flow")
def flow(req: FlowRequest) -> dict:
    return _run(handlers.handle_flow, req)


@app.post("/kfrak")
def kfrak(req: KfrakRequest) -> dict:
    return _run(handlers.handle_kfrak, req)


@app.post("/classify")
def classify(req: ClassifyRequest) -> dict:
    return _run(handlers.handle_classify, req)


@app.post("/gramian")
def gramian(req: GramianRequest) -> dict:
    return _run(handlers.handle_gramian, req)


@app.post("/kappa")
def kappa(req: KappaRequest) -> dict:
    return _run(handlers.handle_kappa, req)


@app.post("/lambda")
def lam(req: LambdaRequest) -> dict:
    return _run(handlers.handle_lambda, req)


@app.post("/convergents")
def convergents(req: ConvergentsRequest) -> dict:
    return _run(handlers.handle_convergents, req)


@app.post("/avoid")
def avoid(req: AvoidRequest) -> dict:
    return _run(handlers.handle_avoid, req)


@app.post("/coherent")
def coherent(req: CoherentRequest) -> dict:
    return _run(handlers.handle_coherent, req)
