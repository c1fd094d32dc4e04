"""HTTP layer implementing the scoring wire contract.

POST /score        {prompt}   -> {p_yes, p_no}
POST /score_batch  {prompts}  -> {scores: [{p_yes, p_no}]}
GET  /health                  -> {status, model_name}
Malformed bodies are rejected with 400 and a message.
"""
from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .model import ScorerBackend, ServiceConfig, build_backend

log = logging.getLogger(__name__)


class ScoreIn(BaseModel):
    prompt: str


class ScoreOut(BaseModel):
    p_yes: float
    p_no: float


class BatchIn(BaseModel):
    prompts: list[str]


class BatchOut(BaseModel):
    scores: list[ScoreOut]


class HealthOut(BaseModel):
    status: str
    model_name: str


def create_app(backend: ScorerBackend) -> FastAPI:
    app = FastAPI(title="scorer-service")

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.post("/score", response_model=ScoreOut)
    def score(body: ScoreIn) -> ScoreOut:
        p_yes, p_no = backend.yes_probability(body.prompt)
        return ScoreOut(p_yes=p_yes, p_no=p_no)

    @app.post("/score_batch", response_model=BatchOut)
    def score_batch(body: BatchIn) -> BatchOut:
        pairs = backend.yes_probability_batch(body.prompts)
        return BatchOut(scores=[ScoreOut(p_yes=y, p_no=n) for y, n in pairs])

    @app.get("/health", response_model=HealthOut)
    def health() -> HealthOut:
        return HealthOut(status="ok", model_name=backend.model_name)

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    backend = build_backend(config)
    app = create_app(backend)
    uvicorn.run(app, host="0.0.0.0", port=config.port)
