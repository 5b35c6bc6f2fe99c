"""HTTP verification service.

POST /verify scores a raw (x, y, t) trajectory with the loaded model; the
wire format never exposes the feature pipeline, so clients stay agnostic to
the representation the model was trained with.  The model is immutable after
load and shared read-only across requests; reloading swaps it atomically.
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .errors import HandproofError, NonFiniteValue, TooFewPoints
from .gru import GruModel, load_model, predict
from .trajectory import validate

MODEL_ENV_VAR = "HANDPROOF_MODEL"


class ModelHolder:
    """Current model plus its identity; swap is a single assignment."""

    def __init__(self):
        self._entry: tuple[GruModel, str, str] | None = None

    def load(self, path: str | Path) -> None:
        path = Path(path)
        model = load_model(str(path))
        digest = hashlib.sha256(path.read_bytes()).hexdigest()[:8]
        # tuple assignment is atomic; in-flight requests keep their snapshot
        self._entry = (model, f"{path.stem}-{digest}", str(path))

    @property
    def entry(self) -> tuple[GruModel, str, str] | None:
        return self._entry


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "detail": detail})


def create_app(
    model_path: str | Path | None = None,
    cors_origin: str | None = None,
    holder: ModelHolder | None = None,
) -> FastAPI:
    """Build the app; the model loads eagerly when a path is given."""
    app = FastAPI(title="handproof", docs_url=None, redoc_url=None)
    if holder is None:
        holder = ModelHolder()
    if model_path is not None:
        holder.load(model_path)
    app.state.holder = holder

    if cors_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.get("/health")
    def health():
        entry = holder.entry
        return {"status": "ok", "model_id": entry[1] if entry else None}

    @app.get("/model")
    def model_info():
        entry = holder.entry
        if entry is None:
            return _error(503, "no_model", "no model loaded")
        model, model_id, path = entry
        return {
            "model_id": model_id,
            "representation": model.representation,
            "input_dim": model.input_dim,
            "hidden_dim": model.hidden_dim,
            "threshold": model.threshold,
            "path": path,
        }

    @app.post("/verify")
    async def verify(request: Request):
        entry = holder.entry
        if entry is None:
            return _error(503, "no_model", "no model loaded")
        model, model_id, _ = entry
        try:
            body = await request.json()
        except Exception:
            return _error(400, "bad_request", "body is not valid JSON")
        if not isinstance(body, dict) or "points" not in body:
            return _error(400, "bad_request", 'body must be {"points": [[x,y,t],...]}')
        try:
            points = np.asarray(body["points"], dtype=np.float64)
        except (TypeError, ValueError):
            return _error(400, "bad_request", "points must be an array of [x, y, t]")
        try:
            traj = validate(points, repair=True)
        except TooFewPoints as exc:
            return _error(400, "too_few_points", str(exc))
        except NonFiniteValue as exc:
            return _error(400, "non_finite_value", str(exc))
        except HandproofError as exc:
            return _error(400, "bad_request", str(exc))
        probability, verdict = predict(model, traj)
        return {
            "probability": probability,
            "verdict": verdict,
            "model_id": model_id,
            "representation": model.representation,
        }

    @app.post("/reload")
    def reload():
        entry = holder.entry
        if entry is None:
            return _error(503, "no_model", "no model loaded")
        holder.load(entry[2])
        return {"status": "ok", "model_id": holder.entry[1]}

    return app


def resolve_model_path(cli_value: str | None) -> str:
    """CLI flag first, then the HANDPROOF_MODEL environment variable."""
    path = cli_value or os.environ.get(MODEL_ENV_VAR)
    if not path:
        raise SystemExit(
            f"no model given: pass --model or set {MODEL_ENV_VAR}"
        )
    return path


def serve(model_path: str, addr: str = "127.0.0.1:8000",
          cors_origin: str | None = None) -> None:
    """Run the service until terminated; fails at startup on a bad model."""
    import uvicorn

    host, _, port = addr.partition(":")
    app = create_app(model_path, cors_origin)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
