"""Read-only HTTP API over a trained model and extracted highlights.

The model loads once at startup and is shared immutably; every endpoint
is a pure function of its query string, so identical requests always
produce identical responses. Error bodies are {"error": message}.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .board import BoardQuery, evaluate_grid, point_value
from .core import Position
from .events import EventType
from .regress import load_model
from .states import StateFeature

log = logging.getLogger(__name__)


class ServiceError(ValueError):
    pass


def _load_highlights(data_dir: Path) -> dict[str, list[dict]]:
    """Collect per-half highlight exports into a per-match ranked index."""
    index: dict[str, list[dict]] = {}
    for f in sorted(data_dir.glob("*/half*.highlights.csv")):
        match_id = f.parent.name
        half = int(f.name[4])
        with f.open() as fh:
            for row in csv.DictReader(fh):
                index.setdefault(match_id, []).append(
                    {
                        "half": half,
                        "peak_t": float(row["peak_t"]),
                        "start": float(row["start"]),
                        "end": float(row["end"]),
                        "score": float(row["score"]),
                    }
                )
    for match_id, entries in index.items():
        entries.sort(key=lambda e: -e["score"])
        for rank, e in enumerate(entries, start=1):
            e["rank"] = rank
    return index


def _parse_event(value: str, schema) -> EventType:
    try:
        e = EventType(value)
    except ValueError:
        raise ServiceError(f"unknown event type {value!r}")
    if e not in schema.event_types:
        raise ServiceError(f"event type {value!r} not covered by the model schema")
    return e


def _parse_side(value: str) -> str:
    if value not in ("home", "away"):
        raise ServiceError(f"side must be 'home' or 'away', got {value!r}")
    return value


def create_app(model_path: str | Path, data_dir: str | Path | None = None) -> FastAPI:
    model, schema, meta = load_model(model_path)
    highlights = _load_highlights(Path(data_dir)) if data_dir else {}

    app = FastAPI(title="boardeval", docs_url=None, redoc_url=None)

    @app.exception_handler(ServiceError)
    async def _client_error(request: Request, exc: ServiceError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(Exception)
    async def _server_error(request: Request, exc: Exception):
        log.exception("request failed")
        return JSONResponse(status_code=500, content={"error": str(exc)})

    @app.get("/value")
    def value(event: str, t: float, x: float, y: float, own: int = 0, opp: int = 0, side: str = "home"):
        if own < 0 or opp < 0:
            raise ServiceError("scores must be non-negative")
        if not 0.0 <= t <= schema.half_length:
            raise ServiceError(f"t outside [0, {schema.half_length}]")
        if not (0.0 <= x <= schema.pitch.length and 0.0 <= y <= schema.pitch.width):
            raise ServiceError("position outside the pitch")
        state = StateFeature(
            event_type=_parse_event(event, schema),
            location=Position(x, y),
            t=t,
            own_score=own,
            opp_score=opp,
            side=_parse_side(side),
        )
        return {"value": point_value(model, state, schema)}

    @app.get("/heatmap")
    def heatmap(event: str, t: float, own: int = 0, opp: int = 0, side: str = "home", nx: int = 26, ny: int = 17):
        if own < 0 or opp < 0:
            raise ServiceError("scores must be non-negative")
        if not 2 <= nx <= 400 or not 2 <= ny <= 400:
            raise ServiceError("nx and ny must be in [2, 400]")
        if not 0.0 <= t <= schema.half_length:
            raise ServiceError(f"t outside [0, {schema.half_length}]")
        q = BoardQuery(
            event_type=_parse_event(event, schema),
            t=t,
            own_score=own,
            opp_score=opp,
            side=_parse_side(side),
            nx=nx,
            ny=ny,
        )
        return evaluate_grid(model, q, schema).to_payload()

    @app.get("/events")
    def events():
        return {"events": [e.value for e in schema.event_types]}

    @app.get("/highlights")
    def match_highlights(match: str):
        if match not in highlights:
            return JSONResponse(
                status_code=404, content={"error": f"unknown match {match!r}"}
            )
        return {"match": match, "highlights": highlights[match]}

    @app.get("/meta")
    def meta_endpoint():
        return {
            "schema_hash": schema.schema_hash,
            "model_kind": model.spec.kind,
            "gamma": meta.get("gamma"),
            "training": meta,
            "event_types": [e.value for e in schema.event_types],
            "pitch": {"length": schema.pitch.length, "width": schema.pitch.width},
            "half_length": schema.half_length,
            "matches": sorted(highlights),
        }

    return app
