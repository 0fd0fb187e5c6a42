"""Read-only JSON service over loaded run artifacts.

One immutable artifact dictionary is closed over by the app factory, so
every response is a pure function of (artifacts, request).  Error bodies
are always {"error": "..."} and validation problems map to 400, unknown
runs to 404, and range violations (index out of bounds, k too large) to
422.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import changes, embedding, plots
from .engine import ArtifactError, RunArtifact

MAX_CHANGE_INDICES = 512
DEFAULT_K = 20
DEFAULT_CAP = 20


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def load_artifacts(paths) -> dict[str, RunArtifact]:
    """Load artifact files keyed by file stem; duplicate stems are an error."""
    artifacts: dict[str, RunArtifact] = {}
    for path in paths:
        run_id = Path(path).stem
        if run_id in artifacts:
            raise ArtifactError(f"duplicate run id {run_id!r} from {path}")
        artifacts[run_id] = RunArtifact.load(path)
    return artifacts


def _get(artifacts: dict[str, RunArtifact], run_id: str) -> RunArtifact:
    if run_id not in artifacts:
        raise ApiError(404, f"unknown run {run_id!r}")
    return artifacts[run_id]


def _parse_int(raw, name: str) -> int:
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise ApiError(400, f"{name} must be an integer, got {raw!r}") from None


def _parse_point_list(raw, name: str, arity: int) -> list[float]:
    if not isinstance(raw, (list, tuple)) or len(raw) != arity:
        raise ApiError(400, f"{name} must be a list of {arity} numbers")
    try:
        vals = [float(v) for v in raw]
    except (TypeError, ValueError):
        raise ApiError(400, f"{name} must contain only numbers") from None
    if not all(np.isfinite(vals)):
        raise ApiError(400, f"{name} must contain only finite numbers")
    return vals


def create_app(
    artifacts: dict[str, RunArtifact],
    cors_origins=("*",),
    static_dir=None,
) -> FastAPI:
    app = FastAPI(title="alviz", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse({"error": exc.message}, status_code=exc.status)

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(request: Request, exc: StarletteHTTPException):
        return JSONResponse({"error": str(exc.detail)}, status_code=exc.status_code)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse({"error": f"invalid request: {exc.errors()}"}, status_code=400)

    @app.get("/api/runs")
    def list_runs():
        return [
            {
                "run_id": run_id,
                "strategies": list(art.strategies),
                "num_batches": art.num_batches,
                "n_test": art.n_test,
                "dataset_hash": f"{art.dataset_hash:016x}",
            }
            for run_id, art in sorted(artifacts.items())
        ]

    @app.get("/api/runs/{run_id}/embedding")
    def get_embedding(run_id: str):
        art = _get(artifacts, run_id)
        return {
            "coords": art.pc_coords.tolist(),
            "labels": art.test_labels.tolist(),
            "explained_variance": art.pc_explained_variance.tolist(),
        }

    @app.post("/api/runs/{run_id}/selection")
    async def post_selection(run_id: str, request: Request):
        art = _get(artifacts, run_id)
        try:
            body = await request.json()
        except Exception:
            raise ApiError(400, "body must be valid JSON") from None
        if not isinstance(body, dict):
            raise ApiError(400, "body must be a JSON object")
        has_anchor = "anchor" in body
        has_rect = "rect" in body
        if has_anchor == has_rect:
            raise ApiError(400, "provide exactly one of anchor/rect")
        if has_anchor:
            anchor = _parse_point_list(body["anchor"], "anchor", 2)
            k = _parse_int(body.get("k", DEFAULT_K), "k")
            if k < 1:
                raise ApiError(400, "k must be >= 1")
            if k > art.n_test:
                raise ApiError(422, f"k={k} exceeds test set size {art.n_test}")
            sel = embedding.nearest_k(art.pc_coords, (anchor[0], anchor[1]), k)
            return {"indices": sel.indices.tolist(), "anchor_used": anchor}
        rect = _parse_point_list(body["rect"], "rect", 4)
        cap = _parse_int(body.get("cap", DEFAULT_CAP), "cap")
        if cap < 1:
            raise ApiError(400, "cap must be >= 1")
        try:
            sel = embedding.select_rect(art.pc_coords, tuple(rect), cap)
        except ValueError as exc:
            raise ApiError(400, str(exc)) from None
        return {"indices": sel.indices.tolist(), "anchor_used": None}

    @app.get("/api/runs/{run_id}/change")
    def get_change(run_id: str, strategy: str = "", kind: str = "", indices: str = ""):
        art = _get(artifacts, run_id)
        if kind not in changes.KINDS:
            raise ApiError(400, f"unknown kind {kind!r}; choose from {list(changes.KINDS)}")
        if strategy not in art.strategies:
            raise ApiError(
                400, f"unknown strategy {strategy!r}; run has {list(art.strategies)}"
            )
        parts = [p for p in indices.split(",") if p.strip() != ""]
        if len(parts) > MAX_CHANGE_INDICES:
            raise ApiError(400, f"at most {MAX_CHANGE_INDICES} indices per request")
        sel = [_parse_int(p.strip(), "indices") for p in parts]
        try:
            matrix = changes.compute_matrix(art, strategy, kind, sel)
        except IndexError as exc:
            raise ApiError(422, str(exc)) from None
        return {
            "kind": matrix.kind,
            "strategy": matrix.strategy,
            "row_indices": matrix.row_indices.tolist(),
            "q_axis": matrix.q_axis.tolist(),
            "values": matrix.values.tolist(),
        }

    @app.get("/api/runs/{run_id}/mse")
    def get_mse(run_id: str):
        art = _get(artifacts, run_id)
        return {
            "strategies": list(art.strategies),
            "q_axis": list(range(art.num_batches + 1)),
            "mse": art.mse.tolist(),
        }

    @app.get("/api/runs/{run_id}/query-histogram")
    def get_query_histogram(run_id: str, prefix: str | None = None, bins: str = "40"):
        art = _get(artifacts, run_id)
        n_bins = _parse_int(bins, "bins")
        n_prefix = None if prefix is None else _parse_int(prefix, "prefix")
        try:
            edges, per_strategy, comp = plots.histogram_data(art, n_prefix, n_bins)
        except ValueError as exc:
            raise ApiError(400, str(exc)) from None
        return {
            "prefix": n_prefix
            if n_prefix is not None
            else art.queried_labels.shape[1] * art.queried_labels.shape[2],
            "bins": n_bins,
            "bin_edges": edges.tolist(),
            "strategies": {
                name: counts.tolist() for name, counts in per_strategy.items()
            },
            "all_data": comp.tolist(),
        }

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="panel")

    return app
