"""Read-only HTTP/JSON API over one immutable bundle.

Every endpoint is a pure read; identical queries return identical bodies.
Errors always carry a structured {"error", "detail"} JSON body.
"""

from __future__ import annotations

import base64
import io
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.gzip import GZipMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel

from .bundle import ArtifactGroup, Bundle, read_bundle
from .cube import query_view

DEFAULT_PORT = 8787
DEFAULT_BUNDLE_NAME = "default"


class PointOut(BaseModel):
    id: int
    x: float
    y: float
    true_label: int
    prediction: int


class DensityOut(BaseModel):
    cx: float
    cy: float
    count: int
    radius_hint: float


class ViewResponse(BaseModel):
    model: str
    attack: str
    epsilon: float
    level: int
    points: list[PointOut]
    density: list[DensityOut]


class AccuracyResponse(BaseModel):
    model: str
    attack: str
    natural: float
    epsilons: list[float]
    robust: list[float]


class InstanceResponse(BaseModel):
    id: int
    model: str
    attack: str
    epsilon: float
    true_label: int
    true_label_name: str
    clean_prediction: int
    adv_prediction: int
    clean_confidences: list[float]
    adv_confidences: list[float]
    original_png: str
    adversarial_png: str
    noise_png: str


class SelectionEntry(BaseModel):
    id: int
    x: float
    y: float
    true_label: int
    prediction: int


class SelectionResponse(BaseModel):
    model: str
    attack: str
    epsilon: float
    points: list[SelectionEntry | None]


def _png_base64(img01: np.ndarray) -> str:
    """Encode a (C, H, W) float image in [0, 1] as base64 PNG."""
    u8 = np.clip(np.round(np.asarray(img01) * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(u8.transpose(1, 2, 0)).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def create_app(bundle: Bundle | str | Path, ui_dir=None,
               bundle_name: str = DEFAULT_BUNDLE_NAME) -> FastAPI:
    if not isinstance(bundle, Bundle):
        bundle = read_bundle(bundle)
    app = FastAPI(title="advx bundle server")
    app.add_middleware(GZipMiddleware, minimum_size=1024)

    @app.exception_handler(HTTPException)
    async def http_error(request: Request, exc: HTTPException):
        detail = exc.detail
        error = {404: "not_found", 400: "bad_request"}.get(exc.status_code, "error")
        return JSONResponse(status_code=exc.status_code,
                            content={"error": error, "detail": detail})

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"error": "validation", "detail": exc.errors()})

    def check_bundle(name: str | None):
        if name is not None and name != bundle_name:
            raise HTTPException(404, f"unknown bundle {name!r}")

    def get_group(model: str, attack: str) -> ArtifactGroup:
        try:
            return bundle.group(model, attack)
        except KeyError as exc:
            raise HTTPException(404, str(exc)) from exc

    def get_level(model: str, attack: str, epsilon: float):
        group = get_group(model, attack)
        for lv in group.levels:
            if lv.epsilon == epsilon:
                return group, lv
        raise HTTPException(404, f"epsilon {epsilon} not in grid {group.epsilons}")

    @app.get("/api/manifest")
    def manifest(bundle_q: str | None = Query(None, alias="bundle")):
        check_bundle(bundle_q)
        return bundle.manifest

    @app.get("/api/accuracy", response_model=AccuracyResponse)
    def accuracy(model: str, attack: str):
        group = get_group(model, attack)
        robust = [lv.robust_accuracy for lv in group.levels]
        return AccuracyResponse(model=model, attack=attack, natural=robust[0],
                                epsilons=group.epsilons, robust=robust)

    @app.get("/api/view", response_model=ViewResponse)
    def view(model: str, attack: str, epsilon: float, level: int,
             x0: float, y0: float, x1: float, y1: float):
        group, lv = get_level(model, attack, epsilon)
        try:
            result = query_view(lv.cube, (x0, y0, x1, y1), level)
        except Exception as exc:
            raise HTTPException(400, str(exc)) from exc
        points = [PointOut(id=int(rep), x=float(lv.coords[rep, 0]),
                           y=float(lv.coords[rep, 1]),
                           true_label=int(bundle.labels[rep]),
                           prediction=int(lv.predictions[rep]))
                  for _, _, rep, _ in result.representatives]
        density = [DensityOut(cx=cx, cy=cy, count=count, radius_hint=hint)
                   for cx, cy, count, hint in result.density]
        return ViewResponse(model=model, attack=attack, epsilon=epsilon,
                            level=level, points=points, density=density)

    @app.get("/api/instance/{instance_id}", response_model=InstanceResponse)
    def instance(instance_id: int, model: str, attack: str, epsilon: float):
        if not 0 <= instance_id < bundle.instance_count:
            raise HTTPException(404, f"no instance {instance_id}")
        group, lv = get_level(model, attack, epsilon)
        zero = group.levels[0]
        original = bundle.images[instance_id]
        adversarial = bundle.adversarial_image(model, attack, epsilon, instance_id)
        eps_max = group.epsilons[-1]
        if eps_max > 0:
            noise_vis = np.clip((lv.noise[instance_id] + eps_max) / (2 * eps_max),
                                0.0, 1.0)
        else:
            noise_vis = np.full_like(original, 0.5)
        names = [c["name"] for c in bundle.manifest["classes"]]
        true_label = int(bundle.labels[instance_id])
        return InstanceResponse(
            id=instance_id, model=model, attack=attack, epsilon=epsilon,
            true_label=true_label, true_label_name=names[true_label],
            clean_prediction=int(zero.predictions[instance_id]),
            adv_prediction=int(lv.predictions[instance_id]),
            clean_confidences=[float(v) for v in zero.confidences[instance_id]],
            adv_confidences=[float(v) for v in lv.confidences[instance_id]],
            original_png=_png_base64(original),
            adversarial_png=_png_base64(adversarial),
            noise_png=_png_base64(noise_vis))

    @app.get("/api/selection", response_model=SelectionResponse)
    def selection(model: str, attack: str, epsilon: float, ids: str = ""):
        group, lv = get_level(model, attack, epsilon)
        points: list = []
        for token in filter(None, (t.strip() for t in ids.split(","))):
            try:
                idx = int(token)
            except ValueError as exc:
                raise HTTPException(400, f"bad instance id {token!r}") from exc
            if 0 <= idx < bundle.instance_count:
                points.append(SelectionEntry(
                    id=idx, x=float(lv.coords[idx, 0]), y=float(lv.coords[idx, 1]),
                    true_label=int(bundle.labels[idx]),
                    prediction=int(lv.predictions[idx])))
            else:
                points.append(None)
        return SelectionResponse(model=model, attack=attack, epsilon=epsilon,
                                 points=points)

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:
        @app.get("/")
        def index():
            return {"service": "advx bundle server",
                    "endpoints": ["/api/manifest", "/api/accuracy", "/api/view",
                                  "/api/instance/{id}", "/api/selection"]}

    return app
