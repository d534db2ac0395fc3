"""HTTP API for the interactive demo and dataset browser.

Serving state (models, gallery indices, dataset splits) is loaded once at
startup and never mutated, so request handling is read-only; a lock
serializes model forwards without changing results.
"""

import argparse
import base64
import binascii
import io
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image

from .config import load_config
from .data.builders import load_dataset
from .errors import (
    BadKError,
    DuplicateLabelsError,
    EmptyAnswerListError,
    EmptyLabelsError,
    MissingModalityError,
    UnsupportedModeError,
)
from .models import extract_features, load_model
from .tasks.inference import embed_gallery, multimodal_search, zero_shot_classify
from .utils import library_root, resolve_cache_root

DEFAULT_PORT = 5600


class ApiError(Exception):
    def __init__(self, status, code, message):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _bad_image(message="image payload is not a decodable image"):
    return ApiError(400, "bad_image", message)


def _invalid(message):
    return ApiError(422, "invalid_params", message)


def _not_found(message):
    return ApiError(404, "not_found", message)


def decode_image(data):
    """Base64 (optionally data-URL) payload -> RGB uint8 array."""
    if not isinstance(data, str) or not data:
        raise _bad_image("image must be a non-empty base64 string")
    if data.startswith("data:"):
        _, _, data = data.partition(",")
    try:
        raw = base64.b64decode(data, validate=True)
        with Image.open(io.BytesIO(raw)) as img:
            return np.asarray(img.convert("RGB"))
    except (binascii.Error, OSError, ValueError) as exc:
        raise _bad_image(f"cannot decode image: {exc}") from exc


@dataclass
class GalleryIndex:
    """Immutable search index: unit-norm projections aligned with sample ids."""

    gallery_id: str
    ids: list
    proj: torch.Tensor
    thumbnails: list = field(default_factory=list)


@dataclass
class ServiceState:
    models: dict
    processors: dict
    galleries: dict
    datasets: dict
    lock: threading.Lock = field(default_factory=threading.Lock)

    def model_for(self, role):
        if role in self.models:
            return self.models[role]
        if self.models:
            return next(iter(self.models.values()))
        raise _invalid(f"no model configured for role {role!r}")

    def processor_for(self, role):
        if role in self.processors:
            return self.processors[role]
        return next(iter(self.processors.values()))


def load_service_state(service_cfg):
    """Build all serving state from the service config mapping."""
    models, processors = {}, {}
    for role, entry in (service_cfg.get("models") or {}).items():
        model, vis, _ = load_model(
            entry["arch"],
            entry.get("model_type", "base"),
            is_eval=True,
            checkpoint=entry.get("checkpoint"),
        )
        models[role] = model
        processors[role] = vis["eval"]

    datasets = {}
    for name in service_cfg.get("datasets") or []:
        datasets[name] = load_dataset(name)

    state = ServiceState(models=models, processors=processors, galleries={}, datasets=datasets)

    gallery_cfg = service_cfg.get("gallery")
    if gallery_cfg and models:
        name = gallery_cfg["dataset"]
        split_name = gallery_cfg.get("split", "val")
        if name not in datasets:
            datasets[name] = load_dataset(name)
        split = datasets[name][split_name]
        model = state.model_for("retrieval")
        images = torch.stack([split.get_item(i).image for i in range(len(split))])
        proj = embed_gallery(model, images)
        gallery_id = f"{name}:{split_name}"
        state.galleries[gallery_id] = GalleryIndex(
            gallery_id=gallery_id,
            ids=[split.records[i].instance_id for i in range(len(split))],
            proj=proj,
            thumbnails=[f"/media/{name}/{split.records[i].image}" for i in range(len(split))],
        )
    return state


def _require(payload, key, kind, message=None):
    value = payload.get(key)
    if not isinstance(value, kind):
        raise _invalid(message or f"{key} must be of type {kind.__name__}")
    return value


def _prepare_image(state, role, payload):
    array = decode_image(payload.get("image"))
    processor = state.processor_for(role)
    return processor(array)


def create_app(service_cfg=None, state=None):
    if state is None:
        state = load_service_state(service_cfg or {})
    app = FastAPI(title="mmkit service")

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(RequestValidationError)
    async def request_validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"error": {"code": "invalid_params", "message": str(exc.errors())}},
        )

    @app.exception_handler(Exception)
    async def fallback_handler(request: Request, exc: Exception):
        return JSONResponse(
            status_code=500,
            content={"error": {"code": "internal", "message": str(exc)}},
        )

    @app.post("/api/caption")
    async def caption(payload: dict):
        num_beams = payload.get("num_beams", 3)
        max_len = payload.get("max_len", 12)
        if not isinstance(num_beams, int) or num_beams < 1:
            raise _invalid("num_beams must be an integer >= 1")
        if not isinstance(max_len, int) or max_len < 1:
            raise _invalid("max_len must be an integer >= 1")
        image = _prepare_image(state, "caption", payload)
        model = state.model_for("caption")
        if not hasattr(model, "generate"):
            raise _invalid("configured caption model cannot generate")
        with state.lock, torch.no_grad():
            text = model.generate(image.unsqueeze(0), num_beams=num_beams, max_len=max_len)[0]
        return {"caption": text}

    @app.post("/api/vqa")
    async def vqa(payload: dict):
        question = _require(payload, "question", str, "question must be a string")
        answer_list = payload.get("answer_list")
        if not isinstance(answer_list, list) or not all(
            isinstance(a, str) for a in answer_list
        ):
            raise _invalid("answer_list must be a list of strings")
        if not answer_list:
            raise _invalid("answer_list must not be empty")
        image = _prepare_image(state, "caption", payload)
        model = state.model_for("caption")
        try:
            with state.lock, torch.no_grad():
                answer, scores = model.rank_answers(image, question, answer_list)
        except EmptyAnswerListError as exc:
            raise _invalid(str(exc)) from exc
        return {
            "answer": answer,
            "scores": {a: float(s) for a, s in zip(answer_list, scores)},
        }

    @app.post("/api/search")
    async def search(payload: dict):
        gallery_id = _require(payload, "gallery_id", str, "gallery_id must be a string")
        query = _require(payload, "query", str, "query must be a string")
        k = payload.get("k")
        if not isinstance(k, int):
            raise _invalid("k must be an integer")
        gallery = state.galleries.get(gallery_id)
        if gallery is None:
            raise _not_found(f"unknown gallery {gallery_id!r}")
        model = state.model_for("retrieval")
        try:
            with state.lock, torch.no_grad():
                order, scores = multimodal_search(model, gallery.proj, query, k)
        except BadKError as exc:
            raise _invalid(str(exc)) from exc
        return {
            "results": [
                {
                    "id": gallery.ids[i],
                    "score": float(scores[i]),
                    "thumbnail": gallery.thumbnails[i] if gallery.thumbnails else None,
                }
                for i in order
            ]
        }

    @app.post("/api/classify")
    async def classify(payload: dict):
        labels = payload.get("labels")
        if not isinstance(labels, list) or not all(isinstance(l, str) for l in labels):
            raise _invalid("labels must be a list of strings")
        image = _prepare_image(state, "retrieval", payload)
        model = state.model_for("retrieval")
        try:
            with state.lock, torch.no_grad():
                label, probs = zero_shot_classify(
                    model, image, labels, payload.get("prompt", "")
                )
        except (EmptyLabelsError, DuplicateLabelsError) as exc:
            raise _invalid(str(exc)) from exc
        return {
            "label": label,
            "probabilities": {name: float(p) for name, p in zip(labels, probs)},
        }

    @app.post("/api/features")
    async def features(payload: dict):
        mode = payload.get("mode")
        if mode not in ("image", "text", "multimodal"):
            raise _invalid("mode must be one of image, text, multimodal")
        sample = {}
        if payload.get("image") is not None:
            sample["image"] = _prepare_image(state, "retrieval", payload)
        if payload.get("text") is not None:
            text = payload["text"]
            if not isinstance(text, str):
                raise _invalid("text must be a string")
            sample["text_input"] = text
        model = state.model_for("retrieval")
        try:
            with state.lock:
                bundle = extract_features(model, sample, mode)
        except (MissingModalityError, UnsupportedModeError) as exc:
            raise _invalid(str(exc)) from exc
        body = {"mode": mode}
        if bundle.image_embeds_proj is not None:
            body["image_embeds_proj"] = bundle.image_embeds_proj[0].tolist()
        if bundle.text_embeds_proj is not None:
            body["text_embeds_proj"] = bundle.text_embeds_proj[0].tolist()
        if bundle.multimodal_embeds is not None:
            body["multimodal_embeds"] = bundle.multimodal_embeds[0].tolist()
        return body

    @app.get("/api/datasets")
    async def datasets():
        items = []
        for name in sorted(state.datasets):
            splits = state.datasets[name]
            items.append(
                {
                    "name": name,
                    "splits": [
                        {"name": split_name, "count": len(split)}
                        for split_name, split in sorted(splits.items())
                    ],
                }
            )
        return {"datasets": items}

    @app.get("/api/datasets/{name}/samples")
    async def samples(name: str, split: str = "train", offset: int = 0, limit: int = 20):
        if name not in state.datasets:
            raise _not_found(f"unknown dataset {name!r}")
        splits = state.datasets[name]
        if split not in splits:
            raise _not_found(f"dataset {name!r} has no split {split!r}")
        if offset < 0 or limit < 0:
            raise _invalid("offset and limit must be non-negative")
        ds = splits[split]
        total = len(ds)
        items = []
        for index in range(offset, min(offset + limit, total)):
            record = ds.records[index]
            extras = {}
            if record.answers is not None:
                extras["answers"] = record.answers
            if record.label is not None:
                extras["label"] = record.label
            items.append(
                {
                    "instance_id": record.instance_id,
                    "image_url": f"/media/{name}/{record.image}",
                    "text": ds.raw_text(index),
                    "extras": extras,
                }
            )
        return {"total": total, "offset": offset, "limit": limit, "items": items}

    media_root = resolve_cache_root()
    if media_root.is_dir():
        app.mount("/media", StaticFiles(directory=media_root), name="media")
    dist = library_root().parent.parent / "frontend" / "dist"
    if dist.is_dir():
        app.mount("/", StaticFiles(directory=dist, html=True), name="frontend")
    return app


def main(argv=None):
    parser = argparse.ArgumentParser(description="serve the demo API")
    parser.add_argument("--service-cfg", required=True)
    parser.add_argument("--port", type=int, default=DEFAULT_PORT)
    args = parser.parse_args(argv)
    cfg = load_config(args.service_cfg)
    service_cfg = cfg.get("service") or {}
    app = create_app(service_cfg)

    import uvicorn

    uvicorn.run(app, host="127.0.0.1", port=args.port)


if __name__ == "__main__":
    main()
