"""Thresholded classification service over immutable ensemble bundles.

`classify` is the pure core: given a WS-trained and a WoS-trained bundle, it
routes each item to one bundle per the analysis mode, runs experts and meta
head, and applies the reliability threshold (strictly greater-than). Below the
threshold the CiTO property falls back to the general-purpose
citesForInformation. The HTTP layer wraps the same core; identical requests
produce byte-identical bodies, and bundles are never reloaded in place.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field, field_validator

from .corpus import CITO_FALLBACK_IRI, cito_for, format_text
from .explain import explain_instance_report
from .meta import ffnn_predict
from .pipeline import EnsembleBundle, canonical_dumps
from .voting import assemble_z

MODES = ("mixed", "with_sections", "without_sections")
DEFAULT_THRESHOLD = 0.90
DEFAULT_MAX_BATCH = 512


class ServiceError(ValueError):
    pass


class MissingBundleError(ServiceError):
    pass


@dataclass(frozen=True)
class BundlePair:
    """The WS- and WoS-trained bundles backing one service instance."""

    ws: EnsembleBundle | None = None
    wos: EnsembleBundle | None = None

    def __post_init__(self) -> None:
        if self.ws is None and self.wos is None:
            raise ValueError("at least one bundle is required")
        if self.ws is not None and self.ws.setting != "WS":
            raise ValueError("the ws slot must hold a WS-trained bundle")
        if self.wos is not None and self.wos.setting != "WoS":
            raise ValueError("the wos slot must hold a WoS-trained bundle")
        if self.ws is not None and self.wos is not None:
            a, b = self.ws.schema, self.wos.schema
            if (a.dataset_name, a.classes, dict(a.cito_iris)) != (b.dataset_name, b.classes, dict(b.cito_iris)):
                raise ValueError("WS and WoS bundles must share one schema")

    @property
    def schema(self):
        bundle = self.ws if self.ws is not None else self.wos
        return bundle.schema

    def require(self, setting: str) -> EnsembleBundle:
        bundle = self.ws if setting == "WS" else self.wos
        if bundle is None:
            raise MissingBundleError(f"no bundle loaded for the {setting} setting")
        return bundle


def _route(mode: str, section_title: str | None) -> str:
    """Which bundle handles an item: exactly one per item in every mode."""
    if mode == "with_sections":
        return "WS"
    if mode == "without_sections":
        return "WoS"
    return "WS" if (section_title or "").strip() else "WoS"


def _effective_title(mode: str, section_title: str | None) -> str | None:
    return None if mode == "without_sections" else section_title


def classify(
    bundles: BundlePair,
    items: Sequence[tuple[str | None, str]],
    mode: str = "mixed",
    threshold: float = DEFAULT_THRESHOLD,
) -> list[dict]:
    """Classify (section_title, context) items; returns JSON-ready results.

    Pure in (bundles, items, mode, threshold): no hidden state, so repeated
    identical calls produce identical output.
    """
    if mode not in MODES:
        raise ServiceError(f"mode must be one of {MODES}, got {mode!r}")
    if not 0.0 < threshold <= 1.0:
        raise ServiceError("threshold must lie in (0, 1]")
    if not items:
        raise ServiceError("items must be non-empty")

    schema = bundles.schema
    results = []
    for section_title, context in items:
        if not isinstance(context, str) or not context.strip():
            raise ServiceError("every item needs a non-empty context")
        setting = _route(mode, section_title)
        bundle = bundles.require(setting)
        title = _effective_title(mode, section_title)
        inp = format_text(title, context, setting)
        ordered = sorted(bundle.experts, key=lambda e: (e.target_class, e.variant != "domain"))
        z = assemble_z(ordered, inp)
        prediction = ffnn_predict(bundle.meta, z)
        reliable = bool(float(np.max(prediction.probabilities)) > threshold)
        predicted = int(prediction.label)
        results.append(
            {
                "section_title": section_title,
                "context": context,
                "setting": setting,
                "experts": [
                    {
                        "class_name": schema.classes[expert.target_class],
                        "variant": expert.variant,
                        "positive_probability": float(z[slot]),
                    }
                    for slot, expert in enumerate(ordered)
                ],
                "meta_probabilities": {
                    schema.classes[j]: float(p) for j, p in enumerate(prediction.probabilities)
                },
                "predicted_class": schema.classes[predicted],
                "reliable": reliable,
                "cito_iri": cito_for(schema, predicted) if reliable else CITO_FALLBACK_IRI,
            }
        )
    return results


def classification_body(
    bundles: BundlePair,
    items: Sequence[tuple[str | None, str]],
    mode: str = "mixed",
    threshold: float = DEFAULT_THRESHOLD,
) -> dict:
    """The full response document; the CLI and the HTTP endpoint share it."""
    return {
        "mode": mode,
        "threshold": threshold,
        "results": classify(bundles, items, mode, threshold),
    }


class ItemModel(BaseModel):
    section_title: str | None = None
    context: str

    @field_validator("context")
    @classmethod
    def _non_empty(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("context must be non-empty")
        return value


class ClassifyRequestModel(BaseModel):
    items: list[ItemModel] = Field(min_length=1)
    mode: Literal["mixed", "with_sections", "without_sections"] = "mixed"
    threshold: float = Field(default=DEFAULT_THRESHOLD, gt=0.0, le=1.0)


def build_app(bundles: BundlePair, max_batch: int = DEFAULT_MAX_BATCH) -> FastAPI:
    """Assemble the HTTP API over a fixed, immutable bundle pair.

    Endpoints: POST /classify, POST /explain, GET /schema, GET /health.
    Swapping models requires a restart; there is no in-place reload.
    """
    app = FastAPI(title="citeintent", version="0.1.0")
    schema = bundles.schema
    loaded = {
        setting: bundle.metadata
        for setting, bundle in (("WS", bundles.ws), ("WoS", bundles.wos))
        if bundle is not None
    }

    def _items(request: ClassifyRequestModel) -> list[tuple[str | None, str]]:
        if len(request.items) > max_batch:
            raise HTTPException(
                status_code=413,
                detail=f"batch of {len(request.items)} exceeds the limit of {max_batch} items",
            )
        return [(item.section_title, item.context) for item in request.items]

    def _json(body: dict) -> Response:
        return Response(content=canonical_dumps(body), media_type="application/json")

    @app.get("/health")
    def health() -> Response:
        return _json({"status": "ok", "dataset": schema.dataset_name, "bundles": loaded})

    @app.get("/schema")
    def get_schema() -> Response:
        return _json(
            {
                "dataset_name": schema.dataset_name,
                "classes": list(schema.classes),
                "cito_iris": dict(schema.cito_iris),
                "fallback_iri": CITO_FALLBACK_IRI,
            }
        )

    @app.post("/classify")
    def classify_endpoint(request: ClassifyRequestModel) -> Response:
        items = _items(request)
        try:
            body = classification_body(bundles, items, request.mode, request.threshold)
        except MissingBundleError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except ServiceError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return _json(body)

    @app.post("/explain")
    def explain_endpoint(request: ClassifyRequestModel) -> Response:
        items = _items(request)
        reports = []
        for i, (section_title, context) in enumerate(items):
            setting = _route(request.mode, section_title)
            try:
                bundle = bundles.require(setting)
            except MissingBundleError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            reports.append(
                explain_instance_report(
                    bundle,
                    _effective_title(request.mode, section_title),
                    context,
                    threshold=request.threshold,
                    instance_id=str(i),
                )
            )
        return _json({"mode": request.mode, "threshold": request.threshold, "results": reports})

    return app
