"""FastAPI app implementing the segmenter wire protocol.

POST /segment takes an 8-bit grayscale image plus labeled points and
returns one binary mask; GET /health reports the loaded model. Mock mode
(flood fill) backs CI; model mode hosts a real promptable 2D model loaded
from a checkpoint and returns its single highest-scoring mask.
"""

from __future__ import annotations

import asyncio
import base64
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, field_validator

from .flood import flood_segment


@dataclass
class ServerConfig:
    mode: str = "mock_flood"  # mock_flood | model
    tau: int = 128
    checkpoint: str | None = None
    max_concurrent: int = 4

    def __post_init__(self):
        if self.mode not in ("mock_flood", "model"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "mock_flood" and not 0 <= self.tau <= 255:
            raise ValueError("tau must be in [0, 255]")


class SegmentRequest(BaseModel):
    width: int = Field(ge=1)
    height: int = Field(ge=1)
    pixels_b64: str
    positive: list[list[float]]
    negative: list[list[float]] = []

    @field_validator("positive")
    @classmethod
    def _positive_nonempty(cls, v):
        if not v:
            raise ValueError("positive point list must not be empty")
        return v

    @field_validator("positive", "negative")
    @classmethod
    def _points_are_pairs(cls, v):
        for p in v:
            if len(p) != 2 or not all(np.isfinite(c) for c in p):
                raise ValueError(f"point {p!r} is not a finite [x, y] pair")
        return v

    def decode_image(self) -> np.ndarray:
        try:
            raw = base64.b64decode(self.pixels_b64, validate=True)
        except Exception as exc:
            raise HTTPException(status_code=400, detail=f"bad pixels_b64: {exc}") from exc
        if len(raw) != self.width * self.height:
            raise HTTPException(
                status_code=400,
                detail=f"pixel payload is {len(raw)} bytes, expected {self.width * self.height}",
            )
        return np.frombuffer(raw, dtype=np.uint8).reshape(self.height, self.width)


def encode_mask(bits: np.ndarray) -> str:
    payload = np.where(bits, 255, 0).astype(np.uint8).tobytes()
    return base64.b64encode(payload).decode("ascii")


class ModelRunner:
    """Adapter around a promptable 2D model.

    The predictor must expose ``predict(image, point_coords, point_labels)
    -> (masks, scores)`` with masks of shape (n, H, W); the reply is the
    single mask with the highest score. ``load_checkpoint`` wires in the
    SAM-style reference implementation when that package is installed;
    any object with the same predict signature can be injected instead.
    """

    def __init__(self, predictor=None):
        self.predictor = predictor

    @classmethod
    def load_checkpoint(cls, checkpoint: str) -> "ModelRunner":
        try:
            from segment_anything import SamPredictor, sam_model_registry  # type: ignore
        except ImportError as exc:
            raise RuntimeError(
                "model mode needs the 'segment_anything' package and a checkpoint; "
                "install it and pass --mode model:<checkpoint>"
            ) from exc
        sam = sam_model_registry["default"](checkpoint=checkpoint)
        return cls(predictor=_SamAdapter(SamPredictor(sam)))

    def segment(self, image: np.ndarray, positive, negative) -> np.ndarray:
        coords = np.array([[p[0], p[1]] for p in positive + negative], dtype=np.float64)
        labels = np.array([1] * len(positive) + [0] * len(negative), dtype=np.int64)
        masks, scores = self.predictor.predict(image, coords, labels)
        best = int(np.argmax(scores))
        return np.asarray(masks[best], dtype=bool)


class _SamAdapter:
    def __init__(self, predictor):
        self._p = predictor

    def predict(self, image, point_coords, point_labels):
        rgb = np.repeat(image[..., None], 3, axis=2)
        self._p.set_image(rgb)
        masks, scores, _ = self._p.predict(
            point_coords=point_coords, point_labels=point_labels, multimask_output=True
        )
        return masks, scores


def create_app(config: ServerConfig | None = None, model: ModelRunner | None = None) -> FastAPI:
    config = config or ServerConfig()
    app = FastAPI(title="seg-sidecar")
    gate = asyncio.Semaphore(config.max_concurrent)
    if config.mode == "model" and model is None and config.checkpoint:
        model = ModelRunner.load_checkpoint(config.checkpoint)
    app.state.config = config
    app.state.model = model

    @app.get("/health")
    def health():
        name = "mock_flood" if config.mode == "mock_flood" else "model"
        return {"status": "ok", "model": name}

    @app.post("/segment")
    async def segment(req: SegmentRequest):
        image = req.decode_image()
        positive = [(p[0], p[1]) for p in req.positive]
        negative = [(p[0], p[1]) for p in req.negative]
        async with gate:
            if config.mode == "mock_flood":
                bits = await asyncio.to_thread(
                    flood_segment, image, config.tau, positive, negative
                )
            else:
                if app.state.model is None:
                    raise HTTPException(status_code=503, detail="model not loaded")
                bits = await asyncio.to_thread(
                    app.state.model.segment, image, positive, negative
                )
        return {"mask_b64": encode_mask(bits)}

    return app
