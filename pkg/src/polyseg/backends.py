"""Promptable 2D segmenter backends.

The engine treats the 2D model as a black box mapping (image, labeled
points) -> binary mask. In-repo geometric oracles stand in for a real
model, a fault wrapper injects deterministic corruption for robustness
experiments, and the remote backend speaks the HTTP wire protocol.
"""

from __future__ import annotations

import base64
import json
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import BackendUnavailable, ProtocolError
from .geometry import PromptPoint2D
from .slicing import SliceTask

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class Mask2D:
    width: int
    height: int
    bits: np.ndarray  # bool, shape (height, width)

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=bool)
        if bits.shape != (self.height, self.width):
            raise ValueError("mask shape does not match width/height")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)


def _seed_pixels(points: list[PromptPoint2D], width: int, height: int) -> list[tuple[int, int]]:
    out = []
    for p in points:
        x = min(width - 1, max(0, int(np.floor(p.x + 0.5))))
        y = min(height - 1, max(0, int(np.floor(p.y + 0.5))))
        out.append((y, x))
    return out


def flood_oracle(
    image: np.ndarray,
    tau: int,
    positives: list[PromptPoint2D],
    negatives: list[PromptPoint2D],
) -> Mask2D:
    """Threshold at tau, keep 4-connected components seeded by positives,
    then drop any kept component that also contains a negative point."""
    if not 0 <= tau <= 255:
        raise ValueError("tau must be in [0, 255]")
    h, w = image.shape
    supra = image >= tau
    labels, _ = ndimage.label(supra, structure=_FOUR_CONNECTED)
    pos = {labels[y, x] for y, x in _seed_pixels(positives, w, h) if supra[y, x]}
    neg = {labels[y, x] for y, x in _seed_pixels(negatives, w, h) if supra[y, x]}
    keep = pos - neg
    bits = np.isin(labels, list(keep)) if keep else np.zeros((h, w), dtype=bool)
    return Mask2D(width=w, height=h, bits=bits)


class FloodOracleBackend:
    """Connected-component oracle: the stand-in for a promptable 2D model."""

    def __init__(self, tau: int = 128):
        self.tau = int(tau)

    def segment(self, task: SliceTask) -> Mask2D:
        return flood_oracle(task.slice.pixels, self.tau, task.positives, task.negatives)


class ThresholdOracleBackend:
    """Global-threshold oracle; ignores prompt points entirely."""

    def __init__(self, tau: int = 128):
        self.tau = int(tau)

    def segment(self, task: SliceTask) -> Mask2D:
        bits = task.slice.pixels >= self.tau
        return Mask2D(width=task.frame.width, height=task.frame.height, bits=bits)


class FaultBackend:
    """Replaces the inner mask with a random rectangle on a p-fraction of tasks.

    Randomness is keyed by (seed, axis_id, offset_index) so the corrupted
    task set is identical across runs and execution orders.
    """

    def __init__(self, inner, p: float, seed: int = 0):
        if not 0.0 <= p <= 1.0:
            raise ValueError("failure probability must be in [0, 1]")
        self.inner = inner
        self.p = float(p)
        self.seed = int(seed)

    def segment(self, task: SliceTask) -> Mask2D:
        mask = self.inner.segment(task)
        f = task.frame
        rng = np.random.default_rng([self.seed, f.axis_id, f.offset_index])
        if rng.random() >= self.p:
            return mask
        w, h = f.width, f.height
        area = rng.uniform(0.10, 0.40)
        aspect = float(np.exp(rng.uniform(np.log(0.5), np.log(2.0))))
        rw = min(w, max(1, int(round(w * np.sqrt(area * aspect)))))
        rh = min(h, max(1, int(round(h * np.sqrt(area / aspect)))))
        x0 = int(rng.integers(0, w - rw + 1))
        y0 = int(rng.integers(0, h - rh + 1))
        bits = np.zeros((h, w), dtype=bool)
        bits[y0 : y0 + rh, x0 : x0 + rw] = True
        return Mask2D(width=w, height=h, bits=bits)


# ---------------------------------------------------------------------------
# Wire protocol
# ---------------------------------------------------------------------------


def encode_segment_request(task: SliceTask) -> dict:
    f = task.frame
    return {
        "width": f.width,
        "height": f.height,
        "pixels_b64": base64.b64encode(task.slice.pixels.tobytes()).decode("ascii"),
        "positive": [[p.x, p.y] for p in task.positives],
        "negative": [[p.x, p.y] for p in task.negatives],
    }


def encode_mask_reply(mask: Mask2D) -> dict:
    payload = np.where(mask.bits, 255, 0).astype(np.uint8).tobytes()
    return {"mask_b64": base64.b64encode(payload).decode("ascii")}


def decode_mask_reply(doc: dict, width: int, height: int) -> Mask2D:
    try:
        raw = base64.b64decode(doc["mask_b64"], validate=True)
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed reply: {exc}") from exc
    if len(raw) != width * height:
        raise ProtocolError(
            f"mask payload is {len(raw)} bytes, expected {width * height}"
        )
    arr = np.frombuffer(raw, dtype=np.uint8)
    if not np.all((arr == 0) | (arr == 255)):
        raise ProtocolError("mask bytes must be 0 or 255")
    return Mask2D(width=width, height=height, bits=arr.reshape(height, width) == 255)


class RemoteBackend:
    """HTTP client for a segmenter server (POST /segment, GET /health)."""

    def __init__(self, url: str, timeout: float = 30.0, max_inflight: int = 4):
        if not url:
            raise ValueError("remote url must be nonempty")
        self.url = url.rstrip("/")
        self.timeout = timeout
        self._gate = threading.Semaphore(max_inflight)

    def _post(self, body: dict) -> dict:
        req = urllib.request.Request(
            self.url + "/segment",
            data=json.dumps(body).encode(),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        with self._gate:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode())

    def segment(self, task: SliceTask) -> Mask2D:
        body = encode_segment_request(task)
        last_exc = None
        for _ in range(2):  # one retry on transport failure
            try:
                reply = self._post(body)
                break
            except urllib.error.HTTPError as exc:
                if exc.code >= 500:
                    last_exc = exc
                    continue
                raise ProtocolError(f"server rejected request: HTTP {exc.code}") from exc
            except (urllib.error.URLError, TimeoutError, OSError) as exc:
                last_exc = exc
                continue
            except json.JSONDecodeError as exc:
                raise ProtocolError(f"reply is not JSON: {exc}") from exc
        else:
            raise BackendUnavailable(f"{self.url} unreachable: {last_exc}")
        return decode_mask_reply(reply, task.frame.width, task.frame.height)

    def health(self) -> dict:
        try:
            with urllib.request.urlopen(self.url + "/health", timeout=min(self.timeout, 5.0)) as resp:
                return json.loads(resp.read().decode())
        except (urllib.error.URLError, TimeoutError, OSError, json.JSONDecodeError) as exc:
            raise BackendUnavailable(f"{self.url} health check failed: {exc}") from exc


# ---------------------------------------------------------------------------
# Backend specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BackendSpec:
    """Declarative backend description: ``flood:<tau>``, ``threshold:<tau>``,
    ``fault:<p>:<seed>:<inner>``, or ``remote:<url>``."""

    kind: str
    tau: int = 128
    p: float = 0.0
    seed: int = 0
    inner: "BackendSpec | None" = None
    url: str = ""
    timeout: float = 30.0
    max_inflight: int = 4

    def __str__(self) -> str:
        if self.kind in ("flood", "threshold"):
            return f"{self.kind}:{self.tau}"
        if self.kind == "fault":
            return f"fault:{self.p}:{self.seed}:{self.inner}"
        return f"remote:{self.url}"


def parse_backend_spec(text: str) -> BackendSpec:
    kind, _, rest = text.partition(":")
    if kind in ("flood", "threshold"):
        tau = int(rest) if rest else 128
        if not 0 <= tau <= 255:
            raise ValueError("tau must be in [0, 255]")
        return BackendSpec(kind=kind, tau=tau)
    if kind == "fault":
        p_str, _, rest = rest.partition(":")
        seed_str, _, inner = rest.partition(":")
        if not inner:
            raise ValueError("fault spec is fault:<p>:<seed>:<inner>")
        return BackendSpec(
            kind="fault",
            p=float(p_str),
            seed=int(seed_str),
            inner=parse_backend_spec(inner),
        )
    if kind == "remote":
        if not rest:
            raise ValueError("remote spec is remote:<url>")
        return BackendSpec(kind="remote", url=rest)
    raise ValueError(f"unknown backend kind {kind!r}")


def build_backend(spec: BackendSpec):
    if spec.kind == "flood":
        return FloodOracleBackend(spec.tau)
    if spec.kind == "threshold":
        return ThresholdOracleBackend(spec.tau)
    if spec.kind == "fault":
        if not 0.0 <= spec.p <= 1.0:
            raise ValueError("failure probability must be in [0, 1]")
        return FaultBackend(build_backend(spec.inner), spec.p, spec.seed)
    if spec.kind == "remote":
        return RemoteBackend(spec.url, timeout=spec.timeout, max_inflight=spec.max_inflight)
    raise ValueError(f"unknown backend kind {spec.kind!r}")


def segment2d(backend, task: SliceTask) -> Mask2D:
    """Run one slice through a backend and validate the result dimensions."""
    mask = backend.segment(task)
    f = task.frame
    if (mask.width, mask.height) != (f.width, f.height):
        raise ProtocolError(
            f"backend returned {mask.width}x{mask.height} mask for {f.width}x{f.height} slice"
        )
    return mask
