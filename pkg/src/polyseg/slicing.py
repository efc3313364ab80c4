"""Slice extraction and task scheduling.

A slice renders the normalized volume to 8-bit grayscale on a frame's pixel
grid (round-half-up, zero outside the volume). Scheduling walks every frame
of every axis and keeps only those where at least one positive prompt point
lands inside the pixel bounds.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import NoPositivePrompts
from .geometry import (
    AxisSet,
    Polyline,
    PromptPoint2D,
    SliceFrame,
    intersect_polyline_plane,
    pixel_to_world,
    slice_frames,
)
from .volume import NormalizedVolume, sample_trilinear


@dataclass(frozen=True)
class Slice2D:
    """8-bit grayscale rendering of one slicing plane."""

    frame: SliceFrame
    pixels: np.ndarray  # uint8, shape (height, width)
    inside: np.ndarray  # bool, shape (height, width)

    def __post_init__(self):
        for name in ("pixels", "inside"):
            arr = getattr(self, name)
            arr.setflags(write=False)


@dataclass(frozen=True)
class SliceTask:
    """A slice plus its projected prompt points, ready for 2D inference."""

    slice: Slice2D
    positives: list[PromptPoint2D]
    negatives: list[PromptPoint2D]

    @property
    def frame(self) -> SliceFrame:
        return self.slice.frame


def extract_slice(nv: NormalizedVolume, f: SliceFrame) -> Slice2D:
    """Render a frame from the normalized volume (trilinear, round-half-up)."""
    if abs(f.pitch - min(nv.spacing)) > 1e-9:
        raise ValueError("frame pitch must equal the volume's isotropic spacing")
    xs = np.arange(f.width, dtype=np.float64)
    ys = np.arange(f.height, dtype=np.float64)
    gx, gy = np.meshgrid(xs, ys)  # shape (height, width)
    world = pixel_to_world(f, gx, gy)
    ijk = nv.world_to_index(world.reshape(-1, 3))
    vals, inside = sample_trilinear(nv.data, ijk)
    pix = np.floor(255.0 * vals + 0.5)
    pix[~inside] = 0.0
    return Slice2D(
        frame=f,
        pixels=pix.reshape(f.height, f.width).astype(np.uint8),
        inside=inside.reshape(f.height, f.width),
    )


def _in_bounds(p: PromptPoint2D, f: SliceFrame) -> bool:
    return 0.0 <= p.x < f.width and 0.0 <= p.y < f.height


def schedule(
    nv: NormalizedVolume,
    axisset: AxisSet,
    prompts: list[Polyline],
    stride_voxels: int = 1,
) -> list[SliceTask]:
    """Build the deterministic task list (axis order, then offset order).

    Frames whose plane has no in-bounds positive prompt intersection are
    skipped; out-of-bounds prompt points are dropped.
    """
    if not any(p.positive for p in prompts):
        raise NoPositivePrompts("at least one positive polyline is required")
    pitch = min(nv.spacing)
    tasks: list[SliceTask] = []
    for axis_id, axis in enumerate(axisset.axes):
        for f in slice_frames(nv, axis, axis_id, stride_voxels, pitch):
            positives: list[PromptPoint2D] = []
            negatives: list[PromptPoint2D] = []
            for poly in prompts:
                for p in intersect_polyline_plane(poly, f):
                    if not _in_bounds(p, f):
                        continue
                    (positives if poly.positive else negatives).append(p)
            if not positives:
                continue
            tasks.append(
                SliceTask(slice=extract_slice(nv, f), positives=positives, negatives=negatives)
            )
    return tasks


def slice_to_png(s: Slice2D) -> bytes:
    """Encode the slice as an 8-bit grayscale PNG (row-major)."""
    buf = io.BytesIO()
    Image.fromarray(s.pixels, mode="L").save(buf, format="PNG")
    return buf.getvalue()
