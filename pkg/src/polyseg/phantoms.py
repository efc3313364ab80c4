"""Synthetic phantoms with analytic ground truth.

Used by the demos and the evaluation experiments: binary-contrast shapes
whose exact voxelization is known, so pipeline output can be scored
without any dataset.
"""

from __future__ import annotations

import numpy as np

from .geometry import Polyline
from .volume import MaskVolume, Volume


def _center_grid(shape, spacing):
    idx = np.indices(shape, dtype=np.float64)
    return [idx[i] * spacing[i] for i in range(3)]


def sphere_phantom(
    shape=(128, 128, 128),
    radius: float = 40.0,
    center=None,
    spacing=(1.0, 1.0, 1.0),
    inside: float = 1.0,
    outside: float = 0.0,
) -> tuple[Volume, MaskVolume]:
    """Binary-contrast sphere; returns the image and its analytic mask."""
    if center is None:
        center = [(n - 1) / 2.0 * s for n, s in zip(shape, spacing)]
    gx, gy, gz = _center_grid(shape, spacing)
    d2 = (gx - center[0]) ** 2 + (gy - center[1]) ** 2 + (gz - center[2]) ** 2
    gt = d2 <= radius * radius
    data = np.where(gt, np.float32(inside), np.float32(outside))
    vol = Volume(dims=shape, spacing=spacing, data=data)
    mask = MaskVolume(dims=shape, spacing=spacing, data=gt)
    return vol, mask


def ellipsoid_phantom(
    shape=(96, 96, 96),
    semiaxes=(34.0, 26.0, 20.0),
    center=None,
    spacing=(1.0, 1.0, 1.0),
) -> tuple[Volume, MaskVolume]:
    if center is None:
        center = [(n - 1) / 2.0 * s for n, s in zip(shape, spacing)]
    gx, gy, gz = _center_grid(shape, spacing)
    q = (
        ((gx - center[0]) / semiaxes[0]) ** 2
        + ((gy - center[1]) / semiaxes[1]) ** 2
        + ((gz - center[2]) / semiaxes[2]) ** 2
    )
    gt = q <= 1.0
    vol = Volume(dims=shape, spacing=spacing, data=gt.astype(np.float32))
    mask = MaskVolume(dims=shape, spacing=spacing, data=gt)
    return vol, mask


def two_blob_phantom(
    shape=(96, 96, 96),
    radius_a: float = 22.0,
    radius_b: float = 14.0,
    spacing=(1.0, 1.0, 1.0),
) -> tuple[Volume, MaskVolume, np.ndarray, np.ndarray]:
    """Two disjoint bright spheres; ground truth covers only blob A.

    Returns (volume, mask_of_A, center_a, center_b) in world mm.
    """
    nx = shape[0]
    ca = np.array([(nx - 1) * 0.30, (shape[1] - 1) * 0.5, (shape[2] - 1) * 0.5])
    cb = np.array([(nx - 1) * 0.75, (shape[1] - 1) * 0.5, (shape[2] - 1) * 0.5])
    ca = ca * spacing
    cb = cb * spacing
    gx, gy, gz = _center_grid(shape, spacing)
    da = (gx - ca[0]) ** 2 + (gy - ca[1]) ** 2 + (gz - ca[2]) ** 2
    db = (gx - cb[0]) ** 2 + (gy - cb[1]) ** 2 + (gz - cb[2]) ** 2
    blob_a = da <= radius_a**2
    blob_b = db <= radius_b**2
    vol = Volume(dims=shape, spacing=spacing, data=(blob_a | blob_b).astype(np.float32))
    mask = MaskVolume(dims=shape, spacing=spacing, data=blob_a)
    return vol, mask, ca, cb


def diameter_polyline(center, direction, radius: float, label: str = "positive") -> Polyline:
    """Straight diameter through ``center`` along ``direction``."""
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    c = np.asarray(center, dtype=np.float64)
    return Polyline(label=label, points=np.stack([c - radius * d, c + radius * d]))


def spanning_polyline(center, extents, label: str = "positive") -> Polyline:
    """Zigzag polyline visiting both extremes of each coordinate axis.

    Every segment stays inside the ellipsoid with the given semi-extents,
    so each slicing plane that meets the shape near its core gets a prompt.
    """
    c = np.asarray(center, dtype=np.float64)
    ex, ey, ez = extents
    pts = np.array(
        [
            c + [ex, 0, 0],
            c - [ex, 0, 0],
            c + [0, ey, 0],
            c - [0, ey, 0],
            c + [0, 0, ez],
            c - [0, 0, ez],
        ]
    )
    return Polyline(label=label, points=pts)


def star_polylines(center, extents, label: str = "positive") -> list[Polyline]:
    """Axis zigzag plus the four cube-diagonal diameters of an ellipsoid.

    Each diagonal stroke reaches the ellipsoid boundary along its own
    direction, so the prompt set spans the full shape along every axis
    family used by the slicing axis sets.
    """
    c = np.asarray(center, dtype=np.float64)
    ext = np.broadcast_to(np.asarray(extents, dtype=np.float64), (3,))
    polys = [spanning_polyline(c, ext, label=label)]
    for d in ((1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1)):
        unit = np.asarray(d, dtype=np.float64) / np.sqrt(3.0)
        reach = 1.0 / np.linalg.norm(unit / ext)
        polys.append(diameter_polyline(c, d, reach, label=label))
    return polys
