"""Slicing geometry: axis sets, slice frames, and polyline-plane intersection.

Axes are undirected lines through the origin, canonicalized so the first
nonzero component is positive. Slice frames carry a right-handed {u, v, n}
basis and a pixel grid whose (0,0) center sits at ``origin2d``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidAxis, OffPlane, UnsupportedAxisCount
from .volume import Grid

PHI = (1.0 + np.sqrt(5.0)) / 2.0

SUPPORTED_AXIS_COUNTS = (3, 4, 6, 10)


@dataclass(frozen=True)
class AxisSet:
    """Rotationally equispaced undirected slicing axes."""

    k: int
    axes: np.ndarray  # (k, 3) unit rows, canonical sign, lexicographic order

    def __post_init__(self):
        axes = np.asarray(self.axes, dtype=np.float64)
        axes.setflags(write=False)
        object.__setattr__(self, "axes", axes)


def _canonical_sign(vecs: np.ndarray) -> np.ndarray:
    out = vecs.copy()
    for row in out:
        for c in row:
            if c != 0.0:
                if c < 0.0:
                    row *= -1.0
                break
    return out


def axis_set(k: int) -> AxisSet:
    """Build the supported axis families.

    3: coordinate axes. 4: cube body diagonals. 6: icosahedron vertex axes.
    10: dodecahedron vertex axes (cube diagonals plus golden-ratio cyclic set).
    """
    if k == 3:
        vecs = np.eye(3)
    elif k == 4:
        vecs = np.array(
            [[1, 1, 1], [1, 1, -1], [1, -1, 1], [1, -1, -1]], dtype=np.float64
        ) / np.sqrt(3.0)
    elif k == 6:
        base = []
        for s in (1.0, -1.0):
            base.append((0.0, s, PHI))
            base.append((s, PHI, 0.0))
            base.append((PHI, 0.0, s))
        vecs = np.asarray(base) / np.sqrt(1.0 + PHI**2)
    elif k == 10:
        diag = [(1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1)]
        base = [tuple(float(c) for c in v) for v in diag]
        a, b = 1.0 / PHI, PHI
        for sa in (1.0, -1.0):
            for sb in (1.0, -1.0):
                base.append((0.0, sa * a, sb * b))
                base.append((sa * a, sb * b, 0.0))
                base.append((sb * b, 0.0, sa * a))
        vecs = np.asarray(base, dtype=np.float64)
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    else:
        raise UnsupportedAxisCount(f"axis count must be one of {SUPPORTED_AXIS_COUNTS}, got {k}")
    vecs = _canonical_sign(vecs)
    # collapse +-v duplicates that canonicalization may have produced
    uniq: list[tuple[float, float, float]] = []
    for v in vecs:
        if not any(np.allclose(v, u, atol=1e-12) for u in uniq):
            uniq.append(tuple(v))
    vecs = np.asarray(sorted(uniq))
    return AxisSet(k=k, axes=vecs)


def pairwise_angles_deg(axes: np.ndarray) -> np.ndarray:
    """Undirected angles (degrees) between all axis pairs."""
    dots = np.clip(np.abs(axes @ axes.T), 0.0, 1.0)
    iu = np.triu_indices(len(axes), 1)
    return np.degrees(np.arccos(dots[iu]))


def plane_basis(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic right-handed in-plane basis for a unit normal.

    Picks the canonical basis vector least aligned with n (ties: lowest
    index), then u = normalize(n x e), v = n x u.
    """
    n = np.asarray(n, dtype=np.float64)
    norm = np.linalg.norm(n)
    if norm < 1e-12:
        raise InvalidAxis("zero-length plane normal")
    n = n / norm
    e = np.zeros(3)
    e[int(np.argmin(np.abs(n)))] = 1.0
    u = np.cross(n, e)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    return u, v


@dataclass(frozen=True)
class SliceFrame:
    """One slicing plane with its pixel grid and world mapping."""

    normal: np.ndarray
    u: np.ndarray
    v: np.ndarray
    d: float  # plane offset: {p : p . normal = d}
    origin2d: np.ndarray  # world center of pixel (0, 0)
    pitch: float  # mm per pixel
    width: int
    height: int
    axis_id: int
    slab: float  # half-thickness represented along the normal
    offset_index: int = 0  # position in the frame sequence of its axis

    def __post_init__(self):
        for name in ("normal", "u", "v", "origin2d"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def to_meta(self) -> dict:
        return {
            "normal": list(self.normal),
            "u": list(self.u),
            "v": list(self.v),
            "d": self.d,
            "origin2d": list(self.origin2d),
            "pitch": self.pitch,
            "width": self.width,
            "height": self.height,
            "axis_id": self.axis_id,
            "offset_index": self.offset_index,
        }


def pixel_to_world(f: SliceFrame, x, y) -> np.ndarray:
    """World position(s) of continuous pixel coordinates."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return (
        f.origin2d
        + x[..., None] * (f.pitch * f.u)
        + y[..., None] * (f.pitch * f.v)
    )


def world_to_pixel(f: SliceFrame, p) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of pixel_to_world for points on (or within slab of) the plane."""
    p = np.asarray(p, dtype=np.float64)
    resid = np.abs(p @ f.normal - f.d)
    if np.any(resid > f.slab + 1e-9):
        raise OffPlane(f"point lies {float(np.max(resid)):.3g} mm from plane (slab {f.slab:.3g})")
    rel = p - f.origin2d
    return (rel @ f.u) / f.pitch, (rel @ f.v) / f.pitch


def slice_frames(
    grid: Grid, axis: np.ndarray, axis_id: int, stride_voxels: int = 1, pitch: float | None = None
) -> list[SliceFrame]:
    """Planes perpendicular to ``axis`` covering the whole volume extent.

    Plane offsets start at the minimum corner projection and advance by
    stride*pitch; one extra tail frame is appended when the projection range
    leaves a remainder beyond the slab, so every voxel center stays within
    slab of some frame.
    """
    if stride_voxels < 1:
        raise ValueError("stride_voxels must be >= 1")
    if pitch is None:
        pitch = min(grid.spacing)
    n = np.asarray(axis, dtype=np.float64)
    n = n / np.linalg.norm(n)
    u, v = plane_basis(n)
    corners = grid.corners_world()
    dproj = corners @ n
    dmin, dmax = float(dproj.min()), float(dproj.max())
    uproj = corners @ u
    vproj = corners @ v
    umin, vmin = float(uproj.min()), float(vproj.min())
    width = int(np.ceil((uproj.max() - umin) / pitch - 1e-9)) + 1
    height = int(np.ceil((vproj.max() - vmin) / pitch - 1e-9)) + 1
    step = stride_voxels * pitch
    slab = step / 2.0
    count = int(np.floor((dmax - dmin) / step + 1e-9)) + 1
    if dmax - (dmin + (count - 1) * step) > slab + 1e-9:
        count += 1
    frames = []
    for j in range(count):
        d = dmin + j * step
        frames.append(
            SliceFrame(
                normal=n,
                u=u,
                v=v,
                d=d,
                origin2d=d * n + umin * u + vmin * v,
                pitch=pitch,
                width=width,
                height=height,
                axis_id=axis_id,
                slab=slab,
                offset_index=j,
            )
        )
    return frames


@dataclass(frozen=True)
class Polyline:
    """Ordered world-space point sequence with a positive/negative label."""

    label: str
    points: np.ndarray  # (N, 3) mm

    def __post_init__(self):
        if self.label not in ("positive", "negative"):
            raise ValueError(f"label must be positive|negative, got {self.label!r}")
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 2:
            raise ValueError("polyline needs at least two 3D points")
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(seg < 1e-9):
            raise ValueError("consecutive polyline points must be distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def positive(self) -> bool:
        return self.label == "positive"


@dataclass(frozen=True)
class PromptPoint2D:
    """Continuous pixel-space prompt point on one slice."""

    x: float
    y: float
    label: str


def intersect_polyline_plane(
    poly: Polyline, f: SliceFrame, eps_mm: float = 1e-6
) -> list[PromptPoint2D]:
    """Prompt points where the polyline meets the slice plane.

    Crossing segments contribute their intersection; segments lying in the
    plane contribute endpoints plus midpoint. Points closer than 0.5 px to
    an earlier point are dropped.
    """
    if eps_mm <= 0:
        raise ValueError("eps_mm must be positive")
    n, d = f.normal, f.d
    pts = poly.points
    world: list[np.ndarray] = []
    for a, b in zip(pts[:-1], pts[1:]):
        g = float(n @ (b - a))
        if abs(g) >= eps_mm:
            t = (d - float(n @ a)) / g
            if 0.0 <= t <= 1.0:
                world.append(a + t * (b - a))
        elif abs(float(n @ a) - d) < eps_mm:
            world.append(a)
            world.append((a + b) / 2.0)
            world.append(b)
    out: list[PromptPoint2D] = []
    kept: list[tuple[float, float]] = []
    for w in world:
        x, y = world_to_pixel(f, w)
        x, y = float(x), float(y)
        if any((x - kx) ** 2 + (y - ky) ** 2 < 0.25 for kx, ky in kept):
            continue
        kept.append((x, y))
        out.append(PromptPoint2D(x=x, y=y, label=poly.label))
    return out


# ---------------------------------------------------------------------------
# Prompt file format
# ---------------------------------------------------------------------------


def polylines_to_json(polylines: list[Polyline]) -> dict:
    return {
        "polylines": [
            {"label": p.label, "points_mm": [list(map(float, q)) for q in p.points]}
            for p in polylines
        ]
    }


def polylines_from_json(doc: dict) -> list[Polyline]:
    try:
        return [
            Polyline(label=e["label"], points=np.asarray(e["points_mm"], dtype=np.float64))
            for e in doc["polylines"]
        ]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed prompts document: {exc}") from exc


def load_prompts(path) -> list[Polyline]:
    return polylines_from_json(json.loads(Path(path).read_text()))


def save_prompts(polylines: list[Polyline], path) -> None:
    Path(path).write_text(json.dumps(polylines_to_json(polylines), indent=2))
