"""Volume types, file I/O, isotropic resampling, and intensity windowing.

Grid convention: ``data[ix, iy, iz]`` with x varying fastest in serialized
form, voxel (0,0,0) centered at ``origin``, world position of voxel (i,j,k)
given by ``origin + direction @ (spacing * (i,j,k))``. All volumes are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import gzip
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import nifti
from .errors import CorruptInput, InvalidMetadata, IoError, UnsupportedFormat

_Triple = tuple[float, float, float]


@dataclass(frozen=True)
class Grid:
    """Shared spatial metadata of a voxel grid."""

    dims: tuple[int, int, int]
    spacing: _Triple
    origin: _Triple = (0.0, 0.0, 0.0)
    direction: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        direction = np.asarray(self.direction, dtype=np.float64)
        direction.setflags(write=False)
        object.__setattr__(self, "direction", direction)
        if len(self.dims) != 3 or any(d < 1 for d in self.dims):
            raise InvalidMetadata(f"dims must be three positive integers, got {self.dims}")
        if any(s <= 0 or not np.isfinite(s) for s in self.spacing):
            raise InvalidMetadata(f"spacing must be strictly positive, got {self.spacing}")
        if direction.shape != (3, 3) or not np.allclose(
            direction.T @ direction, np.eye(3), atol=1e-6
        ):
            raise InvalidMetadata("direction must be a 3x3 orthonormal matrix")

    @property
    def num_voxels(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    @property
    def voxel_volume_mm3(self) -> float:
        return self.spacing[0] * self.spacing[1] * self.spacing[2]

    def is_isotropic(self, tol: float = 1e-9) -> bool:
        sx, sy, sz = self.spacing
        return abs(sx - sy) <= tol and abs(sx - sz) <= tol

    def affine(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.direction * np.asarray(self.spacing)
        m[:3, 3] = self.origin
        return m

    def index_to_world(self, ijk: np.ndarray) -> np.ndarray:
        ijk = np.asarray(ijk, dtype=np.float64)
        return (ijk * self.spacing) @ self.direction.T + self.origin

    def world_to_index(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        return ((pts - self.origin) @ self.direction) / self.spacing

    def corners_world(self) -> np.ndarray:
        """World positions of the 8 extreme voxel centers."""
        nx, ny, nz = self.dims
        idx = np.array(
            [(i, j, k) for i in (0, nx - 1) for j in (0, ny - 1) for k in (0, nz - 1)],
            dtype=np.float64,
        )
        return self.index_to_world(idx)

    def same_grid(self, other: "Grid", tol: float = 1e-6) -> bool:
        return (
            self.dims == other.dims
            and np.allclose(self.spacing, other.spacing, atol=tol)
            and np.allclose(self.origin, other.origin, atol=tol)
            and np.allclose(self.direction, other.direction, atol=tol)
        )


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Volume(Grid):
    """3D scalar image on a regular grid."""

    data: np.ndarray = None

    def __post_init__(self):
        super().__post_init__()
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.shape != self.dims:
            raise InvalidMetadata(
                f"data shape {data.shape} does not match dims {self.dims}"
            )
        object.__setattr__(self, "data", _freeze(data))


@dataclass(frozen=True)
class NormalizedVolume(Grid):
    """Volume rescaled to [0,1] by an intensity window."""

    data: np.ndarray = None
    window: tuple[float, float] = (0.0, 1.0)
    degenerate: bool = False  # window collapsed (hi - lo below resolution)

    def __post_init__(self):
        super().__post_init__()
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.shape != self.dims:
            raise InvalidMetadata("data shape does not match dims")
        object.__setattr__(self, "data", _freeze(data))


@dataclass(frozen=True)
class MaskVolume(Grid):
    """Binary occupancy per voxel."""

    data: np.ndarray = None

    def __post_init__(self):
        super().__post_init__()
        data = np.ascontiguousarray(self.data, dtype=bool)
        if data.shape != self.dims:
            raise InvalidMetadata("data shape does not match dims")
        object.__setattr__(self, "data", _freeze(data))

    def count(self) -> int:
        return int(self.data.sum())


def sample_trilinear(data: np.ndarray, ijk: np.ndarray, edge_tol: float = 1e-9):
    """Trilinear interpolation at continuous index coordinates.

    Returns (values, inside). Points outside the voxel-center hull
    [0, n-1] per axis (within edge_tol) get value 0 and inside=False.
    """
    ijk = np.asarray(ijk, dtype=np.float64)
    flat = ijk.reshape(-1, 3)
    dims = np.asarray(data.shape)
    hi = dims - 1
    inside = np.all((flat >= -edge_tol) & (flat <= hi + edge_tol), axis=1)
    c = np.clip(flat, 0.0, hi)
    i0 = np.minimum(np.floor(c).astype(np.int64), np.maximum(hi - 1, 0))
    f = c - i0
    i1 = np.minimum(i0 + 1, hi)
    x0, y0, z0 = i0[:, 0], i0[:, 1], i0[:, 2]
    x1, y1, z1 = i1[:, 0], i1[:, 1], i1[:, 2]
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
    gx, gy, gz = 1.0 - fx, 1.0 - fy, 1.0 - fz
    vals = (
        data[x0, y0, z0] * gx * gy * gz
        + data[x1, y0, z0] * fx * gy * gz
        + data[x0, y1, z0] * gx * fy * gz
        + data[x0, y0, z1] * gx * gy * fz
        + data[x1, y1, z0] * fx * fy * gz
        + data[x1, y0, z1] * fx * gy * fz
        + data[x0, y1, z1] * gx * fy * fz
        + data[x1, y1, z1] * fx * fy * fz
    )
    vals = np.where(inside, vals, 0.0)
    return vals.reshape(ijk.shape[:-1]), inside.reshape(ijk.shape[:-1])


def resample_isotropic(v: Volume) -> Volume:
    """Resample to cubic voxels at the smallest input spacing.

    Values are trilinear at the new sample centers; new dims per axis are
    floor(extent / t) + 1 with extent = (n-1) * s. Origin and direction are
    preserved. Already-isotropic volumes are returned as a copy.
    """
    if v.is_isotropic():
        return replace(v)
    t = min(v.spacing)
    new_dims = tuple(
        int(np.floor((n - 1) * s / t + 1e-9)) + 1 for n, s in zip(v.dims, v.spacing)
    )
    scale = [t / s for s in v.spacing]
    ax = [np.arange(n, dtype=np.float64) * sc for n, sc in zip(new_dims, scale)]
    gx, gy, gz = np.meshgrid(*ax, indexing="ij")
    ijk = np.stack([gx, gy, gz], axis=-1)
    vals, _ = sample_trilinear(v.data, ijk)
    return Volume(
        dims=new_dims,
        spacing=(t, t, t),
        origin=v.origin,
        direction=v.direction,
        data=vals.astype(np.float32),
    )


def window_normalize(v: Volume, p_lo: float = 0.5, p_hi: float = 99.5) -> NormalizedVolume:
    """Map intensities to [0,1] between the p_lo/p_hi percentiles.

    A collapsed window (hi - lo < 1e-12) yields an all-zero volume with the
    degenerate flag set instead of failing.
    """
    if not (0.0 <= p_lo < p_hi <= 100.0):
        raise ValueError(f"percentiles must satisfy 0 <= lo < hi <= 100, got {(p_lo, p_hi)}")
    lo, hi = np.percentile(v.data, [p_lo, p_hi])
    lo, hi = float(lo), float(hi)
    if hi - lo < 1e-12:
        return NormalizedVolume(
            dims=v.dims,
            spacing=v.spacing,
            origin=v.origin,
            direction=v.direction,
            data=np.zeros(v.dims, dtype=np.float32),
            window=(lo, hi),
            degenerate=True,
        )
    out = np.clip((v.data - lo) / (hi - lo), 0.0, 1.0).astype(np.float32)
    return NormalizedVolume(
        dims=v.dims,
        spacing=v.spacing,
        origin=v.origin,
        direction=v.direction,
        data=out,
        window=(lo, hi),
    )


def mask_resample_nearest(m: MaskVolume, target: Grid) -> MaskVolume:
    """Nearest-neighbor resample of a mask onto another grid."""
    ax = [np.arange(n, dtype=np.float64) for n in target.dims]
    gx, gy, gz = np.meshgrid(*ax, indexing="ij")
    ijk = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
    world = target.index_to_world(ijk)
    src = Grid(m.dims, m.spacing, m.origin, m.direction).world_to_index(world)
    idx = np.round(src).astype(np.int64)
    hi = np.asarray(m.dims) - 1
    ok = np.all((idx >= 0) & (idx <= hi), axis=1)
    out = np.zeros(len(idx), dtype=bool)
    sel = idx[ok]
    out[ok] = m.data[sel[:, 0], sel[:, 1], sel[:, 2]]
    return MaskVolume(
        dims=target.dims,
        spacing=target.spacing,
        origin=target.origin,
        direction=target.direction,
        data=out.reshape(target.dims),
    )


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

_RAW_DTYPES = {"f32": np.dtype("<f4"), "u8": np.dtype("u1"), "i16": np.dtype("<i2")}


def _load_rawjson(path: Path) -> Volume:
    path = Path(path)
    if path.suffix == ".raw":
        json_path, raw_path = path.with_suffix(".json"), path
    else:
        json_path, raw_path = path, path.with_suffix(".raw")
    try:
        header = json.loads(json_path.read_text())
        blob = raw_path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CorruptInput(f"bad JSON sidecar {json_path}: {exc}") from exc
    try:
        dims = tuple(int(d) for d in header["dims"])
        spacing = tuple(float(s) for s in header["spacing"])
        origin = tuple(float(o) for o in header.get("origin", (0, 0, 0)))
        dtype_name = header["dtype"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptInput(f"incomplete rawjson header {json_path}: {exc}") from exc
    if header.get("order", "little") != "little":
        raise UnsupportedFormat("only little-endian rawjson blobs are supported")
    if dtype_name not in _RAW_DTYPES:
        raise UnsupportedFormat(f"rawjson dtype {dtype_name!r} not supported")
    dtype = _RAW_DTYPES[dtype_name]
    if any(d < 1 for d in dims):
        raise InvalidMetadata(f"nonpositive dimension in {dims}")
    nvox = dims[0] * dims[1] * dims[2]
    if len(blob) < nvox * dtype.itemsize:
        raise CorruptInput(f"raw blob too short for dims {dims}")
    data = np.frombuffer(blob, dtype=dtype, count=nvox).reshape(dims, order="F")
    return Volume(dims=dims, spacing=spacing, origin=origin, data=data.astype(np.float32))


def load_volume(source, format: str = "auto") -> Volume:
    """Load a volume from a NIfTI-1 file/stream or a rawjson pair.

    ``source`` may be a filesystem path or raw bytes (NIfTI only).
    """
    if isinstance(source, (bytes, bytearray)):
        if format not in ("auto", "nifti1"):
            raise UnsupportedFormat("byte input is only supported for NIfTI-1")
        dims, spacing, origin, direction, data = nifti.read_nifti(bytes(source))
        return Volume(dims=dims, spacing=spacing, origin=origin, direction=direction, data=data)

    path = Path(source)
    if format == "auto":
        name = path.name.lower()
        format = "rawjson" if name.endswith((".raw", ".json")) else "nifti1"
    if format == "rawjson":
        return _load_rawjson(path)
    if format != "nifti1":
        raise UnsupportedFormat(f"unknown volume format {format!r}")
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    dims, spacing, origin, direction, data = nifti.read_nifti(buf)
    return Volume(dims=dims, spacing=spacing, origin=origin, direction=direction, data=data)


def mask_to_nifti_bytes(m: MaskVolume) -> bytes:
    return nifti.write_nifti_u8(
        m.dims, m.spacing, m.origin, m.direction, m.data.astype(np.uint8)
    )


def save_mask(m: MaskVolume, path, format: str = "auto") -> None:
    """Write a binary mask as NIfTI-1 uint8 (gzip if *.gz) or a rawjson pair."""
    path = Path(path)
    if format == "auto":
        name = path.name.lower()
        format = "rawjson" if name.endswith((".raw", ".json")) else "nifti1"
    try:
        if format == "nifti1":
            buf = mask_to_nifti_bytes(m)
            if path.name.lower().endswith(".gz"):
                buf = gzip.compress(buf, mtime=0)
            path.write_bytes(buf)
        elif format == "rawjson":
            raw_path = path.with_suffix(".raw") if path.suffix == ".json" else path
            header = {
                "dims": list(m.dims),
                "spacing": list(m.spacing),
                "origin": list(m.origin),
                "dtype": "u8",
                "order": "little",
            }
            raw_path.write_bytes(m.data.astype(np.uint8).ravel(order="F").tobytes())
            raw_path.with_suffix(".json").write_text(json.dumps(header))
        else:
            raise UnsupportedFormat(f"unknown mask format {format!r}")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_mask(source, format: str = "auto") -> MaskVolume:
    """Load a mask previously written by save_mask."""
    v = load_volume(source, format=format)
    return MaskVolume(
        dims=v.dims,
        spacing=v.spacing,
        origin=v.origin,
        direction=v.direction,
        data=v.data > 0.5,
    )
