"""Recomposition: point splatting, cross-axis voting, morphology, meshing.

Every mask pixel becomes a world point on its slice plane. Points splat
along the frame normal onto the voxels within the slab half-thickness, and
each touched voxel records a hit count plus the set of contributing axes.
Cross-axis voting then drops voxels supported by too few independent axes,
which is what removes sparse erroneous 2D segmentations.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage, sparse
from skimage import measure

from .backends import Mask2D
from .errors import EmptyMask, IoError, UnsupportedFormat
from .geometry import SliceFrame, pixel_to_world
from .volume import Grid, MaskVolume

_CONN26 = np.ones((3, 3, 3), dtype=bool)


@dataclass(frozen=True)
class PointBatch:
    """World points from one segmented slice."""

    points: np.ndarray  # (N, 3) mm
    axis_id: int
    slab: float
    normal: np.ndarray
    u: np.ndarray
    v: np.ndarray
    pitch: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        for name in ("normal", "u", "v"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def mask_to_points(m: Mask2D, f: SliceFrame) -> PointBatch:
    """One world point per set pixel, at the pixel center."""
    ys, xs = np.nonzero(m.bits)
    pts = pixel_to_world(f, xs.astype(np.float64), ys.astype(np.float64))
    return PointBatch(
        points=pts, axis_id=f.axis_id, slab=f.slab, normal=f.normal, u=f.u, v=f.v, pitch=f.pitch
    )


class VoteGrid:
    """Per-voxel hit counts and contributing-axis bitsets on the working grid.

    Accumulation is elementwise integer addition and bitwise or, so merging
    partial grids or reordering batches never changes the result.
    """

    def __init__(self, grid: Grid):
        self.grid = Grid(grid.dims, grid.spacing, grid.origin, grid.direction)
        self.counts = np.zeros(grid.dims, dtype=np.int32)
        self.axis_bits = np.zeros(grid.dims, dtype=np.uint16)
        self.points_total = 0
        self.points_dropped = 0  # out-of-grid splat attempts

    def accumulate(self, batch: PointBatch) -> None:
        """Splat a slice's points: each point claims the voxels inside its
        dual box (pitch x pitch in-plane, 2*slab along the normal).

        The boxes of a whole run tile space per axis (half-open intervals),
        so every voxel within slab of a slicing plane is claimed exactly
        once per axis and oblique plane lattices leave no aliasing gaps.
        """
        pts = batch.points
        self.points_total += len(pts)
        if len(pts) == 0:
            return
        g = self.grid
        spacing = np.asarray(g.spacing)
        base = g.world_to_index(pts)  # (N, 3) continuous index coords
        # frame basis expressed in index space (unit world vectors)
        u_i = g.direction.T @ batch.u
        v_i = g.direction.T @ batch.v
        n_i = g.direction.T @ batch.normal
        half = batch.pitch / 2.0
        # candidate offsets: per-component bound of the box in index space
        bound = (
            batch.slab * np.abs(n_i) + half * (np.abs(u_i) + np.abs(v_i))
        ) / spacing + 0.5
        lo = np.floor(-bound).astype(int)
        hi = np.floor(bound).astype(int)
        offsets = np.stack(
            np.meshgrid(*[np.arange(l, h + 1) for l, h in zip(lo, hi)], indexing="ij"), -1
        ).reshape(-1, 3)
        nearest = np.floor(base + 0.5).astype(np.int64)
        cand = nearest[:, None, :] + offsets[None, :, :]  # (N, M, 3)
        delta = (cand - base[:, None, :]) * spacing  # world offsets in grid-axis frame
        du = delta @ u_i
        dv = delta @ v_i
        dn = delta @ n_i
        claimed = (
            (du >= -half)
            & (du < half)
            & (dv >= -half)
            & (dv < half)
            & (dn >= -batch.slab)
            & (dn < batch.slab)
        )
        dims = np.asarray(g.dims)
        inside = np.all((cand >= 0) & (cand < dims), axis=2)
        self.points_dropped += int((claimed & ~inside).sum())
        sel = cand[claimed & inside]
        if len(sel) == 0:
            return
        flat = np.ravel_multi_index((sel[:, 0], sel[:, 1], sel[:, 2]), g.dims)
        np.add.at(self.counts.reshape(-1), flat, 1)
        uniq = np.unique(flat)
        self.axis_bits.reshape(-1)[uniq] |= np.uint16(1 << batch.axis_id)

    def merge(self, other: "VoteGrid") -> None:
        self.counts += other.counts
        self.axis_bits |= other.axis_bits
        self.points_total += other.points_total
        self.points_dropped += other.points_dropped

    def axis_support(self) -> np.ndarray:
        return np.bitwise_count(self.axis_bits)


def accumulate(g: VoteGrid, batch: PointBatch) -> None:
    g.accumulate(batch)


def threshold_votes(g: VoteGrid, min_axes: int, min_hits: int = 1) -> MaskVolume:
    """Keep voxels supported by at least min_axes distinct axes (and
    optionally at least min_hits total hits)."""
    if min_axes < 1:
        raise ValueError("min_axes must be >= 1")
    sel = (g.axis_support() >= min_axes) & (g.counts >= min_hits)
    return MaskVolume(
        dims=g.grid.dims,
        spacing=g.grid.spacing,
        origin=g.grid.origin,
        direction=g.grid.direction,
        data=sel,
    )


def postprocess(
    m: MaskVolume, largest_component: bool = False, closing_radius: int = 0
) -> MaskVolume:
    """Optional 26-connected largest-component pick and L-inf closing."""
    if closing_radius not in (0, 1, 2):
        raise ValueError("closing_radius must be 0, 1, or 2")
    data = m.data
    if largest_component and data.any():
        labels, n = ndimage.label(data, structure=_CONN26)
        if n > 1:
            sizes = np.bincount(labels.ravel())
            sizes[0] = 0
            data = labels == int(np.argmax(sizes))
    if closing_radius > 0 and data.any():
        r = closing_radius
        box = np.ones((2 * r + 1,) * 3, dtype=bool)
        padded = np.pad(data, r)
        closed = ndimage.binary_erosion(
            ndimage.binary_dilation(padded, structure=box), structure=box
        )
        data = closed[r:-r, r:-r, r:-r]
    if data is m.data:
        return m
    return MaskVolume(
        dims=m.dims, spacing=m.spacing, origin=m.origin, direction=m.direction, data=data
    )


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray  # (V, 3) world mm
    triangles: np.ndarray  # (T, 3) vertex indices
    normals: np.ndarray  # (T, 3) per-triangle unit normals

    def __post_init__(self):
        for name in ("vertices", "triangles", "normals"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)


def mesh_area(mesh: Mesh) -> float:
    v = mesh.vertices
    t = mesh.triangles
    cr = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
    return float(0.5 * np.linalg.norm(cr, axis=1).sum())


def mesh_volume(mesh: Mesh) -> float:
    """Signed enclosed volume by tetrahedron summation."""
    v = mesh.vertices
    t = mesh.triangles
    return float(np.einsum("ij,ij->i", v[t[:, 0]], np.cross(v[t[:, 1]], v[t[:, 2]])).sum() / 6.0)


def _taubin_fair(verts: np.ndarray, faces: np.ndarray, iterations: int, clamp: float) -> np.ndarray:
    """Taubin lambda/mu fairing with per-vertex displacement clamped to
    ``clamp`` (removes staircase aliasing without shrinkage)."""
    n = len(verts)
    edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    adj = sparse.coo_matrix(
        (np.ones(len(edges) * 2), (np.concatenate([edges[:, 0], edges[:, 1]]),
                                   np.concatenate([edges[:, 1], edges[:, 0]]))),
        shape=(n, n),
    ).tocsr()
    adj.data[:] = 1.0  # collapse duplicate edge entries
    deg = np.asarray(adj.sum(axis=1)).ravel()
    deg[deg == 0] = 1.0
    inv_deg = sparse.diags(1.0 / deg)
    smooth = inv_deg @ adj
    out = verts.copy()
    for _ in range(iterations):
        for factor in (0.5, -0.53):
            out = out + factor * (smooth @ out - out)
    disp = out - verts
    norms = np.linalg.norm(disp, axis=1)
    over = norms > clamp
    if over.any():
        disp[over] *= (clamp / norms[over])[:, None]
    return verts + disp


def marching_cubes(m: MaskVolume, smooth_iterations: int = 10) -> Mesh:
    """Triangulated 0.5-isosurface of the binary mask in world coordinates.

    The mask is padded by one empty voxel layer so the surface is closed
    even at the grid boundary. By default the raw midpoint-vertex surface is
    faired (clamped Taubin) to remove voxelization staircase bias; pass
    smooth_iterations=0 for the unfaired surface. Tiny meshes are never
    faired. Face orientation is canonicalized so enclosed volume is >= 0.
    """
    if not m.data.any():
        raise EmptyMask("cannot mesh an empty mask")
    padded = np.pad(m.data, 1).astype(np.float32)
    verts, faces, _, _ = measure.marching_cubes(padded, level=0.5, allow_degenerate=False)
    verts = verts - 1.0  # undo padding offset (index coordinates)
    if smooth_iterations > 0 and len(verts) >= 24:
        verts = _taubin_fair(verts, faces, smooth_iterations, clamp=0.5)
    world = m.index_to_world(verts)
    faces = faces.astype(np.int64)
    vol = np.einsum(
        "ij,ij->i", world[faces[:, 0]], np.cross(world[faces[:, 1]], world[faces[:, 2]])
    ).sum()
    if vol < 0:
        faces = faces[:, [0, 2, 1]]
    cr = np.cross(
        world[faces[:, 1]] - world[faces[:, 0]], world[faces[:, 2]] - world[faces[:, 0]]
    )
    areas = np.linalg.norm(cr, axis=1)
    keep = areas > 0.0
    faces, cr, areas = faces[keep], cr[keep], areas[keep]
    normals = cr / areas[:, None]
    return Mesh(vertices=world, triangles=faces, normals=normals)


# ---------------------------------------------------------------------------
# Mesh export
# ---------------------------------------------------------------------------


def _write_stl(mesh: Mesh, path: Path) -> None:
    with open(path, "wb") as fh:
        fh.write(b"\x00" * 80)
        fh.write(struct.pack("<I", mesh.num_triangles))
        v = mesh.vertices
        for tri, nrm in zip(mesh.triangles, mesh.normals):
            rec = struct.pack(
                "<12fH",
                *nrm,
                *v[tri[0]],
                *v[tri[1]],
                *v[tri[2]],
                0,
            )
            fh.write(rec)


def _write_obj(mesh: Mesh, path: Path) -> None:
    with open(path, "w") as fh:
        for p in mesh.vertices:
            fh.write(f"v {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def export_mesh(mesh: Mesh, path, format: str = "auto") -> None:
    """Write binary STL or ASCII OBJ."""
    path = Path(path)
    if format == "auto":
        suffix = path.suffix.lower()
        format = {"": "stl_binary", ".stl": "stl_binary", ".obj": "obj_ascii"}.get(suffix)
        if format is None:
            raise UnsupportedFormat(f"cannot infer mesh format from {path.name!r}")
    try:
        if format == "stl_binary":
            _write_stl(mesh, path)
        elif format == "obj_ascii":
            _write_obj(mesh, path)
        else:
            raise UnsupportedFormat(f"unknown mesh format {format!r}")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
