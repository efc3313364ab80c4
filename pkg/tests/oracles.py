"""Independent brute-force oracles for the test suite.

Everything here is deliberately written the slow, obvious way (scalar
loops, BFS, dense sampling) and shares no code path with the package.
"""

from __future__ import annotations

import struct
from collections import deque

import numpy as np


def brute_trilinear(data: np.ndarray, x: float, y: float, z: float) -> float:
    """Scalar trilinear interpolation at index coordinates (clamped corners)."""
    nx, ny, nz = data.shape

    def corner(i, j, k):
        return float(data[min(max(i, 0), nx - 1), min(max(j, 0), ny - 1), min(max(k, 0), nz - 1)])

    i0, j0, k0 = int(np.floor(x)), int(np.floor(y)), int(np.floor(z))
    fx, fy, fz = x - i0, y - j0, z - k0
    val = 0.0
    for di in (0, 1):
        for dj in (0, 1):
            for dk in (0, 1):
                w = (fx if di else 1 - fx) * (fy if dj else 1 - fy) * (fz if dk else 1 - fz)
                val += w * corner(i0 + di, j0 + dj, k0 + dk)
    return val


def dense_plane_crossings(points: np.ndarray, n: np.ndarray, d: float, refine_tol=1e-12):
    """World-space crossings of a polyline with plane {p : p.n = d}.

    Dense sampling finds sign changes per segment, bisection refines them.
    Segments lying in the plane (all residuals < 1e-9) contribute
    endpoints + midpoint, mirroring the documented prompt rule.
    """
    crossings = []
    for a, b in zip(points[:-1], points[1:]):
        fa = float(n @ a) - d
        fb = float(n @ b) - d
        length = float(np.linalg.norm(b - a))
        ts = np.linspace(0.0, 1.0, max(int(length / 0.01), 64) + 1)
        vals = (a[None, :] + ts[:, None] * (b - a)[None, :]) @ n - d
        if np.all(np.abs(vals) < 1e-9):
            crossings.extend([a.copy(), (a + b) / 2.0, b.copy()])
            continue
        for i in range(len(ts) - 1):
            va, vb = vals[i], vals[i + 1]
            if va == 0.0 and i == 0:
                crossings.append(a + ts[i] * (b - a))
                continue
            if va * vb > 0 or (va == 0.0):
                continue
            lo, hi = ts[i], ts[i + 1]
            flo = va
            for _ in range(200):
                mid = (lo + hi) / 2.0
                fm = float(n @ (a + mid * (b - a))) - d
                if abs(fm) < refine_tol or hi - lo < refine_tol:
                    break
                if flo * fm <= 0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            crossings.append(a + ((lo + hi) / 2.0) * (b - a))
        if vals[-1] == 0.0:
            crossings.append(b.copy())
    return crossings


def bfs_flood(image: np.ndarray, tau: int, positives, negatives) -> np.ndarray:
    """4-connected flood fill oracle matching flood_oracle semantics."""
    h, w = image.shape
    supra = image >= tau

    def seed_pixel(p):
        x = min(w - 1, max(0, int(np.floor(p.x + 0.5))))
        y = min(h - 1, max(0, int(np.floor(p.y + 0.5))))
        return y, x

    label_map = np.full((h, w), -1, dtype=int)
    components: list[list[tuple[int, int]]] = []
    for y in range(h):
        for x in range(w):
            if supra[y, x] and label_map[y, x] < 0:
                lbl = len(components)
                comp = []
                q = deque([(y, x)])
                label_map[y, x] = lbl
                while q:
                    cy, cx = q.popleft()
                    comp.append((cy, cx))
                    for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                        ny, nx_ = cy + dy, cx + dx
                        if 0 <= ny < h and 0 <= nx_ < w and supra[ny, nx_] and label_map[ny, nx_] < 0:
                            label_map[ny, nx_] = lbl
                            q.append((ny, nx_))
                components.append(comp)
    keep = set()
    for p in positives:
        y, x = seed_pixel(p)
        if supra[y, x]:
            keep.add(label_map[y, x])
    for p in negatives:
        y, x = seed_pixel(p)
        if supra[y, x]:
            keep.discard(label_map[y, x])
    out = np.zeros((h, w), dtype=bool)
    for lbl in keep:
        for y, x in components[lbl]:
            out[y, x] = True
    return out


def bfs_component_count_26(mask: np.ndarray) -> int:
    """Number of 26-connected components in a 3D boolean array."""
    visited = np.zeros(mask.shape, dtype=bool)
    dims = mask.shape
    offsets = [
        (dx, dy, dz)
        for dx in (-1, 0, 1)
        for dy in (-1, 0, 1)
        for dz in (-1, 0, 1)
        if (dx, dy, dz) != (0, 0, 0)
    ]
    count = 0
    for start in zip(*np.nonzero(mask)):
        if visited[start]:
            continue
        count += 1
        q = deque([start])
        visited[start] = True
        while q:
            x, y, z = q.popleft()
            for dx, dy, dz in offsets:
                nx_, ny, nz = x + dx, y + dy, z + dz
                if (
                    0 <= nx_ < dims[0]
                    and 0 <= ny < dims[1]
                    and 0 <= nz < dims[2]
                    and mask[nx_, ny, nz]
                    and not visited[nx_, ny, nz]
                ):
                    visited[nx_, ny, nz] = True
                    q.append((nx_, ny, nz))
    return count


def brute_closing(mask: np.ndarray, r: int) -> np.ndarray:
    """L-inf closing (dilate then erode) on an infinite zero background."""
    pad = np.pad(mask, 2 * r)
    dil = np.zeros_like(pad)
    idx = list(np.ndindex(pad.shape))
    for x, y, z in idx:
        x0, x1 = max(0, x - r), min(pad.shape[0], x + r + 1)
        y0, y1 = max(0, y - r), min(pad.shape[1], y + r + 1)
        z0, z1 = max(0, z - r), min(pad.shape[2], z + r + 1)
        dil[x, y, z] = pad[x0:x1, y0:y1, z0:z1].any()
    ero = np.zeros_like(dil)
    for x, y, z in idx:
        x0, x1 = x - r, x + r + 1
        y0, y1 = y - r, y + r + 1
        z0, z1 = z - r, z + r + 1
        if x0 < 0 or y0 < 0 or z0 < 0 or x1 > pad.shape[0] or y1 > pad.shape[1] or z1 > pad.shape[2]:
            ero[x, y, z] = False
        else:
            ero[x, y, z] = dil[x0:x1, y0:y1, z0:z1].all()
    s = 2 * r
    return ero[s:-s, s:-s, s:-s]


def mesh_edge_stats(vertices: np.ndarray, triangles: np.ndarray):
    """Euler characteristic and watertightness from raw edge counting."""
    edge_count: dict[tuple[int, int], int] = {}
    for tri in triangles:
        for a, b in ((0, 1), (1, 2), (2, 0)):
            e = tuple(sorted((int(tri[a]), int(tri[b]))))
            edge_count[e] = edge_count.get(e, 0) + 1
    used = np.unique(triangles)
    chi = len(used) - len(edge_count) + len(triangles)
    watertight = all(c == 2 for c in edge_count.values())
    return chi, watertight


def signed_volume(vertices: np.ndarray, triangles: np.ndarray) -> float:
    total = 0.0
    for tri in triangles:
        a, b, c = vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]
        total += float(np.dot(a, np.cross(b, c))) / 6.0
    return total


def surface_area(vertices: np.ndarray, triangles: np.ndarray) -> float:
    total = 0.0
    for tri in triangles:
        a, b, c = vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]
        total += 0.5 * float(np.linalg.norm(np.cross(b - a, c - a)))
    return total


def percentile_sorted(values: np.ndarray, q: float) -> float:
    """Linear-interpolated percentile computed directly on the sorted array."""
    s = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if len(s) == 1:
        return float(s[0])
    pos = q / 100.0 * (len(s) - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, len(s) - 1)
    frac = pos - lo
    return float(s[lo] * (1 - frac) + s[hi] * frac)


def build_nifti(
    dims,
    spacing=(1.0, 1.0, 1.0),
    datatype=16,
    data_bytes=b"",
    scl=(1.0, 0.0),
    srow=None,
    qform=None,
    magic=b"n+1\x00",
    vox_offset=352.0,
) -> bytes:
    """Hand-packed NIfTI-1 stream, independent of the package writer.

    srow: optional (3,4) array enabling sform. qform: optional dict with
    keys b, c, d, offset, qfac enabling qform.
    """
    hdr = bytearray(352)
    struct.pack_into("<i", hdr, 0, 348)
    ndim = 3
    struct.pack_into("<8h", hdr, 40, ndim, dims[0], dims[1], dims[2], 1, 1, 1, 1)
    struct.pack_into("<h", hdr, 70, datatype)
    bitpix = {2: 8, 4: 16, 8: 32, 16: 32, 64: 64, 512: 16}[datatype]
    struct.pack_into("<h", hdr, 72, bitpix)
    qfac = (qform or {}).get("qfac", 1.0)
    struct.pack_into("<8f", hdr, 76, qfac, spacing[0], spacing[1], spacing[2], 0, 0, 0, 0)
    struct.pack_into("<f", hdr, 108, vox_offset)
    struct.pack_into("<2f", hdr, 112, scl[0], scl[1])
    qcode = 1 if qform else 0
    scode = 1 if srow is not None else 0
    struct.pack_into("<2h", hdr, 252, qcode, scode)
    if qform:
        struct.pack_into("<3f", hdr, 256, qform["b"], qform["c"], qform["d"])
        struct.pack_into("<3f", hdr, 268, *qform.get("offset", (0, 0, 0)))
    if srow is not None:
        srow = np.asarray(srow, dtype=np.float64)
        struct.pack_into("<4f", hdr, 280, *srow[0])
        struct.pack_into("<4f", hdr, 296, *srow[1])
        struct.pack_into("<4f", hdr, 312, *srow[2])
    hdr[344:348] = magic
    return bytes(hdr[: int(vox_offset)]) + data_bytes
