"""Mask comparison metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import GridMismatch
from .volume import MaskVolume

_CONN26 = np.ones((3, 3, 3), dtype=bool)


@dataclass(frozen=True)
class MaskStats:
    voxels: int
    volume_mm3: float
    components: int  # 26-connectivity


def dice(a: MaskVolume, b: MaskVolume) -> float:
    """2|A n B| / (|A| + |B|); two empty masks compare as 1.0."""
    if not a.same_grid(b):
        raise GridMismatch("masks are on different grids")
    na, nb = a.count(), b.count()
    if na + nb == 0:
        return 1.0
    inter = int(np.logical_and(a.data, b.data).sum())
    return 2.0 * inter / (na + nb)


def stats(m: MaskVolume) -> MaskStats:
    voxels = m.count()
    if voxels:
        _, n = ndimage.label(m.data, structure=_CONN26)
    else:
        n = 0
    return MaskStats(
        voxels=voxels,
        volume_mm3=voxels * m.voxel_volume_mm3,
        components=int(n),
    )
