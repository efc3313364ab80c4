"""Slicing geometry: equispaced axes, slice frames, polyline prompts.

A run slices the volume along k rotationally equispaced undirected axes
(k in {3, 4, 6, 10}) and turns 3D polyline prompts into per-slice 2D point
prompts by intersecting their segments with each slicing plane.
"""

import numpy as np

from polyseg import (
    Polyline,
    axis_set,
    intersect_polyline_plane,
    pixel_to_world,
    slice_frames,
)
from polyseg.geometry import pairwise_angles_deg
from polyseg.volume import Grid

for k in (3, 4, 6, 10):
    axes = axis_set(k)
    angles = pairwise_angles_deg(axes.axes)
    print(f"k={k:>2}: {len(axes.axes)} axes, pairwise angles "
          f"min {angles.min():.4f} deg / max {angles.max():.4f} deg")

# Frames tile the whole volume extent along each axis.
grid = Grid(dims=(64, 64, 64), spacing=(1.0, 1.0, 1.0))
diag = np.ones(3) / np.sqrt(3)
frames = slice_frames(grid, diag, axis_id=0, stride_voxels=1)
print(f"\ncube-diagonal axis on a 64^3 volume: {len(frames)} frames, "
      f"each {frames[0].width}x{frames[0].height} px, slab {frames[0].slab} mm")

# A "V"-shaped positive polyline crosses a mid-volume plane twice.
poly = Polyline(
    label="positive",
    points=np.array([[20.0, 32, 10], [32, 32, 50], [44, 32, 10]]),
)
f = frames[len(frames) // 2]
points = intersect_polyline_plane(poly, f)
print(f"\nframe at d={f.d:.2f}: {len(points)} prompt point(s)")
for p in points:
    world = pixel_to_world(f, p.x, p.y)
    print(f"  pixel ({p.x:7.2f}, {p.y:7.2f})  ->  world {np.round(world, 2)}  [{p.label}]")
