import struct

import numpy as np
import pytest

from polyseg.backends import Mask2D
from polyseg.errors import EmptyMask
from polyseg.geometry import SliceFrame, plane_basis, slice_frames
from polyseg.recompose import (
    Mesh,
    PointBatch,
    VoteGrid,
    export_mesh,
    marching_cubes,
    mask_to_points,
    mesh_area,
    mesh_volume,
    postprocess,
    threshold_votes,
)
from polyseg.volume import Grid, MaskVolume

from .oracles import brute_closing, mesh_edge_stats, signed_volume, surface_area


def frame_along(normal, d, axis_id=0, slab=0.5, width=64, height=64, pitch=1.0, origin_uv=(0.0, 0.0)):
    n = np.asarray(normal, float)
    n = n / np.linalg.norm(n)
    u, v = plane_basis(n)
    return SliceFrame(
        normal=n, u=u, v=v, d=float(d),
        origin2d=d * n + origin_uv[0] * u + origin_uv[1] * v,
        pitch=pitch, width=width, height=height, axis_id=axis_id, slab=slab,
    )



def batch(points, axis_id, slab, normal):
    """PointBatch with the in-plane basis derived from the normal."""
    n = np.asarray(normal, float)
    n = n / np.linalg.norm(n)
    u, v = plane_basis(n)
    return PointBatch(
        points=np.asarray(points, float), axis_id=axis_id, slab=slab,
        normal=n, u=u, v=v, pitch=1.0,
    )

def mask2d(shape, coords=()):
    bits = np.zeros(shape, bool)
    for y, x in coords:
        bits[y, x] = True
    return Mask2D(width=shape[1], height=shape[0], bits=bits)


class TestMaskToPoints:
    def test_empty_mask(self):
        f = frame_along([0, 0, 1], 5.0)
        batch = mask_to_points(mask2d((64, 64)), f)
        assert len(batch.points) == 0

    def test_single_pixel(self):
        f = frame_along([0, 0, 1], 5.0)
        batch = mask_to_points(mask2d((64, 64), [(4, 3)]), f)
        from polyseg.geometry import pixel_to_world

        np.testing.assert_allclose(batch.points[0], pixel_to_world(f, 3.0, 4.0), atol=1e-12)

    def test_full_mask_plane_residual(self):
        f = frame_along([1, 2, 2], 7.3)
        bits = np.ones((64, 64), bool)
        batch = mask_to_points(Mask2D(width=64, height=64, bits=bits), f)
        assert len(batch.points) == 4096
        resid = np.abs(batch.points @ f.normal - f.d)
        assert resid.max() <= 1e-6


class TestVoteGrid:
    def _grid(self, dims=(16, 16, 16)):
        return VoteGrid(Grid(dims=dims, spacing=(1, 1, 1)))

    def test_single_point_single_voxel(self):
        g = self._grid()
        g.accumulate(batch(np.array([[5.0, 6.0, 7.0]]), 0, 0.5, np.array([0.0, 0, 1])))
        assert g.counts[5, 6, 7] == 1
        assert g.counts.sum() == 1
        assert g.axis_bits[5, 6, 7] == 1

    def test_two_axes_support(self):
        g = self._grid()
        p = np.array([[5.0, 6.0, 7.0]])
        g.accumulate(batch(p, 0, 0.5, np.array([0.0, 0, 1])))
        g.accumulate(batch(p, 1, 0.5, np.array([0.0, 1, 0])))
        assert g.counts[5, 6, 7] == 2
        assert g.axis_bits[5, 6, 7] == 0b11
        assert g.axis_support()[5, 6, 7] == 2

    def test_stride3_splats_three_voxels(self):
        g = self._grid()
        g.accumulate(batch(np.array([[5.0, 6.0, 7.0]]), 2, 1.5, np.array([0.0, 0, 1])))
        # geometric splat: layers z = 6, 7, 8 along the normal
        assert g.counts.sum() == 3
        for z in (6, 7, 8):
            assert g.counts[5, 6, z] == 1

    def test_out_of_grid_counted_dropped(self):
        g = self._grid()
        g.accumulate(
            batch(np.array([[100.0, 0, 0], [5.0, 5, 5]]), 0, 0.5, np.array([0.0, 0, 1]))
        )
        assert g.points_dropped == 1
        assert g.points_total == 2
        assert g.counts.sum() == 1

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        batches = []
        for axis_id, normal in enumerate(np.eye(3)):
            for _ in range(5):
                pts = rng.uniform(0, 15, size=(rng.integers(1, 50), 3))
                batches.append(batch(pts, axis_id, 1.5, normal))
        ref = self._grid()
        for b in batches:
            ref.accumulate(b)
        for seed in range(3):
            order = np.random.default_rng(seed).permutation(len(batches))
            g = self._grid()
            for i in order:
                g.accumulate(batches[i])
            np.testing.assert_array_equal(g.counts, ref.counts)
            np.testing.assert_array_equal(g.axis_bits, ref.axis_bits)

    def test_merge_equals_sequential(self):
        rng = np.random.default_rng(1)
        batches = [
            batch(rng.uniform(0, 15, size=(20, 3)), i % 3, 0.5, np.eye(3)[i % 3])
            for i in range(6)
        ]
        seq = self._grid()
        for b in batches:
            seq.accumulate(b)
        g1, g2 = self._grid(), self._grid()
        for b in batches[:3]:
            g1.accumulate(b)
        for b in batches[3:]:
            g2.accumulate(b)
        g1.merge(g2)
        np.testing.assert_array_equal(g1.counts, seq.counts)
        np.testing.assert_array_equal(g1.axis_bits, seq.axis_bits)


class TestThresholdVotes:
    def _grid_with_supports(self):
        g = VoteGrid(Grid(dims=(8, 8, 8), spacing=(1, 1, 1)))
        p = np.array([[2.0, 2, 2]])
        for axis_id in (0, 2, 4):
            g.accumulate(batch(p, axis_id, 0.5, np.eye(3)[0]))
        q = np.array([[5.0, 5, 5]])
        for axis_id in (1, 3):
            g.accumulate(batch(q, axis_id, 0.5, np.eye(3)[0]))
        return g

    def test_majority_keeps_three_axis_support(self):
        g = self._grid_with_supports()
        m = threshold_votes(g, min_axes=3)  # ceil(6/2)
        assert m.data[2, 2, 2]
        assert not m.data[5, 5, 5]

    def test_min_axes_1_is_union(self):
        g = self._grid_with_supports()
        m = threshold_votes(g, min_axes=1)
        assert m.data[2, 2, 2] and m.data[5, 5, 5]
        assert m.count() == 2

    def test_monotone_in_min_axes(self):
        rng = np.random.default_rng(2)
        g = VoteGrid(Grid(dims=(12, 12, 12), spacing=(1, 1, 1)))
        for axis_id in range(6):
            pts = rng.uniform(0, 11, size=(200, 3))
            g.accumulate(batch(pts, axis_id, 0.5, np.eye(3)[axis_id % 3]))
        prev = None
        for ma in range(1, 7):
            cur = threshold_votes(g, min_axes=ma).data
            if prev is not None:
                assert not np.any(cur & ~prev)  # raising min_axes never adds voxels
            prev = cur

    def test_invalid_min_axes(self):
        g = VoteGrid(Grid(dims=(4, 4, 4), spacing=(1, 1, 1)))
        with pytest.raises(ValueError):
            threshold_votes(g, min_axes=0)


class TestPostprocess:
    def _mask(self, data):
        return MaskVolume(dims=data.shape, spacing=(1, 1, 1), data=data)

    def test_largest_component(self):
        data = np.zeros((16, 16, 16), bool)
        data[2:7, 2:7, 2:7] = True  # 125 voxels
        data[12:14, 12, 12] = True  # 2 voxels
        out = postprocess(self._mask(data), largest_component=True)
        assert out.count() == 125
        assert not out.data[12, 12, 12]

    def test_closing_fills_hole(self):
        data = np.zeros((12, 12, 12), bool)
        data[3:9, 3:9, 3:9] = True
        data[5, 5, 5] = False
        out = postprocess(self._mask(data), closing_radius=1)
        assert out.data[5, 5, 5]

    def test_closing_matches_brute_oracle(self):
        rng = np.random.default_rng(4)
        data = rng.random((9, 9, 9)) > 0.72
        for r in (1, 2):
            out = postprocess(self._mask(data), closing_radius=r)
            np.testing.assert_array_equal(out.data, brute_closing(data, r))

    def test_identity_when_flags_off(self):
        rng = np.random.default_rng(5)
        data = rng.random((8, 8, 8)) > 0.5
        out = postprocess(self._mask(data))
        np.testing.assert_array_equal(out.data, data)

    def test_invalid_radius(self):
        with pytest.raises(ValueError):
            postprocess(self._mask(np.zeros((4, 4, 4), bool)), closing_radius=3)


def sphere_mask(n=48, r=20.0, spacing=1.0):
    c = (n - 1) / 2.0
    idx = np.indices((n, n, n))
    d2 = sum((idx[i] - c) ** 2 for i in range(3))
    return MaskVolume(
        dims=(n, n, n), spacing=(spacing,) * 3, data=d2 <= (r / spacing) ** 2
    )


class TestMarchingCubes:
    def test_empty_mask_raises(self):
        m = MaskVolume(dims=(4, 4, 4), spacing=(1, 1, 1), data=np.zeros((4, 4, 4), bool))
        with pytest.raises(EmptyMask):
            marching_cubes(m)

    def test_single_voxel_closed_surface(self):
        data = np.zeros((5, 5, 5), bool)
        data[2, 2, 2] = True
        mesh = marching_cubes(MaskVolume(dims=(5, 5, 5), spacing=(1, 1, 1), data=data))
        chi, watertight = mesh_edge_stats(mesh.vertices, mesh.triangles)
        assert chi == 2
        assert watertight
        assert signed_volume(mesh.vertices, mesh.triangles) > 0

    def test_boundary_touching_mask_still_closed(self):
        data = np.zeros((6, 6, 6), bool)
        data[0:3, 0:3, 0:3] = True  # touches the grid boundary
        mesh = marching_cubes(MaskVolume(dims=(6, 6, 6), spacing=(1, 1, 1), data=data))
        chi, watertight = mesh_edge_stats(mesh.vertices, mesh.triangles)
        assert watertight and chi == 2

    def test_sphere_area_and_volume(self):
        r = 20.0
        mesh = marching_cubes(sphere_mask(n=48, r=r))
        area = surface_area(mesh.vertices, mesh.triangles)
        vol = signed_volume(mesh.vertices, mesh.triangles)
        assert abs(area / (4 * np.pi * r**2) - 1) < 0.05
        assert abs(vol / (4 / 3 * np.pi * r**3) - 1) < 0.03

    def test_unsmoothed_surface_available(self):
        data = np.zeros((5, 5, 5), bool)
        data[2, 2, 2] = True
        mesh = marching_cubes(
            MaskVolume(dims=(5, 5, 5), spacing=(1, 1, 1), data=data), smooth_iterations=0
        )
        # midpoint-vertex octahedron: 6 vertices, 8 faces, volume 1/6
        assert len(mesh.vertices) == 6
        assert len(mesh.triangles) == 8
        assert signed_volume(mesh.vertices, mesh.triangles) == pytest.approx(1 / 6, abs=1e-9)

    def test_world_coordinates_respect_spacing_and_origin(self):
        data = np.zeros((5, 5, 5), bool)
        data[2, 2, 2] = True
        m = MaskVolume(dims=(5, 5, 5), spacing=(2, 2, 2), origin=(10, 20, 30), data=data)
        mesh = marching_cubes(m, smooth_iterations=0)
        center = mesh.vertices.mean(axis=0)
        np.testing.assert_allclose(center, [14.0, 24.0, 34.0], atol=1e-9)

    def test_no_degenerate_triangles(self):
        mesh = marching_cubes(sphere_mask(n=24, r=8))
        v = mesh.vertices
        t = mesh.triangles
        areas = 0.5 * np.linalg.norm(
            np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]]), axis=1
        )
        assert areas.min() > 0

    def test_volume_close_to_voxel_count(self):
        m = sphere_mask(n=32, r=11)
        mesh = marching_cubes(m)
        vol = mesh_volume(mesh)
        assert vol >= 0
        assert abs(vol - m.count()) / m.count() < 0.15

    def test_package_measures_agree_with_oracle(self):
        mesh = marching_cubes(sphere_mask(n=24, r=8))
        assert mesh_area(mesh) == pytest.approx(surface_area(mesh.vertices, mesh.triangles), rel=1e-9)
        assert mesh_volume(mesh) == pytest.approx(signed_volume(mesh.vertices, mesh.triangles), rel=1e-9)


class TestExportMesh:
    def _tri_mesh(self):
        verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
        tris = np.array([[0, 1, 2]])
        normals = np.array([[0.0, 0, 1]])
        return Mesh(vertices=verts, triangles=tris, normals=normals)

    def test_stl_single_triangle_exact_size(self, tmp_path):
        path = tmp_path / "m.stl"
        export_mesh(self._tri_mesh(), path)
        assert path.stat().st_size == 134  # 80 + 4 + 50

    def test_stl_header_and_record(self, tmp_path):
        path = tmp_path / "m.stl"
        export_mesh(self._tri_mesh(), path)
        raw = path.read_bytes()
        (count,) = struct.unpack_from("<I", raw, 80)
        assert count == 1
        rec = struct.unpack_from("<12fH", raw, 84)
        assert rec[0:3] == (0.0, 0.0, 1.0)
        assert rec[3:6] == (0.0, 0.0, 0.0)
        assert rec[-1] == 0

    def test_empty_mesh_stl(self, tmp_path):
        mesh = Mesh(
            vertices=np.zeros((0, 3)), triangles=np.zeros((0, 3), int), normals=np.zeros((0, 3))
        )
        path = tmp_path / "empty.stl"
        export_mesh(mesh, path)
        assert path.stat().st_size == 84

    def test_obj_round_trip_with_reference_parser(self, tmp_path):
        mesh = marching_cubes(sphere_mask(n=20, r=6))
        path = tmp_path / "m.obj"
        export_mesh(mesh, path)
        verts, faces = [], []
        for line in path.read_text().splitlines():
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                faces.append([int(x) - 1 for x in parts[1:4]])
        assert len(verts) == len(mesh.vertices)
        assert len(faces) == len(mesh.triangles)
        np.testing.assert_allclose(np.asarray(verts), mesh.vertices, rtol=1e-6, atol=1e-6)
        np.testing.assert_array_equal(np.asarray(faces), mesh.triangles)

    def test_stl_round_trip_vertex_positions(self, tmp_path):
        mesh = marching_cubes(sphere_mask(n=16, r=5))
        path = tmp_path / "s.stl"
        export_mesh(mesh, path)
        raw = path.read_bytes()
        (count,) = struct.unpack_from("<I", raw, 80)
        assert count == len(mesh.triangles)
        tri0 = struct.unpack_from("<12fH", raw, 84)
        np.testing.assert_allclose(tri0[3:6], mesh.vertices[mesh.triangles[0][0]], rtol=1e-6)
