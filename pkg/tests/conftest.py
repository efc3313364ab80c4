import numpy as np
import pytest

from polyseg.phantoms import ellipsoid_phantom, sphere_phantom


@pytest.fixture(scope="session")
def sphere128():
    """Acceptance-scale sphere: r=40 voxels in 128^3, binary contrast."""
    return sphere_phantom(shape=(128, 128, 128), radius=40.0)


@pytest.fixture(scope="session")
def sphere64():
    return sphere_phantom(shape=(64, 64, 64), radius=20.0)


@pytest.fixture(scope="session")
def ellipsoid96():
    return ellipsoid_phantom(shape=(96, 96, 96), semiaxes=(34.0, 26.0, 20.0))


def analytic_sphere_mask(shape, radius, center=None):
    """Independent rasterization oracle: voxel centers within the radius."""
    if center is None:
        center = [(n - 1) / 2.0 for n in shape]
    out = np.zeros(shape, dtype=bool)
    for i in range(shape[0]):
        for j in range(shape[1]):
            di2 = (i - center[0]) ** 2 + (j - center[1]) ** 2
            ks = np.arange(shape[2])
            out[i, j, :] = di2 + (ks - center[2]) ** 2 <= radius * radius
    return out
