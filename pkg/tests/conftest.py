import numpy as np
import pytest

from freeflow.freenorm import Molecule, canonicalize
from freeflow.primitives import generate_primitive


@pytest.fixture(scope="session")
def flat4():
    return generate_primitive("flat_rect", nx=4)


@pytest.fixture(scope="session")
def flat6():
    return generate_primitive("flat_rect", nx=6)


@pytest.fixture(scope="session")
def ico1():
    return generate_primitive("icosphere", level=1)


@pytest.fixture(scope="session")
def ico2():
    return generate_primitive("icosphere", level=2)


@pytest.fixture(scope="session")
def annulus():
    return generate_primitive("annulus", n_angular=16, n_radial=4)


@pytest.fixture(scope="session")
def torus():
    return generate_primitive("torus", nx=12)


@pytest.fixture(scope="session")
def torus8():
    return generate_primitive("torus", nx=8)


@pytest.fixture(scope="session")
def poincare():
    return generate_primitive("poincare_disk_patch")


@pytest.fixture(scope="session")
def circle32():
    return generate_primitive("circle_graph", n=32)


@pytest.fixture(scope="session")
def interval10():
    return generate_primitive("interval_graph", n=10, total_length=5.0)


def random_molecule(mesh, rng, max_atoms=6, scale=3.0):
    """Canonical random molecule with nonzero coefficients in [-scale, scale]."""
    k = int(rng.integers(1, max_atoms + 1))
    verts = rng.choice(np.arange(1, mesh.vertex_count), size=k, replace=False)
    coeffs = rng.uniform(0.1, scale, size=k) * rng.choice([-1.0, 1.0], size=k)
    return canonicalize(Molecule(tuple(zip(verts, coeffs))), mesh.base_vertex)
