import math

import numpy as np
import pytest

from freeflow.currents import (
    _rank_gaussian,
    betti1,
    classify,
    d0,
    d1,
    edgeform_to_oneform,
    oneform_to_edgeform,
    solve_potential,
    spanning_tree,
)
from freeflow.calculus import gradient
from freeflow.errors import RankUnstable
from freeflow.mesh import build_mesh
from freeflow.primitives import generate_primitive

UNIT = {(0, 1): 1.0, (1, 2): 1.0, (0, 2): 1.0}


def annulus_generator(mesh):
    """Closed form with unit circulation around the core of an annulus.

    Built from the multivalued angle of the construction coordinates:
    branch-corrected angle increments divided by 2*pi.
    """
    theta = mesh.aux["theta"]
    omega = np.zeros(len(mesh.edges))
    for e, (u, v) in enumerate(mesh.edges):
        delta = theta[v] - theta[u]
        delta = (delta + math.pi) % (2.0 * math.pi) - math.pi
        omega[e] = delta / (2.0 * math.pi)
    return omega


def torus_generator(mesh, axis=0):
    """Closed form winding once around one handle of the flat torus."""
    pos = mesh.aux["positions"][:, axis]
    period = pos.max() + mesh.aux["spacing"][axis]
    omega = np.zeros(len(mesh.edges))
    for e, (u, v) in enumerate(mesh.edges):
        delta = pos[v] - pos[u]
        delta = (delta + period / 2.0) % period - period / 2.0
        omega[e] = delta / period
    return omega


def d1_matrix(mesh):
    mat = np.zeros((len(mesh.triangles), len(mesh.edges)))
    for f in range(len(mesh.triangles)):
        for u, v in mesh.oriented_face_edges(f):
            mat[f, mesh.edge_id(u, v)] += 1.0 if u < v else -1.0
    return mat


def reclosed_noise(mesh, rng):
    """Random edge noise projected onto ker(d1); exact on a disk."""
    mat = d1_matrix(mesh)
    eta = rng.normal(size=len(mesh.edges))
    y, *_ = np.linalg.lstsq(mat.T @ mat, mat.T @ (mat @ eta), rcond=None)
    return eta - y


class TestDifferentials:
    def test_d1_of_d0_vanishes(self, ico1):
        rng = np.random.default_rng(21)
        for _ in range(50):
            f = rng.normal(size=ico1.vertex_count)
            assert np.abs(d1(ico1, d0(ico1, f))).max() <= 1e-12

    def test_single_face_uniform_circulation(self):
        m = build_mesh([(0, 1, 2)], UNIT)
        omega = np.array([1.0, -1.0, 1.0])  # edges (0,1), (0,2), (1,2)
        # face traversal 0->1->2->0 hits (0,2) against canonical
        assert d1(m, omega)[0] == pytest.approx(3.0)


class TestSolvePotential:
    def test_recovers_potential_of_exact_form(self, flat4):
        rng = np.random.default_rng(22)
        f = rng.normal(size=flat4.vertex_count)
        f -= f[flat4.base_vertex]
        g, residual = solve_potential(flat4, d0(flat4, f))
        assert residual <= 1e-12
        assert np.abs(g - f).max() <= 1e-12

    def test_circle_uniform_circulation_residual(self):
        m = generate_primitive("circle_graph", n=4, total_length=2 * math.pi)
        omega = np.zeros(4)
        cycle = [(0, 1), (1, 2), (2, 3), (3, 0)]
        for u, v in cycle:
            e = m.edge_id(u, v)
            omega[e] = math.pi / 2 if u < v else -math.pi / 2
        _, residual = solve_potential(m, omega)
        assert residual == pytest.approx(2.0 * math.pi, abs=1e-12)

    def test_annulus_generator_has_unit_loop_residual(self, annulus):
        omega = annulus_generator(annulus)
        _, residual = solve_potential(annulus, omega)
        assert residual >= 0.1
        assert residual == pytest.approx(1.0, abs=1e-10)

    def test_residual_tree_independent_for_annulus_generator(self, annulus):
        omega = annulus_generator(annulus)
        base, _ = solve_potential(annulus, omega)
        _, res0 = solve_potential(annulus, omega)
        rng = np.random.default_rng(23)
        for _ in range(5):
            tree = spanning_tree(annulus, rng=rng)
            _, res = solve_potential(annulus, omega, tree=tree)
            assert abs(res - res0) <= 1e-10

    def test_residual_tree_independent_for_exact_forms(self, ico1):
        rng = np.random.default_rng(24)
        f = rng.normal(size=ico1.vertex_count)
        omega = d0(ico1, f)
        for _ in range(5):
            tree = spanning_tree(ico1, rng=rng)
            _, res = solve_potential(ico1, omega, tree=tree)
            assert res <= 1e-10


class TestClassify:
    def test_exact_form_with_witness(self, flat4):
        rng = np.random.default_rng(25)
        f = rng.normal(size=flat4.vertex_count)
        f -= f[flat4.base_vertex]
        result = classify(flat4, d0(flat4, f))
        assert result.kind == "exact"
        assert result.closedness_residual <= 1e-12
        assert result.exactness_residual <= 1e-12
        assert np.abs(result.witness_potential - f).max() <= 1e-9

    def test_annulus_generator_closed_not_exact(self, annulus):
        omega = annulus_generator(annulus)
        result = classify(annulus, omega)
        assert result.kind == "closed_not_exact"
        assert result.closedness_residual <= 1e-10
        assert result.exactness_residual >= 0.1
        assert result.witness_potential is None

    def test_torus_generators_closed_not_exact(self, torus):
        for axis in (0, 1):
            omega = torus_generator(torus, axis=axis)
            result = classify(torus, omega)
            assert result.kind == "closed_not_exact"
            assert result.closedness_residual <= 1e-10
            assert result.exactness_residual >= 0.1

    def test_random_noise_not_closed(self, ico1):
        rng = np.random.default_rng(26)
        omega = rng.normal(size=len(ico1.edges))
        result = classify(ico1, omega)
        assert result.kind == "not_closed"
        assert result.closedness_residual > 1e-8

    def test_reclosed_noise_on_disk_is_exact(self, flat4):
        rng = np.random.default_rng(27)
        for _ in range(50):
            omega = reclosed_noise(flat4, rng)
            result = classify(flat4, omega)
            assert result.kind == "exact"
            assert result.exactness_residual <= 1e-8

    def test_graphs_have_no_closedness_obstruction(self, circle32):
        omega = np.ones(len(circle32.edges))
        result = classify(circle32, omega)
        assert result.kind == "closed_not_exact"
        assert result.closedness_residual == 0.0


class TestBetti:
    def test_disk(self, flat4):
        assert betti1(flat4) == 0

    def test_annulus(self, annulus):
        assert betti1(annulus) == 1

    def test_torus(self, torus):
        assert betti1(torus) == 2

    def test_sphere(self, ico1):
        assert betti1(ico1) == 0

    def test_circle_graph(self, circle32):
        assert betti1(circle32) == 1

    def test_interval_graph(self, interval10):
        assert betti1(interval10) == 0

    def test_euler_characteristic_consistency(self, flat4, annulus, torus, ico1):
        # independent oracle: b1 = b0 + b2 - chi with b0 = 1
        for mesh, b2 in ((flat4, 0), (annulus, 0), (torus, 1), (ico1, 1)):
            chi = mesh.vertex_count - len(mesh.edges) + len(mesh.triangles)
            assert betti1(mesh) == 1 + b2 - chi

    def test_rank_unstable_band(self):
        matrix = np.array([[1e-10, 0.0], [0.0, 0.0]])
        with pytest.raises(RankUnstable):
            _rank_gaussian(matrix)

    def test_rank_thresholds(self):
        assert _rank_gaussian(np.array([[1e-12, 0.0], [0.0, 0.0]])) == 0
        assert _rank_gaussian(np.array([[1.0, 2.0], [2.0, 4.0]])) == 1


class TestConversions:
    def test_gradient_circulations_match_d0(self, flat4):
        rng = np.random.default_rng(28)
        f = rng.normal(size=flat4.vertex_count)
        omega = oneform_to_edgeform(flat4, gradient(flat4, f))
        assert np.abs(omega - d0(flat4, f)).max() <= 1e-12

    def test_roundtrip_on_exact_forms(self, flat4):
        rng = np.random.default_rng(29)
        f = rng.normal(size=flat4.vertex_count)
        oneform, residual = edgeform_to_oneform(flat4, d0(flat4, f))
        assert residual <= 1e-12
        assert np.abs(oneform - gradient(flat4, f)).max() <= 1e-12

    def test_conversion_flags_lossiness(self, flat4):
        rng = np.random.default_rng(30)
        omega = rng.normal(size=len(flat4.edges))
        _, residual = edgeform_to_oneform(flat4, omega)
        assert residual > 1e-6  # generic forms cannot be represented
