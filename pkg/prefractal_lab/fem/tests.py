import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from prefractal_lab.exceptions import SingularSystemError, SolverError
from prefractal_lab.geometry.generators import koch
from prefractal_lab.meshing.domains import UNIT_SQUARE, BoundarySpec, build_domain, square_domain
from prefractal_lab.meshing.mesher import refine, triangulate

from .assembly import assemble, edge_mass_matrices, element_matrices
from .io import format_coo, write_coo
from .norms import embedding_ratios, l2_error, l6_norm, norms
from .solvers import poincare_constant, solve_eigen, solve_poisson

TWO_PI_SQ = 2.0 * math.pi**2


def square(tags, h):
    spec = BoundarySpec(tags=tags, prefractal_edge=None)
    return triangulate(build_domain(UNIT_SQUARE, spec), h)


def dirichlet_square(h):
    return square(("dirichlet",) * 4, h)


def bump(x, y):
    return np.sin(math.pi * x) * np.sin(math.pi * y)


def bump_source(x, y):
    return TWO_PI_SQ * bump(x, y)


class ElementTests(SimpleTestCase):
    reference = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

    def test_reference_stiffness(self):
        stiffness, _ = element_matrices(self.reference, np.array([[0, 1, 2]]))
        expected = 0.5 * np.array([[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
        assert_allclose(stiffness[0], expected, atol=1e-15)

    def test_mass_row_sums(self):
        nodes = np.array([[0.2, 0.1], [1.3, 0.4], [0.5, 0.9]])
        _, mass = element_matrices(nodes, np.array([[0, 1, 2]]))
        area = 0.5 * abs((1.3 - 0.2) * (0.9 - 0.1) - (0.4 - 0.1) * (0.5 - 0.2))
        assert_allclose(mass[0].sum(axis=1), area / 3.0, rtol=1e-14)

    def test_edge_mass(self):
        nodes = np.array([[0.0, 0.0], [0.3, 0.4]])
        (block,) = edge_mass_matrices(nodes, np.array([[0, 1]]))
        assert_allclose(block, 0.5 / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]]), rtol=1e-15)


class AssembleTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.mesh = triangulate(square_domain(koch(), 2), 1.0 / 9.0)
        cls.system = assemble(cls.mesh, a=2.0, sigma_weight=0.5625)

    def test_symmetry(self):
        for name in ("M", "A", "R", "S"):
            matrix = getattr(self.system, name)
            gap = abs(matrix - matrix.T).max()
            self.assertLessEqual(gap, 1e-12 * abs(matrix).max(), name)

    def test_robin_matrix_is_scaled_prefractal_length(self):
        ones = np.ones(self.mesh.n_nodes)
        length = (4.0 / 3.0) ** 2
        self.assertAlmostEqual(ones @ (self.system.R @ ones), 0.5625 * length, delta=1e-12)
        self.assertAlmostEqual(ones @ (self.system.M @ ones), self.mesh.area, delta=1e-12)

    def test_negative_robin_coefficient(self):
        with self.assertRaises(SolverError):
            assemble(self.mesh, a=-1.0)

    def test_singular_configuration_is_reported(self):
        mesh = square(("neumann",) * 4, 0.25)
        with self.assertLogs("prefractal_lab.fem.assembly", level="WARNING"):
            system = assemble(mesh, a=0.0)
        with self.assertRaises(SingularSystemError):
            solve_poisson(system, lambda x, y: 1.0 + 0.0 * x)


class PoissonTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.coarse = dirichlet_square(1.0 / 32.0)
        cls.fine = refine(cls.coarse)

    def test_manufactured_solution(self):
        mesh = dirichlet_square(1.0 / 64.0)
        u = solve_poisson(assemble(mesh), bump_source)
        error = np.abs(u.values - bump(mesh.nodes[:, 0], mesh.nodes[:, 1])).max()
        self.assertLessEqual(error, 1e-2)

    def test_second_order_in_l2(self):
        errors = []
        for mesh in (self.coarse, self.fine):
            u = solve_poisson(assemble(mesh), bump_source)
            errors.append(l2_error(mesh, u.values, bump))
        ratio = errors[0] / errors[1]
        self.assertGreaterEqual(ratio, 3.5)
        self.assertLessEqual(ratio, 4.5)

    def test_zero_source(self):
        u = solve_poisson(assemble(self.coarse), None)
        self.assertEqual(np.abs(u.values).max(), 0.0)

    def test_linearity(self):
        system = assemble(self.coarse)
        u = solve_poisson(system, bump_source).values
        u2 = solve_poisson(system, lambda x, y: 2.0 * bump_source(x, y)).values
        assert_allclose(u2, 2.0 * u, rtol=1e-12, atol=1e-15)

    def test_galerkin_orthogonality(self):
        mesh = square(("robin", "dirichlet", "neumann", "dirichlet"), 1.0 / 16.0)
        system = assemble(mesh, a=3.0)
        f = np.cos(mesh.nodes[:, 0]) + mesh.nodes[:, 1] ** 2
        u = solve_poisson(system, f).values
        residual = (system.S @ u - system.M @ f)[system.free]
        self.assertLessEqual(np.linalg.norm(residual), 1e-10 * np.linalg.norm((system.M @ f)[system.free]))


class EigenTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.mesh = dirichlet_square(1.0 / 64.0)
        cls.basis = solve_eigen(assemble(cls.mesh), 3)

    def test_dirichlet_square_spectrum(self):
        lam = self.basis.eigenvalues
        self.assertLessEqual(abs(lam[0] - TWO_PI_SQ) / TWO_PI_SQ, 0.01)
        for value in lam[1:]:
            self.assertLessEqual(abs(value - 5.0 * math.pi**2) / (5.0 * math.pi**2), 0.01)

    def test_basis_orthonormality(self):
        system = self.basis.system
        W = self.basis.vectors
        assert_allclose(W.T @ (system.M @ W), np.eye(3), atol=1e-8)
        gram = W.T @ (system.S @ W)
        assert_allclose(gram, np.diag(self.basis.eigenvalues), rtol=1e-6, atol=1e-6 * self.basis.eigenvalues[-1])

    def test_vectors_vanish_on_dirichlet(self):
        system = self.basis.system
        self.assertEqual(np.abs(self.basis.vectors[system.dirichlet]).max(), 0.0)

    def test_robin_penalty_limit(self):
        mesh = square(("robin",) * 4, 1.0 / 32.0)
        robin = solve_eigen(assemble(mesh, a=1e6), 1).eigenvalues[0]
        dirichlet = solve_eigen(assemble(dirichlet_square(1.0 / 32.0)), 1).eigenvalues[0]
        self.assertLessEqual(abs(robin - dirichlet) / dirichlet, 0.02)

    def test_monotone_under_refinement(self):
        coarse = dirichlet_square(0.25)
        lam_coarse = solve_eigen(assemble(coarse), 5).eigenvalues
        lam_fine = solve_eigen(assemble(refine(coarse)), 5).eigenvalues
        self.assertTrue(np.all(lam_fine <= lam_coarse * (1.0 + 1e-12)))

    def test_count_range(self):
        system = assemble(dirichlet_square(0.5))
        with self.assertRaises(SolverError):
            solve_eigen(system, 0)
        with self.assertRaises(SolverError):
            solve_eigen(system, system.n_free + 1)


class NormTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.mesh = square(("robin", "dirichlet", "neumann", "dirichlet"), 1.0 / 16.0)
        cls.system = assemble(cls.mesh, a=1.5)

    def test_zero_field(self):
        result = norms(self.system, np.zeros(self.mesh.n_nodes))
        self.assertEqual((result.l2, result.h1, result.v_norm, result.laplacian_l2), (0.0, 0.0, 0.0, 0.0))

    def test_eigenfunction_identities(self):
        basis = solve_eigen(self.system, 1)
        lam = basis.eigenvalues[0]
        result = norms(self.system, basis.mode(0))
        self.assertAlmostEqual(result.v_norm**2, lam, delta=1e-8 * lam)
        self.assertAlmostEqual(result.laplacian_l2, lam, delta=1e-8 * lam)

    def test_v_norm_splits_into_gradient_and_boundary(self):
        rng = np.random.default_rng(3)
        u = self.system.field(rng.uniform(-1.0, 1.0, self.mesh.n_nodes))
        result = norms(self.system, u)
        split = result.h1**2 - result.l2**2 + self.system.a * result.robin
        self.assertAlmostEqual(result.v_norm**2, split, delta=1e-10 * result.v_norm**2)

    def test_coercivity(self):
        lam = solve_eigen(self.system, 1).eigenvalues[0]
        rng = np.random.default_rng(11)
        for _ in range(5):
            u = self.system.field(rng.normal(size=self.mesh.n_nodes)).values
            self.assertGreaterEqual(u @ (self.system.S @ u), lam * (u @ (self.system.M @ u)) * (1 - 1e-10))

    def test_l6_of_constant(self):
        self.assertAlmostEqual(l6_norm(self.mesh, np.full(self.mesh.n_nodes, 2.0)), 2.0, delta=1e-12)


class PoincareTests(SimpleTestCase):
    def test_full_dirichlet(self):
        value = poincare_constant(assemble(dirichlet_square(1.0 / 32.0)))
        self.assertLessEqual(abs(value - 1.0 / math.sqrt(TWO_PI_SQ)) * math.sqrt(TWO_PI_SQ), 0.01)

    def test_left_edge_slab(self):
        mesh = refine(square(("neumann", "neumann", "neumann", "dirichlet"), 1.0 / 32.0))
        value = poincare_constant(assemble(mesh, a=5.0))
        self.assertLessEqual(abs(value - 2.0 / math.pi) / (2.0 / math.pi), 0.05)

    def test_non_decreasing_under_refinement(self):
        mesh = dirichlet_square(0.25)
        coarse = poincare_constant(assemble(mesh))
        fine = poincare_constant(assemble(refine(mesh)))
        self.assertGreaterEqual(fine, coarse * (1.0 - 1e-12))

    def test_needs_dirichlet(self):
        with self.assertRaises(SolverError):
            poincare_constant(assemble(square(("robin",) * 4, 0.5), a=1.0))


class EmbeddingRatioTests(SimpleTestCase):
    sources = [
        lambda x, y: 1.0 + 0.0 * x,
        lambda x, y: np.sin(3.0 * x) * np.cos(2.0 * y),
        lambda x, y: x * y - 0.25,
    ]

    def test_eigenfunction_source_is_reproducible(self):
        system = assemble(dirichlet_square(1.0 / 16.0))
        w = solve_eigen(system, 1).mode(0)
        first = embedding_ratios(system, 1, seed=5, sources=[w])
        again = embedding_ratios(system, 1, seed=5, sources=[w])
        self.assertEqual(first, again)
        self.assertTrue(math.isfinite(first.l6_ratio_max) and first.l6_ratio_max > 0.0)

    def test_random_sources_are_seeded(self):
        system = assemble(dirichlet_square(1.0 / 8.0))
        self.assertEqual(embedding_ratios(system, 4, seed=9), embedding_ratios(system, 4, seed=9))

    def test_mesh_stability(self):
        mesh = square(("robin", "dirichlet", "neumann", "dirichlet"), 1.0 / 16.0)
        coarse = embedding_ratios(assemble(mesh, a=1.0), 3, seed=0, sources=self.sources)
        fine = embedding_ratios(assemble(refine(mesh), a=1.0), 3, seed=0, sources=self.sources)
        for attr in ("l6_ratio_max", "linf_ratio_max"):
            a, b = getattr(coarse, attr), getattr(fine, attr)
            self.assertLessEqual(abs(a - b) / b, 0.2, attr)

    def test_uniform_across_koch_levels(self):
        values = []
        for m in range(5):
            mesh = triangulate(square_domain(koch(), m), min(3.0**-m, 0.1), interior_h=0.1)
            report = embedding_ratios(assemble(mesh, a=1.0, sigma_weight=0.75**m), 3, seed=0, sources=self.sources)
            values.append(report)
        for attr in ("l6_ratio_max", "linf_ratio_max"):
            base = getattr(values[0], attr)
            for report in values[1:]:
                self.assertLessEqual(getattr(report, attr), 2.0 * base)


class MatrixExportTests(SimpleTestCase):
    def test_row_major_triplets(self):
        system = assemble(dirichlet_square(0.5))
        text = format_coo(system.M)
        rows = [tuple(int(v) for v in line.split()[:2]) for line in text.splitlines()]
        self.assertEqual(rows, sorted(rows))
        self.assertEqual(len(rows), system.M.nnz)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_coo(system.A, Path(tmp) / "A.coo")
            self.assertEqual(path.read_text(), format_coo(system.A))
