import math

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from prefractal_lab.exceptions import DomainError, MeshError
from prefractal_lab.geometry.generators import koch, minkowski

from .domains import UNIT_SQUARE, BoundarySpec, BoundaryTag, build_domain, square_domain
from .io import format_mesh, parse_mesh
from .mesher import boundary_mass_support, edge_lengths, refine, triangulate


def perimeter_of(mesh):
    edges = mesh.boundary_edges
    return float(np.linalg.norm(mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]], axis=1).sum())


class BuildDomainTests(SimpleTestCase):
    def test_level_zero_is_the_square(self):
        domain = build_domain(UNIT_SQUARE, BoundarySpec.square(), koch(), 0)
        assert_array_equal(domain.vertices, np.array(UNIT_SQUARE))
        self.assertEqual(domain.area, 1.0)
        self.assertEqual(domain.edge_tags[0], BoundaryTag.ROBIN)

    def test_outward_koch_level_two_area(self):
        domain = square_domain(koch(), 2)
        self.assertEqual(sum(t == BoundaryTag.ROBIN for t in domain.edge_tags), 16)
        expected = 1.0 + math.sqrt(3.0) / 36.0 * (1.0 + 4.0 / 9.0)
        self.assertAlmostEqual(domain.area, expected, delta=1e-12)

    def test_inward_koch_removes_area(self):
        domain = square_domain(koch(), 1, outward=False)
        self.assertAlmostEqual(domain.area, 1.0 - math.sqrt(3.0) / 36.0, delta=1e-12)

    def test_minkowski_level_one_keeps_area(self):
        domain = square_domain(minkowski(), 1)
        self.assertEqual(sum(t == BoundaryTag.ROBIN for t in domain.edge_tags), 8)
        self.assertAlmostEqual(domain.area, 1.0, delta=1e-12)

    def test_robin_piece_is_the_prefractal(self):
        domain = square_domain(koch(), 3)
        self.assertAlmostEqual(domain.tagged_length(BoundaryTag.ROBIN), (4.0 / 3.0) ** 3, delta=1e-12)
        self.assertAlmostEqual(domain.perimeter, 3.0 + (4.0 / 3.0) ** 3, delta=1e-12)

    def test_self_intersection_rejected_with_witness(self):
        thin = ((0.0, 0.0), (1.0, 0.0), (1.0, 0.1), (0.0, 0.1))
        spec = BoundarySpec(tags=BoundarySpec.square().tags, outward=False)
        with self.assertRaises(DomainError) as caught:
            build_domain(thin, spec, koch(), 1)
        self.assertIsNotNone(caught.exception.witness)
        self.assertEqual(len(caught.exception.witness), 2)

    def test_clockwise_base_rejected(self):
        with self.assertRaises(DomainError):
            build_domain(UNIT_SQUARE[::-1], BoundarySpec.square(), koch(), 0)

    def test_spec_tag_count_must_match(self):
        with self.assertRaises(DomainError):
            build_domain(UNIT_SQUARE, BoundarySpec(tags=("robin", "dirichlet", "neumann")), koch(), 0)


class TriangulateTests(SimpleTestCase):
    def test_coarse_square_is_two_triangles(self):
        mesh = triangulate(square_domain(), 2.0)
        self.assertEqual(mesh.n_triangles, 2)
        self.assertEqual(mesh.n_nodes, 4)

    def test_fine_square_respects_edge_bound(self):
        mesh = triangulate(square_domain(), 1.0 / 8.0)
        self.assertLessEqual(edge_lengths(mesh.nodes, mesh.triangles).max(), 1.0 / 8.0 + 1e-12)
        self.assertGreaterEqual(mesh.n_nodes, 81)
        self.assertLessEqual(mesh.n_nodes, 400)
        self.assertTrue(mesh.min_angle >= 20.0 - 1e-9 or mesh.quality_warning)

    def test_triangles_are_positive(self):
        mesh = triangulate(square_domain(koch(), 2), 1.0 / 9.0)
        self.assertTrue(np.all(mesh.areas > 1e-14))

    def test_robin_segments_are_single_edges(self):
        domain = square_domain(koch(), 2)
        mesh = triangulate(domain, 1.0 / 9.0)
        robin = mesh.edges_with_tag(BoundaryTag.ROBIN)
        self.assertEqual(robin.shape[0], 16)
        meshed = np.unique(mesh.nodes[robin].reshape(-1, 2), axis=0)
        curve = np.unique(domain.pieces[0].points, axis=0)
        assert_array_equal(meshed, curve)

    def test_area_and_perimeter_preserved(self):
        domain = square_domain(koch(), 2)
        mesh = triangulate(domain, 1.0 / 9.0)
        for _ in range(2):
            self.assertAlmostEqual(mesh.area, domain.area, delta=1e-10 * domain.area)
            self.assertAlmostEqual(perimeter_of(mesh), domain.perimeter, delta=1e-10)
            mesh = refine(mesh)

    def test_boundary_edges_belong_to_one_triangle(self):
        mesh = triangulate(square_domain(minkowski(), 1), 1.0 / 8.0)
        directed = np.concatenate(
            [mesh.triangles[:, [0, 1]], mesh.triangles[:, [1, 2]], mesh.triangles[:, [2, 0]]]
        )
        keys, counts = np.unique(np.sort(directed, axis=1), axis=0, return_counts=True)
        owners = {tuple(k): c for k, c in zip(keys.tolist(), counts)}
        for p, q in mesh.boundary_edges.tolist():
            self.assertEqual(owners[(min(p, q), max(p, q))], 1)

    def test_graded_mesh_keeps_boundary_fine(self):
        mesh = triangulate(square_domain(koch(), 3), 1.0 / 27.0, interior_h=0.1)
        boundary = mesh.boundary_edges
        lengths = np.linalg.norm(mesh.nodes[boundary[:, 1]] - mesh.nodes[boundary[:, 0]], axis=1)
        self.assertLessEqual(lengths.max(), 1.0 / 27.0 + 1e-12)
        self.assertLessEqual(mesh.h_max, 0.1 + 1e-12)

    def test_non_positive_h_rejected(self):
        with self.assertRaises(MeshError):
            triangulate(square_domain(), 0.0)


class RefineTests(SimpleTestCase):
    def test_red_refinement_counts(self):
        mesh = triangulate(square_domain(), 2.0)
        fine = refine(mesh)
        self.assertEqual(fine.n_triangles, 8)
        self.assertEqual(fine.boundary_edges.shape[0], 2 * mesh.boundary_edges.shape[0])
        self.assertEqual(fine.boundary_tags.count(BoundaryTag.ROBIN), 2)

    def test_h_max_halves(self):
        mesh = triangulate(square_domain(koch(), 1), 1.0 / 6.0)
        twice = refine(refine(mesh))
        self.assertAlmostEqual(twice.h_max, mesh.h_max / 4.0, delta=1e-12)

    def test_nodes_nested(self):
        mesh = triangulate(square_domain(koch(), 1), 1.0 / 6.0)
        fine = refine(mesh)
        assert_array_equal(fine.nodes[: mesh.n_nodes], mesh.nodes)
        self.assertTrue(np.all(fine.areas > 0.0))


class BoundarySupportTests(SimpleTestCase):
    def test_robin_bottom_of_square(self):
        mesh = triangulate(square_domain(), 0.5)
        support = boundary_mass_support(mesh, BoundaryTag.ROBIN)
        self.assertEqual(len(support), 2)
        assert_allclose([length for _, length in support], [0.5, 0.5], rtol=1e-15)

    def test_koch_robin_length(self):
        for k in (1, 2):
            mesh = triangulate(square_domain(koch(), 1), 1.0 / 3.0 * 2.0**-k)
            support = boundary_mass_support(mesh, "robin")
            self.assertEqual(len(support), 4 * 2**k)
            self.assertAlmostEqual(sum(length for _, length in support), 4.0 / 3.0, delta=1e-12)

    def test_missing_tag_is_empty(self):
        spec = BoundarySpec(tags=("dirichlet",) * 4, prefractal_edge=None)
        mesh = triangulate(build_domain(UNIT_SQUARE, spec), 0.5)
        self.assertEqual(boundary_mass_support(mesh, BoundaryTag.NEUMANN), [])

    def test_unknown_tag(self):
        mesh = triangulate(square_domain(), 0.5)
        with self.assertRaises(MeshError):
            boundary_mass_support(mesh, "periodic")


class MeshFileTests(SimpleTestCase):
    def test_text_round_trip_is_exact(self):
        mesh = refine(triangulate(square_domain(koch(), 1), 1.0 / 3.0))
        text = format_mesh(mesh)
        again = parse_mesh(text)
        self.assertEqual(format_mesh(again), text)
        assert_array_equal(again.nodes, mesh.nodes)
        self.assertEqual(again.boundary_tags, mesh.boundary_tags)
