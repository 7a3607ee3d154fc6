import math

import numpy as np
from django.test import SimpleTestCase, override_settings
from numpy.testing import assert_allclose

from prefractal_lab.exceptions import GeometryError, LevelOverflowError

from .curves import (
    generate_prefractal,
    measure_density_ratio,
    measure_report,
    random_samples,
    similarity_dimension,
)
from .environment import EnvironmentRule, build_environment, mixture_dimension
from .generators import (
    environment_from_spec,
    ifs_from_spec,
    koch,
    koch_mixture,
    minkowski,
    osc_polygons,
    rhombus,
    tent,
)
from .ifs import (
    Similitude,
    apply_similitude,
    cell_measure,
    contraction_sum,
    contraction_sum_D,
    sigma,
)
from .io import format_curve, parse_curve
from .osc import check_open_set_condition


class SimilitudeTests(SimpleTestCase):
    def test_ratio_must_be_contractive(self):
        with self.assertRaises(GeometryError):
            Similitude(ratio=1.0)
        Similitude(ratio=0.999999)

    def test_koch_first_map(self):
        psi = koch().families[1][0]
        assert_allclose(apply_similitude(psi, (1.0, 0.0)), (1.0 / 3.0, 0.0), atol=1e-15)

    def test_minkowski_first_map_fixes_origin(self):
        psi = minkowski().families[1][0]
        assert_allclose(apply_similitude(psi, (0.0, 0.0)), (0.0, 0.0), atol=0)

    def test_distance_scales_by_ratio(self):
        s = Similitude(ratio=0.3, angle=1.1, reflect=True, translation=(2.0, -1.0))
        p, q = np.array([0.2, 0.7]), np.array([-1.5, 3.0])
        ratio = np.linalg.norm(s(p) - s(q)) / np.linalg.norm(p - q)
        self.assertAlmostEqual(ratio, 0.3, delta=1e-12 * 0.3)


class PrefractalTests(SimpleTestCase):
    def test_level_zero_is_base_segment(self):
        curve = generate_prefractal(koch(), 0)
        self.assertEqual(curve.n_segments, 1)
        assert_allclose(curve.points, [[0.0, 0.0], [1.0, 0.0]])
        self.assertEqual(curve.total_length, 1.0)

    def test_koch_level_one(self):
        curve = generate_prefractal(koch(), 1)
        self.assertEqual(curve.n_segments, 4)
        self.assertAlmostEqual(curve.total_length, 4.0 / 3.0, places=12)
        assert_allclose(curve.weights, 0.25, rtol=1e-14)

    def test_minkowski_level_one(self):
        curve = generate_prefractal(minkowski(), 1)
        self.assertEqual(curve.n_segments, 8)
        self.assertAlmostEqual(curve.total_length, 2.0, places=12)

    def test_endpoints_fixed_and_segments_chained(self):
        for ifs in (koch(), minkowski(), koch(reflect=True)):
            for m in range(5):
                curve = generate_prefractal(ifs, m)
                self.assertEqual(tuple(curve.points[0]), (0.0, 0.0))
                self.assertEqual(tuple(curve.points[-1]), (1.0, 0.0))

    def test_length_identity_and_weight_normalization(self):
        for ifs, top in ((koch(), 8), (minkowski(), 6)):
            for m in range(top + 1):
                curve = generate_prefractal(ifs, m)
                self.assertAlmostEqual(curve.total_length * curve.sigma, 1.0, delta=1e-10)
                self.assertAlmostEqual(float(curve.weights.sum()), 1.0, delta=1e-12)

    def test_weights_match_cell_measure(self):
        ifs = koch_mixture(environment=(1, 2, 2))
        curve = generate_prefractal(ifs, 3)
        for word, weight in zip(curve.words[:10], curve.weights[:10]):
            self.assertAlmostEqual(weight, cell_measure(ifs, tuple(word)), delta=1e-15)

    def test_level_overflow(self):
        with self.assertRaises(LevelOverflowError):
            generate_prefractal(koch(), 11)
        with self.assertRaises(LevelOverflowError):
            generate_prefractal(minkowski(), 3, max_segments=100)

    @override_settings(LAB_MAX_SEGMENTS=16)
    def test_cap_read_from_settings(self):
        generate_prefractal(koch(), 2)
        with self.assertRaises(LevelOverflowError):
            generate_prefractal(koch(), 3)

    def test_negative_level_rejected(self):
        with self.assertRaises(GeometryError):
            generate_prefractal(koch(), -1)

    def test_mixture_needs_long_enough_environment(self):
        ifs = koch_mixture(environment=(1, 2))
        self.assertEqual(generate_prefractal(ifs, 2).n_segments, 16)
        with self.assertRaises(GeometryError):
            generate_prefractal(ifs, 3)


class MeasureDataTests(SimpleTestCase):
    def test_contraction_sums(self):
        self.assertAlmostEqual(contraction_sum_D(koch()).D, 4.0 / 3.0, places=14)
        self.assertAlmostEqual(contraction_sum_D(minkowski()).D, 2.0, places=14)
        self.assertEqual(contraction_sum([0.37]), 0.37)

    def test_mixture_reports_every_family(self):
        report = contraction_sum_D(koch_mixture(l=(3.0, 3.5)))
        self.assertAlmostEqual(report.per_family[1], 4.0 / 3.0, places=14)
        self.assertAlmostEqual(report.per_family[2], 4.0 / 3.5, places=14)
        self.assertEqual(report.D, report.per_family[1])

    def test_sigma_tables(self):
        for m in range(9):
            self.assertAlmostEqual(sigma(koch(), m), 0.75**m, delta=1e-12)
            self.assertAlmostEqual(sigma(minkowski(), m), 2.0**-m, delta=1e-12)
        self.assertEqual(sigma(tent(), 0), 1.0)
        self.assertAlmostEqual(sigma(koch(), 2), 0.5625, delta=1e-15)
        self.assertEqual(sigma(minkowski(), 3), 0.125)

    def test_mixture_sigma_is_environment_product(self):
        ifs = koch_mixture(l=(3.0, 3.5), environment=(1, 2))
        self.assertAlmostEqual(sigma(ifs, 2), (3.0 / 4.0) * (3.5 / 4.0), delta=1e-14)

    def test_cell_measure(self):
        mixture = koch_mixture(environment=(1, 2, 1, 2))
        self.assertAlmostEqual(cell_measure(mixture, (2, 4, 1)), 4.0**-3, delta=1e-15)
        self.assertEqual(cell_measure(koch(), ()), 1.0)
        self.assertAlmostEqual(cell_measure(minkowski(), (3, 7)), 1.0 / 64.0, delta=1e-15)
        with self.assertRaises(GeometryError):
            cell_measure(koch(), (5,))

    def test_cell_measure_self_similar(self):
        for ifs in (koch(), minkowski(), koch_mixture(environment=(2, 1, 1))):
            for word in ((), (1,), (2, 1)):
                children = sum(
                    cell_measure(ifs, word + (j,))
                    for j in range(1, len(ifs.family_at(len(word))) + 1)
                )
                self.assertAlmostEqual(cell_measure(ifs, word), children, delta=1e-12)

    def test_similarity_dimension(self):
        self.assertAlmostEqual(similarity_dimension(koch()), math.log(4) / math.log(3), places=10)
        self.assertAlmostEqual(similarity_dimension(minkowski()), 1.5, places=10)


class DensityRatioTests(SimpleTestCase):
    def test_chord_on_base_segment(self):
        curve = generate_prefractal(koch(), 0)
        (sample,) = measure_density_ratio(curve, [((0.5, 0.0), 0.1)])
        self.assertAlmostEqual(sample.ratio, 2.0, delta=1e-12)

    def test_far_sample_is_zero(self):
        curve = generate_prefractal(koch(), 3)
        (sample,) = measure_density_ratio(curve, [((0.5, 5.0), 0.5)])
        self.assertEqual(sample.ratio, 0.0)

    def test_radius_range(self):
        curve = generate_prefractal(koch(), 0)
        with self.assertRaises(GeometryError):
            measure_density_ratio(curve, [((0.5, 0.0), 0.0)])
        with self.assertRaises(GeometryError):
            measure_density_ratio(curve, [((0.5, 0.0), 1.5)])

    def test_ratios_stay_bounded_across_levels(self):
        fine = generate_prefractal(koch(), 4)
        samples = random_samples(fine, 200, np.random.default_rng(7))
        samples.append(((0.5, 0.0), 0.3))
        coarse_max = max(s.ratio for s in measure_density_ratio(generate_prefractal(koch(), 0), samples))
        fine_max = max(s.ratio for s in measure_density_ratio(fine, samples))
        self.assertGreater(coarse_max, 0.0)
        self.assertLessEqual(fine_max, 10.0 * coarse_max)

    def test_measure_report(self):
        curve = generate_prefractal(minkowski(), 2)
        report = measure_report(minkowski(), curve, [((0.5, 0.0), 0.2)])
        self.assertEqual(report.sigma_per_level, [1.0, 0.5, 0.25])
        self.assertEqual(report.D, 2.0)
        self.assertEqual(len(report.density_ratio_samples), 1)


class OpenSetConditionTests(SimpleTestCase):
    def test_koch_holds_at_levels_one_and_two(self):
        ifs = koch()
        O, O_prime = osc_polygons(ifs)
        for level in (1, 2):
            report = check_open_set_condition(ifs, O, O_prime, level=level)
            self.assertTrue(report.holds, report.violations)

    def test_minkowski_holds_at_levels_one_and_two(self):
        ifs = minkowski()
        O, O_prime = osc_polygons(ifs)
        verdicts = {check_open_set_condition(ifs, O, O_prime, level=k).holds for k in (1, 2)}
        self.assertEqual(verdicts, {True})

    def test_overlapping_system_fails_with_witness(self):
        report = check_open_set_condition(tent(0.9), rhombus(0.5), rhombus(1.0))
        self.assertFalse(report.holds)
        overlaps = [v for v in report.violations if v.kind == "overlap"]
        self.assertEqual(len(overlaps), 1)
        self.assertGreater(overlaps[0].evidence["area"], 0.0)
        self.assertEqual(overlaps[0].evidence["words"], ((1,), (2,)))

    def test_non_convex_polygon_rejected(self):
        arrow = [(0.0, 0.0), (1.0, 0.0), (0.5, 0.2), (0.5, 1.0)]
        with self.assertRaises(GeometryError):
            check_open_set_condition(koch(), arrow, rhombus(1.0))

    def test_base_touching_polygon_fails(self):
        ifs = koch()
        square = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        report = check_open_set_condition(ifs, rhombus(0.3), square)
        kinds = {v.kind for v in report.violations}
        self.assertIn("base", kinds)


class MixtureDimensionTests(SimpleTestCase):
    def test_pure_koch(self):
        self.assertAlmostEqual(mixture_dimension((1.0, 0.0), (3.0, 3.5)), math.log(4) / math.log(3), places=12)

    def test_limit_towards_one(self):
        value = mixture_dimension((0.0, 1.0), (3.0, 4.0 - 1e-9))
        self.assertGreater(value, 1.0)
        self.assertAlmostEqual(value, 1.0, places=8)

    def test_symmetric_identical_families(self):
        self.assertAlmostEqual(mixture_dimension((0.5, 0.5), (3.0, 3.0)), math.log(4) / math.log(3), places=12)

    def test_invalid_arguments(self):
        with self.assertRaises(GeometryError):
            mixture_dimension((0.6, 0.6), (3.0, 3.0))
        with self.assertRaises(GeometryError):
            mixture_dimension((0.5, 0.5), (3.0, 4.0))

    def test_mixture_similarity_dimension_uses_frequencies(self):
        ifs = koch_mixture(l=(3.0, 3.5), environment=(1, 2, 1, 2))
        self.assertAlmostEqual(
            similarity_dimension(ifs), mixture_dimension((0.5, 0.5), (3.0, 3.5)), places=12
        )


class EnvironmentTests(SimpleTestCase):
    def test_constant(self):
        report = build_environment(EnvironmentRule.constant(1), 5)
        self.assertEqual(report.sequence, (1, 1, 1, 1, 1))
        self.assertTrue(all(row[1] == 1.0 for row in report.frequencies))
        self.assertTrue(report.feasible)

    def test_periodic(self):
        report = build_environment(EnvironmentRule.periodic((1, 2)), 4)
        self.assertEqual(report.sequence, (1, 2, 1, 2))
        self.assertEqual(report.frequencies[3][1], 0.5)

    def test_frequency_target(self):
        report = build_environment(EnvironmentRule.frequency({1: 0.75, 2: 0.25}, c0=1.0), 8)
        self.assertEqual(report.violations, [])
        for m, row in enumerate(report.frequencies, start=1):
            self.assertLessEqual(abs(row[1] - 0.75), 1.0 / m + 1e-12)

    def test_small_c0_is_flagged_but_returned(self):
        with self.assertLogs("prefractal_lab.geometry.environment", level="WARNING"):
            report = build_environment(EnvironmentRule.frequency({1: 0.5, 2: 0.5}, c0=0.1), 6)
        self.assertFalse(report.feasible)
        self.assertEqual(len(report.sequence), 6)
        self.assertTrue(report.violations)

    def test_length_must_be_positive(self):
        with self.assertRaises(GeometryError):
            build_environment(EnvironmentRule.constant(1), 0)


class CurveFileTests(SimpleTestCase):
    def test_text_round_trip_is_exact(self):
        curve = generate_prefractal(koch(), 2)
        text = format_curve(curve)
        self.assertTrue(text.startswith("# ifs-curve level=2 D="))
        self.assertEqual(len(text.splitlines()), 17)
        again = parse_curve(text)
        self.assertEqual(format_curve(again), text)
        np.testing.assert_array_equal(again.points, curve.points)
        np.testing.assert_array_equal(again.words, curve.words)


class ConfiguredIfsTests(SimpleTestCase):
    def test_default_is_koch(self):
        ifs = ifs_from_spec({})
        self.assertEqual(ifs.name, "koch")
        self.assertEqual(generate_prefractal(ifs, 3).n_segments, 64)

    def test_generator_params(self):
        ifs = ifs_from_spec({"generator": "koch", "params": {"l": 3.5}})
        self.assertAlmostEqual(ifs.families[1][0].ratio, 1.0 / 3.5, delta=1e-15)

    def test_mixture_environment_is_expanded(self):
        spec = {"generator": "koch-mixture", "params": {"l": [3.0, 3.5]}, "environment": {"kind": "periodic", "pattern": [2, 1]}}
        ifs = ifs_from_spec(spec, levels=5)
        self.assertEqual(ifs.environment, (2, 1, 2, 1, 2))

    def test_explicit_maps(self):
        spec = {
            "generator": "explicit",
            "maps": [{"ratio": 0.5}, {"ratio": 0.5, "translation": [0.5, 0.0]}],
        }
        curve = generate_prefractal(ifs_from_spec(spec), 3)
        self.assertEqual(curve.n_segments, 8)
        self.assertAlmostEqual(curve.total_length, 1.0, delta=1e-14)

    def test_unknown_generator(self):
        with self.assertRaises(GeometryError):
            ifs_from_spec({"generator": "sierpinski"})

    def test_environment_from_list_and_rules(self):
        self.assertEqual(environment_from_spec([1, 2, 2], 3), (1, 2, 2))
        self.assertEqual(environment_from_spec({"kind": "constant", "label": 2}, 3), (2, 2, 2))
        with self.assertRaises(GeometryError):
            environment_from_spec({"kind": "random"}, 3)
