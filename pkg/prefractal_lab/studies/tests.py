import math
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase, override_settings
from numpy.testing import assert_allclose

from prefractal_lab.exceptions import MeshMismatchError, ParameterError
from prefractal_lab.fem.assembly import assemble
from prefractal_lab.geometry.curves import generate_prefractal
from prefractal_lab.geometry.generators import koch
from prefractal_lab.meshing.domains import UNIT_SQUARE, BoundarySpec, build_domain, square_domain
from prefractal_lab.meshing.mesher import triangulate
from prefractal_lab.wave.params import WaveParams
from prefractal_lab.wave.trajectory import Trajectory
from prefractal_lab.westervelt.params import WesterveltParams
from prefractal_lab.westervelt.picard import picard_solve

from .config import FIELDS, StudyConfig, field_by_name
from .levels import background_grid, transfer_matrix
from .mosco import mosco_residual, mosco_study, probe_trajectories, residual_scale, residual_terms
from .reports import ConvergenceReport, Verdict, bounded_spread, strictly_decreasing
from .solution import solution_convergence_study
from .trace import measure_oracle, trace_convergence_study, trace_integral
from .uniformity import (
    measure_uniformity_study,
    poincare_uniformity_study,
    random_polynomial_fields,
    uniform_trace_ratio,
)


def x_squared(x, y):
    return np.asarray(x) ** 2 + 0.0 * np.asarray(y)


class StudyConfigTests(SimpleTestCase):
    def test_defaults(self):
        study = StudyConfig()
        self.assertEqual(study.levels, (1, 2, 3))
        self.assertEqual(study.geometry_level(2), 3)

    def test_levels_must_increase(self):
        with self.assertRaises(ParameterError):
            StudyConfig(levels=(2, 1))
        with self.assertRaises(ParameterError):
            StudyConfig(levels=())

    def test_unknown_source(self):
        with self.assertRaises(ParameterError):
            StudyConfig(source="plane-wave")
        with self.assertRaises(ParameterError):
            field_by_name("plane-wave")

    def test_dict_round_trip(self):
        study = StudyConfig(levels=[0, 2], alpha=0.0, refine_only=True)
        self.assertEqual(StudyConfig.from_dict(study.to_dict()), study)

    def test_level_mesh_size_follows_segments(self):
        study = StudyConfig(h=0.1)
        self.assertEqual(study.level_h(1), 0.1)
        self.assertAlmostEqual(study.level_h(3), 1.0 / 27.0, delta=1e-12)

    def test_sigma_scaling_switch(self):
        self.assertAlmostEqual(StudyConfig().sigma_weight(2), 0.75**2, delta=1e-14)
        self.assertEqual(StudyConfig(sigma_scaling=False).sigma_weight(2), 1.0)

    def test_omega_star_covers_outward_curve(self):
        xmin, ymin, xmax, ymax = StudyConfig(levels=(1, 2)).omega_star
        assert_allclose((xmin, xmax, ymax), (0.0, 1.0, 1.0), atol=1e-12)
        self.assertAlmostEqual(ymin, -math.sqrt(3.0) / 6.0, delta=1e-12)

    @override_settings(LAB_BACKGROUND_RESOLUTION=48)
    def test_background_resolution_default(self):
        self.assertEqual(StudyConfig().background_resolution, 48)
        self.assertEqual(StudyConfig(background=16).background_resolution, 16)


class VerdictTests(SimpleTestCase):
    def test_strictly_decreasing_ignores_nan(self):
        self.assertTrue(strictly_decreasing([3.0, 2.0, math.nan, 1.0]))
        self.assertFalse(strictly_decreasing([3.0, 3.0]))

    def test_bounded_spread_skips_zeros(self):
        verdict = bounded_spread("ratios", [0.0, 1.0, 4.0], threshold=5.0)
        self.assertTrue(verdict.passed)
        self.assertIn("1 zero entries left out", verdict.detail)
        self.assertFalse(bounded_spread("ratios", [1.0, 6.0], threshold=5.0).passed)

    def test_line(self):
        line = Verdict(rule="steps shrink", passed=False, values=(0.5, 0.25)).line()
        self.assertEqual(line, "[FAIL] steps shrink | values: 0.5, 0.25")


class ReportTests(SimpleTestCase):
    def report(self):
        return ConvergenceReport(
            study="demo",
            rows=[{"level": 1, "e_m": 0.5}, {"level": 2, "e_m": 0.25}],
            verdicts=[Verdict(rule="e_m strictly decreasing", passed=True, values=(0.5, 0.25))],
            notes={"seed": 0},
            plot_columns=("e_m",),
        )

    def test_summary(self):
        summary = self.report().summary()
        self.assertTrue(summary.startswith("study: demo\n"))
        self.assertTrue(summary.endswith("overall: PASS\n"))

    def test_write_is_deterministic(self):
        with tempfile.TemporaryDirectory() as tmp:
            first = [Path(p).read_bytes() for p in self.report().write(f"{tmp}/a")]
            second = [Path(p).read_bytes() for p in self.report().write(f"{tmp}/b")]
            self.assertEqual(first, second)
            frame = pd.read_csv(f"{tmp}/a/demo.csv")
            self.assertEqual(list(frame.columns), ["level", "e_m"])
            self.assertTrue(Path(f"{tmp}/a/demo.svg").read_text().lstrip().startswith("<?xml"))


class TraceTests(SimpleTestCase):
    def test_constant_is_exact(self):
        for m in range(5):
            self.assertAlmostEqual(trace_integral(generate_prefractal(koch(), m), FIELDS["one"]), 1.0, delta=1e-12)

    def test_symmetric_linear_field(self):
        value = trace_integral(generate_prefractal(koch(), 6), FIELDS["x"])
        self.assertLessEqual(abs(value - 0.5), 1e-3)

    def test_oracle_is_self_consistent(self):
        first = measure_oracle(koch(), x_squared, 8)
        second = measure_oracle(koch(), x_squared, 10)
        self.assertLessEqual(abs(first - second), 1e-6)

    def test_oracle_anchor(self):
        with self.assertRaises(ParameterError):
            measure_oracle(koch(), x_squared, 3, anchor="end")
        self.assertAlmostEqual(measure_oracle(koch(), FIELDS["one"], 5, anchor="start"), 1.0, delta=1e-12)

    def test_quadratic_steps_shrink(self):
        report = trace_convergence_study(koch(), x_squared, range(2, 8), name="x2")
        self.assertTrue(report.passed, report.summary())
        errors = report.column("abs_error")
        self.assertLess(errors[-1], errors[0])
        self.assertEqual(report.column("segments"), [4**m for m in range(2, 8)])

    def test_needs_levels(self):
        with self.assertRaises(ParameterError):
            trace_convergence_study(koch(), x_squared, [])


class UniformityTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.study = StudyConfig(levels=(1, 2, 3, 4))

    def test_constant_field_ratio(self):
        report = uniform_trace_ratio(self.study, FIELDS["one"], "one")
        xmin, ymin, xmax, ymax = self.study.omega_star
        expected = 1.0 / ((xmax - xmin) * (ymax - ymin))
        for ratio in report.column("ratio"):
            self.assertAlmostEqual(ratio, expected, delta=1e-9 * expected)
        self.assertTrue(report.passed)

    def test_height_field_ratio_grows_to_a_bound(self):
        for outward in (True, False):
            study = StudyConfig(levels=(0, 1, 2, 3, 4), outward=outward)
            report = uniform_trace_ratio(study, FIELDS["y"], "y")
            ratios = report.column("ratio")
            self.assertEqual(ratios[0], 0.0)
            self.assertTrue(all(b > a for a, b in zip(ratios, ratios[1:])), ratios)
            self.assertLess(ratios[-1], 1.25 * ratios[1], ratios)
            self.assertLess(ratios[-1] - ratios[-2], ratios[2] - ratios[1], ratios)
            self.assertTrue(report.passed, report.summary())

    def test_random_polynomial_fields_are_bounded(self):
        for field in random_polynomial_fields(3, seed=7):
            report = uniform_trace_ratio(self.study, field)
            self.assertTrue(report.passed, report.summary())

    def test_random_fields_stay_positive(self):
        xs = np.linspace(-1.0, 1.0, 21)
        x, y = np.meshgrid(xs, xs)
        for field in random_polynomial_fields(5, seed=1):
            self.assertGreater(field(x, y).min(), 0.0)

    def test_measure_density(self):
        report = measure_uniformity_study(self.study, samples=50, seed=3)
        self.assertTrue(report.passed, report.summary())
        self.assertEqual(report.notes["samples"], 50)

    def test_poincare_constants(self):
        study = StudyConfig(levels=(0, 1, 2, 3, 4), h=0.1)
        report = poincare_uniformity_study(study)
        self.assertTrue(report.passed, report.summary())
        self.assertTrue(all(value > 0.0 for value in report.column("poincare")))

    def test_poincare_constants_minkowski(self):
        study = StudyConfig(ifs={"generator": "minkowski"}, levels=(0, 1, 2, 3, 4), h=0.1)
        report = poincare_uniformity_study(study)
        self.assertTrue(report.passed, report.summary())


class MoscoTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.params = WesterveltParams(
            wave=WaveParams(c=1.0, nu=0.5, T=0.5, dt=0.05), alpha=0.2, a=1.0, sigma_weight=0.75
        )
        mesh = triangulate(square_domain(koch(), 1), 1.0 / 3.0)
        cls.system = cls.params.system(mesh)
        u0 = 0.05 * FIELDS["bump"](mesh.nodes[:, 0], mesh.nodes[:, 1])
        u0[cls.system.dirichlet] = 0.0
        cls.u0 = u0
        cls.solution, _ = picard_solve(cls.system, cls.params, u0=u0)
        cls.probes = probe_trajectories(cls.system, cls.solution.times, modes=3)

    def test_solution_has_small_residual(self):
        self.assertEqual(len(self.probes), 9)
        for phi in self.probes:
            residual = mosco_residual(self.system, self.solution, phi, self.params)
            scale = residual_scale(self.system, self.solution, phi, self.params)
            self.assertGreater(scale, 0.0)
            self.assertLessEqual(abs(residual), 1e-8 * scale)

    def test_linear_energy_identity(self):
        params = self.params.with_alpha(0.0)
        linear, _ = picard_solve(self.system, params, u0=self.u0)
        residual = mosco_residual(self.system, linear, linear.v, params)
        scale = residual_scale(self.system, linear, linear.v, params)
        self.assertGreater(scale, 0.0)
        self.assertLessEqual(abs(residual), 1e-8 * scale)

    def test_study_over_levels(self):
        report = mosco_study(StudyConfig(levels=(1, 2), h=0.25, T=0.3, dt=0.05), modes=2)
        self.assertTrue(report.passed, report.summary())
        self.assertEqual(report.column("probes"), [6, 6])

    def test_zero_trajectory(self):
        zero = Trajectory.zeros(self.system, self.solution.times)
        terms = residual_terms(self.system, zero, self.probes[0], self.params)
        self.assertEqual(set(terms), {
            "inertia", "stiffness", "damping", "robin", "robin_damping",
            "nonlinear_acceleration", "nonlinear_velocity", "source",
        })
        self.assertEqual(mosco_residual(self.system, zero, self.probes[0], self.params), 0.0)

    def test_mesh_mismatch(self):
        spec = BoundarySpec(tags=("dirichlet",) * 4, prefractal_edge=None)
        other = assemble(triangulate(build_domain(UNIT_SQUARE, spec), 0.5))
        with self.assertRaises(MeshMismatchError):
            mosco_residual(other, self.solution, self.probes[0], self.params)
        with self.assertRaises(MeshMismatchError):
            mosco_residual(self.system, self.solution, np.zeros((2, 2)), self.params)


class TransferTests(SimpleTestCase):
    def test_background_grid(self):
        gx, gy, area = background_grid((0.0, 0.0, 2.0, 1.0), 4)
        self.assertEqual(gx.shape, (16,))
        self.assertEqual(area, 0.125)
        self.assertEqual((gx.min(), gy.max()), (0.25, 0.875))

    def test_linear_fields_are_reproduced_with_zero_extension(self):
        spec = BoundarySpec(tags=("neumann",) * 4, prefractal_edge=None)
        mesh = triangulate(build_domain(UNIT_SQUARE, spec), 0.25)
        gx, gy, _ = background_grid((-0.5, -0.5, 1.5, 1.5), 8)
        values = transfer_matrix(mesh.nodes, mesh.triangles, gx, gy) @ (1.0 + 2.0 * mesh.nodes[:, 0] - mesh.nodes[:, 1])
        inside = (gx > 0.0) & (gx < 1.0) & (gy > 0.0) & (gy < 1.0)
        np.testing.assert_allclose(values[inside], 1.0 + 2.0 * gx[inside] - gy[inside], atol=1e-12)
        self.assertEqual(np.abs(values[~inside]).max(), 0.0)


class SolutionStudyTests(SimpleTestCase):
    def test_refinement_control_has_second_order_ratio(self):
        study = StudyConfig(
            levels=(0, 1, 2), h=0.25, refine_only=True, alpha=0.0, T=0.5, dt=0.05, background=64
        )
        report = solution_convergence_study(study)
        self.assertTrue(report.passed, report.summary())
        ratio = report.column("ratio")[1]
        self.assertGreaterEqual(ratio, 3.0)
        self.assertLessEqual(ratio, 5.0)

    def test_koch_levels_converge(self):
        study = StudyConfig(levels=(1, 2, 3, 4), interior_h=0.1, T=0.5, dt=0.05, background=64)
        with tempfile.TemporaryDirectory() as tmp:
            report = solution_convergence_study(study, work_dir=tmp)
            names = sorted(p.name for p in Path(tmp).iterdir())
            self.assertEqual(names, [f"level_{i:02d}.{ext}" for i in range(4) for ext in ("csv", "npz")])
        self.assertTrue(report.passed, report.summary())
        self.assertTrue(math.isnan(report.column("e_m")[-1]))
        self.assertEqual(report.column("picard_iterations")[0] > 0, True)

    def test_minkowski_levels_converge(self):
        study = StudyConfig(
            ifs={"generator": "minkowski"}, levels=(1, 2, 3, 4), interior_h=0.1, T=0.5, dt=0.05, background=64
        )
        report = solution_convergence_study(study)
        self.assertTrue(report.passed, report.summary())
        errors = report.column("e_m")[:-1]
        self.assertTrue(all(b < a for a, b in zip(errors, errors[1:])), errors)

    def test_sigma_scaling_keeps_robin_drift_level(self):
        common = dict(levels=(1, 2, 3), interior_h=0.1, T=0.5, dt=0.05, background=32)
        scaled = solution_convergence_study(StudyConfig(**common))
        unscaled = solution_convergence_study(StudyConfig(sigma_scaling=False, **common))
        self.assertLess(
            float(scaled.notes["robin_drift_spread"]), float(unscaled.notes["robin_drift_spread"])
        )
