import math
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase, override_settings
from numpy.testing import assert_allclose

from prefractal_lab.exceptions import ConvergenceError, DegeneracyError, DivergenceError, ParameterError
from prefractal_lab.fem.assembly import assemble
from prefractal_lab.meshing.domains import UNIT_SQUARE, BoundarySpec, build_domain
from prefractal_lab.meshing.mesher import triangulate
from prefractal_lab.wave.newmark import implicit_time_integrate
from prefractal_lab.wave.params import WaveParams
from prefractal_lab.wave.trajectory import Trajectory, l2l2_distance, x_norm

from .constants import estimate_constants, smallness_radius
from .io import format_report, write_report
from .newton import NewtonIntegrator, newton_step_solve
from .params import WesterveltParams
from .picard import ContractionReport, nonlinear_source, picard_solve

WAVE = WaveParams(c=1.0, nu=0.5, T=1.0, dt=0.05)


def dirichlet_square(h):
    spec = BoundarySpec(tags=("dirichlet",) * 4, prefractal_edge=None)
    return triangulate(build_domain(UNIT_SQUARE, spec), h)


def bump(x, y):
    return np.sin(math.pi * x) * np.sin(math.pi * y)


def scaled_bump(eps):
    return lambda x, y: eps * bump(x, y)


class WesterveltParamsTests(SimpleTestCase):
    def test_negative_alpha(self):
        with self.assertRaises(ParameterError):
            WesterveltParams(wave=WAVE, alpha=-1.0)

    def test_system_carries_robin_weight(self):
        spec = BoundarySpec(tags=("robin", "dirichlet", "neumann", "dirichlet"), prefractal_edge=None)
        mesh = triangulate(build_domain(UNIT_SQUARE, spec), 0.25)
        system = WesterveltParams(wave=WAVE, alpha=1.0, a=2.0, sigma_weight=0.5).system(mesh)
        ones = np.ones(mesh.n_nodes)
        self.assertAlmostEqual(ones @ (system.R @ ones), 0.5, delta=1e-12)
        self.assertEqual(system.a, 2.0)


class NonlinearSourceTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        spec = BoundarySpec(tags=("neumann",) * 4, prefractal_edge=None)
        cls.system = assemble(triangulate(build_domain(UNIT_SQUARE, spec), 0.5))
        cls.times = WAVE.times

    def quadratic(self):
        u = np.outer(0.5 * self.times**2, np.ones(self.system.mesh.n_nodes))
        return Trajectory.from_samples(self.system, self.times, u)

    def test_zero_alpha(self):
        self.assertEqual(np.abs(nonlinear_source(self.quadratic(), 0.0)).max(), 0.0)

    def test_constant_in_space_quadratic(self):
        alpha = 0.7
        source = nonlinear_source(self.quadratic(), alpha)
        expected = alpha * (0.5 * self.times**2 + self.times**2)
        assert_allclose(source, np.tile(expected[:, None], (1, self.system.mesh.n_nodes)), atol=1e-12)

    def test_quadratic_homogeneity(self):
        traj = self.quadratic()
        one = nonlinear_source(traj, 1.3)
        two = nonlinear_source(traj.scaled(2.0), 1.3)
        assert_allclose(two, 4.0 * one, rtol=1e-10, atol=1e-14)


class PicardTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.system = assemble(dirichlet_square(1.0 / 8.0))

    def solve(self, eps, alpha=1.0, **kwargs):
        params = WesterveltParams(wave=WAVE, alpha=alpha)
        return picard_solve(self.system, params, u0=scaled_bump(eps), **kwargs)

    def test_zero_alpha_is_the_linear_solution(self):
        traj, report = self.solve(0.5, alpha=0.0)
        linear = implicit_time_integrate(self.system, WAVE, u0=scaled_bump(0.5))
        self.assertEqual(report.iterations, 1)
        self.assertTrue(report.converged)
        self.assertLessEqual(np.abs(traj.u - linear.u).max(), 1e-10 * np.abs(linear.u).max())

    def test_geometric_convergence(self):
        _, report = self.solve(0.01)
        self.assertTrue(report.converged)
        self.assertGreaterEqual(len(report.ratios), 4, report.corrections)
        self.assertTrue(all(r < 1.0 for r in report.ratios), report.ratios)
        # the first correction is concentrated near t = 0; the rate settles from the second on
        ratios = report.ratios[1:4]
        self.assertLessEqual(max(ratios) / min(ratios), 1.2, ratios)

    def test_first_correction_scales_quadratically(self):
        _, large = self.solve(0.01)
        _, small = self.solve(0.005)
        ratio = large.corrections[0] / small.corrections[0]
        self.assertGreaterEqual(ratio, 3.5)
        self.assertLessEqual(ratio, 4.5)

    def test_nonlinear_part_scales_quadratically(self):
        params = WesterveltParams(wave=WAVE, alpha=1.0)
        parts = []
        for eps in (0.01, 0.005):
            traj, _ = picard_solve(self.system, params, u0=scaled_bump(eps))
            linear = implicit_time_integrate(self.system, WAVE, u0=scaled_bump(eps))
            parts.append(x_norm(traj - linear))
        ratio = parts[0] / parts[1]
        self.assertGreaterEqual(ratio, 3.5)
        self.assertLessEqual(ratio, 4.5)

    def test_small_data_stays_in_the_ball(self):
        _, report = self.solve(0.01)
        self.assertTrue(report.within_ball)
        self.assertEqual(report.ball_radius, 2.0 * report.linear_norm)

    def test_ball_radius_can_be_given(self):
        report = ContractionReport(linear_norm=1.0, solution_norm=1.5)
        self.assertEqual(report.ball_radius, 2.0)
        self.assertTrue(report.within_ball)
        tight = ContractionReport(linear_norm=1.0, solution_norm=1.5, ball_radius=1.2)
        self.assertEqual(tight.ball_radius, 1.2)
        self.assertFalse(tight.within_ball)
        self.assertIsNone(ContractionReport(solution_norm=1.5).within_ball)

    def test_too_few_iterates(self):
        with self.assertRaises(ConvergenceError) as ctx:
            self.solve(0.01, tol=1e-30, max_iters=2)
        self.assertNotIsInstance(ctx.exception, DivergenceError)
        self.assertEqual(ctx.exception.report.iterations, 2)

    def test_divergence_carries_the_report(self):
        with np.errstate(all="ignore"):
            with self.assertRaises(DivergenceError) as ctx:
                self.solve(2.0, alpha=20.0)
        self.assertFalse(ctx.exception.report.converged)
        self.assertGreaterEqual(ctx.exception.report.iterations, 1)

    @override_settings(LAB_PICARD_MAXITER=3)
    def test_iteration_cap_follows_settings(self):
        with self.assertRaises(ConvergenceError):
            self.solve(0.01, tol=1e-30)

    def test_constants_are_reported(self):
        params = WesterveltParams(wave=WAVE, alpha=1.0)
        constants = estimate_constants(self.system, params, trials=2, seed=4)
        _, report = picard_solve(self.system, params, u0=scaled_bump(1e-4), constants=constants)
        self.assertEqual(report.r_star, constants.r_star)
        self.assertIsNotNone(report.within_smallness)


class NewtonTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.system = assemble(dirichlet_square(1.0 / 8.0))

    def test_zero_alpha_matches_linear_stepper(self):
        params = WesterveltParams(wave=WAVE, alpha=0.0)
        source = lambda t, x, y: np.cos(t) * x * y  # noqa: E731
        newton = newton_step_solve(self.system, params, u0=bump, f=source)
        linear = implicit_time_integrate(self.system, WAVE, u0=bump, f=source)
        self.assertLessEqual(np.abs(newton.u - linear.u).max(), 1e-12 * np.abs(linear.u).max())

    def test_agrees_with_picard(self):
        params = WesterveltParams(wave=WAVE, alpha=1.0)
        newton = newton_step_solve(self.system, params, u0=scaled_bump(0.01))
        picard, _ = picard_solve(self.system, params, u0=scaled_bump(0.01))
        self.assertLessEqual(l2l2_distance(newton, picard), 1e-6)

    def test_few_iterations_per_step(self):
        integrator = NewtonIntegrator(self.system, WesterveltParams(wave=WAVE, alpha=1.0))
        integrator.run(u0=scaled_bump(0.01))
        self.assertEqual(len(integrator.iterations), WAVE.steps)
        self.assertLessEqual(max(integrator.iterations), 5)

    def test_degenerate_coefficient(self):
        u0 = self.system.field(bump).values
        params = WesterveltParams(wave=WAVE, alpha=1.0 / u0.max())
        with self.assertRaises(DegeneracyError):
            newton_step_solve(self.system, params, u0=u0)


class ConstantTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.system = assemble(dirichlet_square(1.0 / 8.0))
        cls.wave = WaveParams(c=0.1, nu=0.5, T=1.0, dt=0.05)

    def test_zero_alpha_has_infinite_radius(self):
        estimate = estimate_constants(self.system, WesterveltParams(wave=self.wave, alpha=0.0), 2, seed=1)
        self.assertEqual(estimate.r_star, math.inf)

    def test_radius_identity(self):
        estimate = estimate_constants(self.system, WesterveltParams(wave=self.wave, alpha=0.3), 3, seed=1)
        self.assertAlmostEqual(estimate.r_star * 8.0 * estimate.B * estimate.C_nu * estimate.alpha, 1.0, places=14)
        self.assertEqual(estimate.B, max(estimate.B1, estimate.B2))
        self.assertTrue(estimate.lower_bounds)

    def test_deterministic(self):
        params = WesterveltParams(wave=self.wave, alpha=0.3)
        self.assertEqual(estimate_constants(self.system, params, 3, seed=7), estimate_constants(self.system, params, 3, seed=7))

    def test_c_nu_scales_inversely_with_damping(self):
        base = estimate_constants(self.system, WesterveltParams(wave=self.wave, alpha=1.0), 3, seed=2)
        doubled = estimate_constants(self.system, WesterveltParams(wave=self.wave.with_nu(1.0), alpha=1.0), 3, seed=2)
        self.assertLessEqual(abs(doubled.C_nu / base.C_nu - 0.5) / 0.5, 0.3)

    def test_trials_validated(self):
        with self.assertRaises(ParameterError):
            estimate_constants(self.system, WesterveltParams(wave=self.wave, alpha=1.0), 0, seed=0)

    def test_smallness_radius(self):
        self.assertEqual(smallness_radius(2.0, 0.5, 0.0), math.inf)
        self.assertEqual(smallness_radius(2.0, 0.5, 0.25), 0.5)


class ReportExportTests(SimpleTestCase):
    def test_rows_and_summary(self):
        report = ContractionReport(B=2.0, C_nu=0.5, r_star=0.125, alpha=1.0, corrections=[1e-2, 1e-3, 1e-4], converged=True)
        text = format_report(report)
        lines = text.splitlines()
        self.assertEqual(lines[0], "iter,correction_norm,ratio")
        self.assertEqual(lines[-1], "# B=2.0 C_nu=0.5 r_star=0.125 converged=true iterations=3 ball_radius=none")
        with tempfile.TemporaryDirectory() as tmp:
            path = write_report(report, Path(tmp) / "picard.csv")
            frame = pd.read_csv(path, comment="#")
        self.assertEqual(list(frame["iter"]), [1, 2, 3])
        self.assertTrue(math.isnan(frame["ratio"][0]))
        assert_allclose(frame["ratio"][1:], [0.1, 0.1], rtol=1e-12)

    def test_missing_constants(self):
        self.assertIn("B=none", format_report(ContractionReport(corrections=[0.0])))
        self.assertIn("ball_radius=0.5", format_report(ContractionReport(corrections=[0.0], linear_norm=0.25)))
