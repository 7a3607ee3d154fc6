import math
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from prefractal_lab.exceptions import MeshMismatchError, ParameterError, SolverError
from prefractal_lab.fem.assembly import assemble
from prefractal_lab.fem.solvers import solve_eigen, solve_poisson
from prefractal_lab.geometry.generators import koch
from prefractal_lab.meshing.domains import UNIT_SQUARE, BoundarySpec, build_domain, square_domain
from prefractal_lab.meshing.mesher import refine, triangulate

from .diagnostics import apriori_check, energy, energy_history, is_dissipative
from .galerkin import propagate_modes, spectral_galerkin_solve
from .io import TRAJECTORY_COLUMNS, write_trajectory_csv
from .newmark import implicit_time_integrate
from .params import WaveParams
from .trajectory import Trajectory, l2l2_distance, x_norm, y_norm


def dirichlet_square(h):
    spec = BoundarySpec(tags=("dirichlet",) * 4, prefractal_edge=None)
    return triangulate(build_domain(UNIT_SQUARE, spec), h)


def bump(x, y):
    return np.sin(math.pi * x) * np.sin(math.pi * y)


def l2(system, u):
    return math.sqrt(float(u @ (system.M @ u)))


class WaveParamsTests(SimpleTestCase):
    def test_grid(self):
        params = WaveParams(c=1.0, nu=0.1, T=1.0, dt=0.25)
        self.assertEqual(params.steps, 4)
        assert_allclose(params.times, [0.0, 0.25, 0.5, 0.75, 1.0])

    def test_invalid_values(self):
        for kwargs in (
            {"c": 0.0, "nu": 0.1, "T": 1.0, "dt": 0.1},
            {"c": 1.0, "nu": -0.1, "T": 1.0, "dt": 0.1},
            {"c": 1.0, "nu": 0.1, "T": 1.0, "dt": 2.0},
            {"c": 1.0, "nu": 0.1, "T": 1.0, "dt": 0.3},
        ):
            with self.assertRaises(ParameterError, msg=str(kwargs)):
                WaveParams(**kwargs)

    def test_time_stepper_needs_damping(self):
        system = assemble(dirichlet_square(0.5))
        with self.assertRaises(ParameterError):
            implicit_time_integrate(system, WaveParams(c=1.0, nu=0.0, T=1.0, dt=0.5))


class GalerkinModeTests(SimpleTestCase):
    def run_mode(self, lam, c, nu, d0, d1, T=2.0, dt=0.01, load=0.0):
        params = WaveParams(c=c, nu=nu, T=T, dt=dt)
        times = params.times
        forcing = np.full((len(times), 1), load)
        state = propagate_modes(np.array([lam]), params, np.array([d0]), np.array([d1]), forcing, times)
        return times, state

    def test_harmonic_oscillator(self):
        times, state = self.run_mode(1.0, 1.0, 0.0, 1.0, 0.0)
        assert_allclose(state.d[:, 0], np.cos(times), atol=1e-8)
        assert_allclose(state.d_t[:, 0], -np.sin(times), atol=1e-8)

    def test_critical_damping(self):
        times, state = self.run_mode(1.0, 1.0, 2.0, 1.0, 0.0)
        assert_allclose(state.d[:, 0], (1.0 + times) * np.exp(-times), atol=1e-8)

    def test_constant_load_is_integrated_exactly(self):
        times, state = self.run_mode(1.0, 1.0, 0.0, 0.0, 0.0, load=1.0)
        assert_allclose(state.d[:, 0], 1.0 - np.cos(times), atol=1e-8)
        assert_allclose(state.d_tt[:, 0], np.cos(times), atol=1e-8)

    def test_non_positive_eigenvalue(self):
        with self.assertRaises(SolverError):
            self.run_mode(0.0, 1.0, 0.1, 1.0, 0.0)

    def test_zero_data(self):
        system = assemble(dirichlet_square(0.25))
        basis = solve_eigen(system, 4)
        traj = spectral_galerkin_solve(basis, WaveParams(c=1.0, nu=0.1, T=1.0, dt=0.1))
        self.assertEqual(np.abs(traj.u).max(), 0.0)

    def test_mode_count_bounded_by_basis(self):
        system = assemble(dirichlet_square(0.25))
        basis = solve_eigen(system, 2)
        with self.assertRaises(SolverError):
            spectral_galerkin_solve(basis, WaveParams(c=1.0, nu=0.1, T=1.0, dt=0.1), modes=3)


class NewmarkTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.mesh = dirichlet_square(1.0 / 8.0)
        cls.system = assemble(cls.mesh)
        cls.basis = solve_eigen(cls.system, 10)

    def test_zero_data_gives_zero_trajectory(self):
        traj = implicit_time_integrate(self.system, WaveParams(c=1.0, nu=0.5, T=1.0, dt=0.1))
        self.assertEqual(np.abs(traj.u).max(), 0.0)
        self.assertEqual(np.abs(traj.a).max(), 0.0)

    def test_initial_data_kept(self):
        u0 = self.system.field(bump).values
        traj = implicit_time_integrate(self.system, WaveParams(c=1.0, nu=0.5, T=0.5, dt=0.1), u0=u0, u1=2.0 * u0)
        assert_allclose(traj.u[0], u0, rtol=0, atol=0)
        assert_allclose(traj.v[0], 2.0 * u0, rtol=0, atol=0)

    def test_linearity(self):
        params = WaveParams(c=1.0, nu=0.3, T=1.0, dt=0.05)
        source = lambda t, x, y: np.sin(3.0 * t) * x * (1.0 - x)  # noqa: E731
        base = implicit_time_integrate(self.system, params, u0=bump, u1=None, f=source)
        doubled = implicit_time_integrate(
            self.system,
            params,
            u0=lambda x, y: 2.0 * bump(x, y),
            f=lambda t, x, y: 2.0 * source(t, x, y),
        )
        scale = np.abs(base.u).max()
        self.assertLessEqual(np.abs(doubled.u - 2.0 * base.u).max(), 1e-10 * scale)

    def test_agrees_with_galerkin_at_second_order(self):
        errors = []
        for dt in (0.02, 0.01):
            params = WaveParams(c=1.0, nu=0.1, T=1.0, dt=dt)
            implicit = implicit_time_integrate(self.system, params, u0=self.basis.mode(0))
            spectral = spectral_galerkin_solve(self.basis, params, u0=self.basis.mode(0))
            errors.append(l2(self.system, implicit.u[-1] - spectral.u[-1]))
        ratio = errors[0] / errors[1]
        self.assertGreaterEqual(ratio, 3.5)
        self.assertLessEqual(ratio, 4.5)

    def test_ten_mode_truncation_agrees(self):
        params = WaveParams(c=1.0, nu=0.1, T=1.0, dt=0.01)
        u0 = self.basis.vectors @ np.linspace(1.0, 0.1, 10)
        implicit = implicit_time_integrate(self.system, params, u0=u0)
        spectral = spectral_galerkin_solve(self.basis, params, u0=u0)
        self.assertLessEqual(l2l2_distance(implicit, spectral), 1e-2 * y_norm(self.system, spectral.u, spectral.times))

    def test_steady_state_is_the_poisson_solution(self):
        nu, c, dt = 0.1, 1.0, 0.05
        lam1 = self.basis.eigenvalues[0]
        T = dt * math.ceil(50.0 / (nu * lam1) / dt)
        nodes = self.mesh.nodes
        source = 1.0 + nodes[:, 0] * nodes[:, 1]
        traj = implicit_time_integrate(self.system, WaveParams(c=c, nu=nu, T=T, dt=dt), f=source)
        steady = solve_poisson(self.system, source).values
        self.assertLessEqual(l2(self.system, traj.u[-1] - steady), 0.01 * l2(self.system, steady))

    def test_energy_is_dissipated(self):
        params = WaveParams(c=1.0, nu=0.05, T=2.0, dt=0.02)
        traj = implicit_time_integrate(self.system, params, u0=bump, u1=lambda x, y: x * y * (1 - x) * (1 - y))
        history = energy_history(traj, params)
        self.assertTrue(is_dissipative(history))
        self.assertLess(history[-1], history[0])

    def test_energy_is_dissipated_on_koch_domain(self):
        mesh = triangulate(square_domain(koch(), 2), 1.0 / 9.0, interior_h=0.25)
        system = assemble(mesh, a=1.0, sigma_weight=0.75**2)
        params = WaveParams(c=1.0, nu=0.05, T=1.0, dt=0.02)
        u0 = system.field(lambda x, y: np.cos(x) * (1.0 - x) * x).values
        traj = implicit_time_integrate(system, params, u0=u0)
        self.assertTrue(is_dissipative(energy_history(traj, params)))

    def test_early_stop(self):
        params = WaveParams(c=1.0, nu=0.1, T=40.0, dt=0.1)
        full = implicit_time_integrate(self.system, params, u0=self.basis.mode(0))
        stopped = implicit_time_integrate(self.system, params, u0=self.basis.mode(0), early_stop=True)
        self.assertEqual(full.n_steps, params.steps)
        self.assertLess(stopped.n_steps, params.steps)
        history = energy_history(stopped, params)
        self.assertLessEqual(history[-1], 1e-12 * history[0])
        assert_allclose(stopped.u, full.u[: stopped.n_steps + 1])


class EnergyTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.system = assemble(dirichlet_square(0.25))
        cls.params = WaveParams(c=2.0, nu=0.1, T=1.0, dt=0.1)

    def test_zero_state(self):
        zero = np.zeros(self.system.mesh.n_nodes)
        self.assertEqual(energy(self.system, self.params, zero, zero).total, 0.0)

    def test_eigenmode_potential(self):
        basis = solve_eigen(self.system, 2)
        zero = np.zeros(self.system.mesh.n_nodes)
        for k in range(2):
            result = energy(self.system, self.params, basis.mode(k), zero)
            expected = 0.5 * self.params.c**2 * basis.eigenvalues[k]
            self.assertAlmostEqual(result.potential, expected, delta=1e-8 * expected)
            self.assertEqual(result.kinetic, 0.0)


class AprioriTests(SimpleTestCase):
    params = WaveParams(c=1.0, nu=0.5, T=1.0, dt=0.05)

    def run_check(self, mesh, scale=1.0):
        system = assemble(mesh)
        u0 = scale * solve_poisson(system, lambda x, y: 2.0 * math.pi**2 * bump(x, y)).values
        f = lambda t, x, y: scale * np.cos(t) * bump(x, y)  # noqa: E731
        traj = implicit_time_integrate(system, self.params, u0=u0, f=f)
        return apriori_check(traj, u0=u0, f=f)

    def test_zero_data_is_not_applicable(self):
        system = assemble(dirichlet_square(0.25))
        report = apriori_check(implicit_time_integrate(system, self.params))
        self.assertIsNone(report.ratio)
        self.assertEqual(report.lhs, 0.0)

    def test_scaling_invariance(self):
        mesh = dirichlet_square(1.0 / 8.0)
        one, two = self.run_check(mesh), self.run_check(mesh, scale=2.0)
        self.assertAlmostEqual(two.lhs, 2.0 * one.lhs, delta=1e-10 * one.lhs)
        self.assertAlmostEqual(two.rhs, 2.0 * one.rhs, delta=1e-10 * one.rhs)
        self.assertAlmostEqual(two.ratio, one.ratio, delta=1e-10 * one.ratio)

    def test_ratio_stable_under_refinement(self):
        mesh = dirichlet_square(1.0 / 8.0)
        coarse, fine = self.run_check(mesh), self.run_check(refine(mesh))
        self.assertLessEqual(abs(coarse.ratio - fine.ratio) / fine.ratio, 0.2)


class TrajectoryTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.system = assemble(dirichlet_square(0.25))
        cls.params = WaveParams(c=1.0, nu=0.2, T=1.0, dt=0.1)
        cls.traj = implicit_time_integrate(cls.system, cls.params, u0=bump)

    def test_samples_are_read_only(self):
        with self.assertRaises(ValueError):
            self.traj.u[0, 0] = 1.0

    def test_norms_are_finite(self):
        self.assertTrue(math.isfinite(x_norm(self.traj)))
        self.assertGreater(x_norm(self.traj), 0.0)
        for name in ("l2_u", "v_norm_u", "laplacian_u", "laplacian_v"):
            self.assertTrue(np.all(np.isfinite(getattr(self.traj, name))), name)

    def test_x_norm_is_homogeneous(self):
        self.assertAlmostEqual(x_norm(self.traj.scaled(3.0)), 3.0 * x_norm(self.traj), delta=1e-10 * x_norm(self.traj))

    def test_from_samples_differentiates_quadratics(self):
        times = self.params.times
        w = self.system.field(bump).values
        traj = Trajectory.from_samples(self.system, times, np.outer(0.5 * times**2, w))
        assert_allclose(traj.v, np.outer(times, w), atol=1e-12)
        assert_allclose(traj.a, np.outer(np.ones_like(times), w), atol=1e-10)

    def test_distance_needs_matching_grids(self):
        other = Trajectory.zeros(self.system, self.params.times[:-1])
        with self.assertRaises(MeshMismatchError):
            l2l2_distance(self.traj, other)
        self.assertEqual(l2l2_distance(self.traj, self.traj), 0.0)


class TrajectoryCsvTests(SimpleTestCase):
    def test_columns_and_rows(self):
        system = assemble(dirichlet_square(0.25))
        params = WaveParams(c=1.0, nu=0.2, T=0.5, dt=0.1)
        traj = implicit_time_integrate(system, params, u0=bump)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_trajectory_csv(traj, params, Path(tmp) / "trajectory.csv")
            frame = pd.read_csv(path)
            again = write_trajectory_csv(traj, params, Path(tmp) / "again.csv")
            self.assertEqual(path.read_bytes(), again.read_bytes())
        self.assertEqual(tuple(frame.columns), TRAJECTORY_COLUMNS)
        self.assertEqual(len(frame), params.steps + 1)
        assert_allclose(frame["energy_total"], energy_history(traj, params), rtol=1e-15)
