"""Time-local alternative: Newton iteration on each Newmark step of the Westervelt equation."""
import logging

import numpy as np
import scipy.sparse as sp
from django.conf import settings
from scipy.sparse.linalg import splu

from prefractal_lab.exceptions import ConvergenceError, DegeneracyError
from prefractal_lab.wave.trajectory import Trajectory, sample_forcing

logger = logging.getLogger(__name__)

BETA = 0.25
GAMMA = 0.5


class NewtonIntegrator:
    """Solves M((1 - alpha u) a) - alpha M v^2 + nu S v + c^2 S u = M f step by step.

    ``iterations`` holds the Newton count of every step of the last run.
    """

    def __init__(self, system, params, tol=None, max_iter=None, floor=None):
        self.system = system
        self.params = params
        params.wave.require_damping()
        self.tol = settings.LAB_NEWTON_TOL if tol is None else tol
        self.max_iter = settings.LAB_NEWTON_MAXITER if max_iter is None else max_iter
        self.floor = settings.LAB_DEGENERACY_FLOOR if floor is None else floor
        self.iterations = []

    def _coefficient(self, u, t):
        coefficient = 1.0 - self.params.alpha * u
        worst = float(np.abs(coefficient).min())
        if worst < self.floor:
            raise DegeneracyError(
                f"|1 - alpha u| = {worst:.3g} < {self.floor:g} at t={t:.6g}: outside the small-data regime"
            )
        return coefficient

    def _solve(self, matrix, rhs):
        system = self.system
        return splu(system.restrict(matrix.tocsr())).solve(rhs[system.free])

    def initial_acceleration(self, u0, v0, f0):
        """M((1 - alpha u0) a0) = M f0 + alpha M v0^2 - nu S v0 - c^2 S u0."""
        system, wave, alpha = self.system, self.params.wave, self.params.alpha
        coefficient = self._coefficient(u0, 0.0)
        rhs = system.M @ (f0 + alpha * v0 * v0) - wave.nu * (system.S @ v0) - wave.c**2 * (system.S @ u0)
        return system.extend(self._solve(system.M @ sp.diags(coefficient), rhs))

    def residual(self, u, v, a, f):
        system, wave, alpha = self.system, self.params.wave, self.params.alpha
        return (
            system.M @ ((1.0 - alpha * u) * a - alpha * v * v - f)
            + wave.nu * (system.S @ v)
            + wave.c**2 * (system.S @ u)
        )

    def step(self, u, v, a, f_next, t_next):
        """Newmark step from ``(u, v, a)``; returns the new state and the Newton count."""
        system, wave, alpha = self.system, self.params.wave, self.params.alpha
        dt = wave.dt
        u_pred = u + dt * v + (0.5 - BETA) * dt * dt * a
        v_pred = v + (1.0 - GAMMA) * dt * a
        stiffness = wave.nu * GAMMA * dt + wave.c**2 * BETA * dt * dt
        guess = a.copy()
        for count in range(1, self.max_iter + 1):
            u_new = u_pred + BETA * dt * dt * guess
            v_new = v_pred + GAMMA * dt * guess
            coefficient = self._coefficient(u_new, t_next)
            diagonal = coefficient - alpha * BETA * dt * dt * guess - 2.0 * alpha * GAMMA * dt * v_new
            jacobian = system.M @ sp.diags(diagonal) + stiffness * system.S
            residual = self.residual(u_new, v_new, guess, f_next)
            delta = system.extend(self._solve(jacobian, -residual))
            guess = guess + delta
            if np.abs(delta).max() <= self.tol * max(1.0, float(np.abs(guess).max())):
                break
        else:
            raise ConvergenceError(
                f"Newton did not converge in {self.max_iter} iterations at t={t_next:.6g}",
                report={"t": t_next, "max_iter": self.max_iter, "last_update": float(np.abs(delta).max())},
            )
        u_new = u_pred + BETA * dt * dt * guess
        v_new = v_pred + GAMMA * dt * guess
        self._coefficient(u_new, t_next)
        return u_new, v_new, guess, count

    def run(self, u0=None, u1=None, f=None):
        system = self.system
        times = self.params.wave.times
        forcing = sample_forcing(system, f, times)
        n_t, n = len(times), system.mesh.n_nodes
        u = np.zeros((n_t, n))
        v = np.zeros((n_t, n))
        a = np.zeros((n_t, n))
        u[0] = system.field(u0).values
        v[0] = system.field(u1).values
        a[0] = self.initial_acceleration(u[0], v[0], forcing[0])
        self.iterations = []
        for k in range(n_t - 1):
            u[k + 1], v[k + 1], a[k + 1], count = self.step(u[k], v[k], a[k], forcing[k + 1], times[k + 1])
            self.iterations.append(count)
        logger.info(
            "Newton stepping: %d steps, at most %d iterations per step",
            n_t - 1,
            max(self.iterations, default=0),
        )
        return Trajectory(system=system, times=times, u=u, v=v, a=a)


def newton_step_solve(system, params, u0=None, u1=None, f=None, tol=None):
    return NewtonIntegrator(system, params, tol=tol).run(u0, u1, f)
