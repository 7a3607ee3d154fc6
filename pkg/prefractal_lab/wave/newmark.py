"""Implicit trapezoidal (Newmark beta = 1/4, gamma = 1/2) time stepping."""
import logging

import numpy as np

from .trajectory import Trajectory, sample_forcing

logger = logging.getLogger(__name__)

STOP_ENERGY_FRACTION = 1e-12


class NewmarkIntegrator:
    """Steps M a + nu S v + c^2 S u = M f on the free dofs.

    The acceleration-form operator ``M + (nu dt/2 + c^2 dt^2/4) S`` is
    factorized once and shared by every run.
    """

    def __init__(self, system, params):
        self.system = system
        self.params = params.require_damping()
        dt, c2, nu = params.dt, params.c**2, params.nu
        self.lu = system.operator_lu(1.0, nu * dt / 2.0 + c2 * dt * dt / 4.0)

    def initial_acceleration(self, u0, v0, f0):
        """M a0 = M f(0) - nu S v0 - c^2 S u0."""
        system, p = self.system, self.params
        rhs = system.M @ f0 - p.nu * (system.S @ v0) - p.c**2 * (system.S @ u0)
        return system.extend(system.M_lu.solve(rhs[system.free]))

    def run(self, u0=None, u1=None, f=None, early_stop=False):
        system, p = self.system, self.params
        times = p.times
        forcing = sample_forcing(system, f, times)
        n_t, n = len(times), system.mesh.n_nodes
        u = np.zeros((n_t, n))
        v = np.zeros((n_t, n))
        a = np.zeros((n_t, n))
        u[0] = system.field(u0).values
        v[0] = system.field(u1).values
        a[0] = self.initial_acceleration(u[0], v[0], forcing[0])
        dt, c2, nu = p.dt, p.c**2, p.nu
        free = system.free
        energy0 = None
        last = n_t - 1
        for k in range(n_t - 1):
            u_pred = u[k] + dt * v[k] + 0.25 * dt * dt * a[k]
            v_pred = v[k] + 0.5 * dt * a[k]
            rhs = system.M @ forcing[k + 1] - nu * (system.S @ v_pred) - c2 * (system.S @ u_pred)
            a[k + 1, free] = self.lu.solve(rhs[free])
            u[k + 1] = u_pred + 0.25 * dt * dt * a[k + 1]
            v[k + 1] = v_pred + 0.5 * dt * a[k + 1]
            if early_stop:
                energy = 0.5 * v[k + 1] @ (system.M @ v[k + 1]) + 0.5 * c2 * u[k + 1] @ (system.S @ u[k + 1])
                if energy0 is None:
                    energy0 = 0.5 * v[0] @ (system.M @ v[0]) + 0.5 * c2 * u[0] @ (system.S @ u[0])
                if energy <= STOP_ENERGY_FRACTION * energy0 and not forcing[k + 1 :].any():
                    last = k + 1
                    logger.info("energy below %.0e E(0) at t=%.6g; stopping", STOP_ENERGY_FRACTION, times[last])
                    break
        logger.debug("Newmark: %d steps on %d free dofs", last, free.size)
        return Trajectory(
            system=system,
            times=times[: last + 1],
            u=u[: last + 1],
            v=v[: last + 1],
            a=a[: last + 1],
        )


def implicit_time_integrate(system, params, u0=None, u1=None, f=None, early_stop=False):
    """Trapezoidal trajectory of the strongly damped wave equation."""
    return NewmarkIntegrator(system, params).run(u0, u1, f, early_stop=early_stop)
