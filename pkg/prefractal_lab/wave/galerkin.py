"""Spectral Galerkin solver: exact per-mode propagation of the damped oscillator."""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from prefractal_lab.exceptions import SolverError

from .trajectory import Trajectory, sample_forcing

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GalerkinModeState:
    """Coefficients d_k(t) with first and second derivatives, shape ``(n_t, modes)``."""

    eigenvalues: np.ndarray
    d: np.ndarray
    d_t: np.ndarray
    d_tt: np.ndarray


def propagate_modes(eigenvalues, params, d0, d1, forcing, times):
    """Solve d'' + nu lam d' + c^2 lam d = F_k(t) for every mode.

    ``forcing`` holds F_k at the sample times, shape ``(n_t, modes)``; it is
    taken piecewise linear between samples, which the augmented exponential
    integrates exactly.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    c2 = params.c**2
    if np.any(c2 * lam <= 0.0) or np.any(params.nu * lam < 0.0):
        raise SolverError("Galerkin modes need c^2 lambda > 0 and nu lambda >= 0")
    n_t, modes = len(times), lam.shape[0]
    dt = float(times[1] - times[0]) if n_t > 1 else 0.0
    d = np.zeros((n_t, modes))
    d_t = np.zeros((n_t, modes))
    d[0], d_t[0] = d0, d1
    for k in range(modes):
        generator = np.array(
            [
                [0.0, 1.0, 0.0, 0.0],
                [-c2 * lam[k], -params.nu * lam[k], 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 0.0, 0.0, 0.0],
            ]
        )
        step = expm(generator * dt)
        for n in range(n_t - 1):
            slope = (forcing[n + 1, k] - forcing[n, k]) / dt
            state = step @ np.array([d[n, k], d_t[n, k], forcing[n, k], slope])
            d[n + 1, k], d_t[n + 1, k] = state[0], state[1]
    d_tt = forcing - params.nu * lam * d_t - c2 * lam * d
    return GalerkinModeState(eigenvalues=lam, d=d, d_t=d_t, d_tt=d_tt)


def spectral_galerkin_solve(basis, params, u0=None, u1=None, f=None, modes=None):
    """Trajectory sum_k d_k(t) w_k built from the first ``modes`` eigenpairs.

    The initial data enter through their M-projections onto the basis.
    """
    system = basis.system
    modes = basis.count if modes is None else modes
    if not 1 <= modes <= basis.count:
        raise SolverError(f"mode count must lie in 1..{basis.count}, got {modes}")
    W = basis.vectors[:, :modes]
    MW = system.M @ W
    times = params.times
    u0 = system.field(u0).values
    u1 = system.field(u1).values
    forcing = sample_forcing(system, f, times) @ MW
    state = propagate_modes(basis.eigenvalues[:modes], params, u0 @ MW, u1 @ MW, forcing, times)
    logger.info("spectral Galerkin: %d modes, %d steps", modes, params.steps)
    return Trajectory(
        system=system,
        times=times,
        u=state.d @ W.T,
        v=state.d_t @ W.T,
        a=state.d_tt @ W.T,
    )
