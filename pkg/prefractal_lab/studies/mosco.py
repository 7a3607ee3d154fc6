"""Discrete Westervelt functional F_m[u, phi] and its test trajectories."""
import logging

import numpy as np

from prefractal_lab.exceptions import MeshMismatchError
from prefractal_lab.fem.solvers import solve_eigen
from prefractal_lab.wave.trajectory import Trajectory, sample_forcing, trapezoid_weights

from .levels import level_solution
from .reports import ConvergenceReport, Verdict

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-8

TIME_PROFILES = {
    "1": lambda t: np.ones_like(t),
    "t": lambda t: t,
    "sin t": np.sin,
}


def _test_samples(system, traj, phi):
    samples = phi.u if isinstance(phi, Trajectory) else np.asarray(phi, dtype=float)
    if isinstance(phi, Trajectory) and not phi.system.mesh.same_as(system.mesh):
        raise MeshMismatchError("test trajectory lives on a different mesh")
    if samples.shape != traj.u.shape:
        raise MeshMismatchError(f"test samples of shape {samples.shape}, expected {traj.u.shape}")
    return samples


def residual_terms(system, traj, phi, params, f=None):
    """Time integrals of every term of F_m[u, phi], keyed by name.

    ``system`` carries ``a`` and the level weight ``sigma_m`` in its Robin
    matrix; the source enters with a minus sign so that a solution makes the
    sum vanish.
    """
    if not traj.system.mesh.same_as(system.mesh):
        raise MeshMismatchError("trajectory lives on a different mesh")
    phi = _test_samples(system, traj, phi)
    wave, alpha, a = params.wave, params.alpha, system.a
    w = trapezoid_weights(traj.times)
    forcing = sample_forcing(system, f, traj.times)

    def integral(matrix, samples):
        return float(w @ np.einsum("ti,ti->t", phi, (matrix @ samples.T).T))

    return {
        "inertia": integral(system.M, traj.a),
        "stiffness": wave.c**2 * integral(system.A, traj.u),
        "damping": wave.nu * integral(system.A, traj.v),
        "robin": wave.c**2 * a * integral(system.R, traj.u),
        "robin_damping": wave.nu * a * integral(system.R, traj.v),
        "nonlinear_acceleration": -alpha * integral(system.M, traj.u * traj.a),
        "nonlinear_velocity": -alpha * integral(system.M, traj.v * traj.v),
        "source": -integral(system.M, forcing),
    }


def mosco_residual(system, traj, phi, params, f=None):
    return float(sum(residual_terms(system, traj, phi, params, f).values()))


def residual_scale(system, traj, phi, params, f=None):
    """Sum of the magnitudes of the residual terms."""
    return float(sum(abs(v) for v in residual_terms(system, traj, phi, params, f).values()))


def probe_trajectories(system, times, modes=5):
    """Eigenfunction times {1, t, sin t}; every sample vanishes on Dirichlet nodes."""
    basis = solve_eigen(system, modes)
    times = np.asarray(times, dtype=float)
    trajectories = []
    for k in range(basis.count):
        for profile in TIME_PROFILES.values():
            samples = np.outer(profile(times), basis.vectors[:, k])
            trajectories.append(Trajectory.from_samples(system, times, samples))
    return trajectories


def mosco_study(study, modes=5):
    """Largest relative residual |F_m[u_m, phi]| / scale of each level's solution over its probes."""
    rows = []
    for index, level in enumerate(study.levels):
        mesh, params, system, traj, _ = level_solution(study, index)
        relative = []
        for phi in probe_trajectories(system, traj.times, modes):
            scale = residual_scale(system, traj, phi, params)
            residual = mosco_residual(system, traj, phi, params)
            relative.append(abs(residual) / scale if scale > 0.0 else 0.0)
        rows.append(
            {
                "level": level,
                "n_nodes": mesh.n_nodes,
                "probes": len(relative),
                "max_relative_residual": max(relative),
            }
        )
        logger.info("level %d: largest relative residual %.3e", level, max(relative))
    values = [row["max_relative_residual"] for row in rows]
    verdict = Verdict(
        rule=f"relative residual at most {RESIDUAL_TOL:g} against every probe trajectory",
        passed=all(v <= RESIDUAL_TOL for v in values),
        values=tuple(values),
    )
    return ConvergenceReport(
        study="mosco",
        rows=rows,
        verdicts=[verdict],
        notes={"modes": modes, "time_profiles": ", ".join(TIME_PROFILES)},
        plot_columns=("max_relative_residual",),
    )
