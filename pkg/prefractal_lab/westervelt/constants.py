"""Empirical estimates of the contraction constants B and C_nu."""
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from prefractal_lab.exceptions import ParameterError
from prefractal_lab.wave.newmark import NewmarkIntegrator
from prefractal_lab.wave.trajectory import x_norm, y_norm

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstantEstimate:
    """Sampled maxima; each is a lower bound of the true constant.

    ``r_star`` is ``math.inf`` when ``alpha == 0``.
    """

    B: float
    B1: float
    B2: float
    C_nu: float
    r_star: float
    alpha: float
    trials: int
    seed: int
    lower_bounds: bool = True

    def as_dict(self):
        return asdict(self)


def smallness_radius(B, C_nu, alpha):
    """r* = 1 / (8 B C_nu alpha), where Theta(r) = 8 B C_nu alpha r reaches one."""
    if alpha == 0.0:
        return math.inf
    return 1.0 / (8.0 * B * C_nu * alpha)


def random_sources(system, times, trials, rng):
    """``sin(omega t) g(x)`` with nodal uniform[-1, 1] profiles ``g`` vanishing on Dirichlet nodes."""
    T = float(times[-1])
    sources = []
    for _ in range(trials):
        g = rng.uniform(-1.0, 1.0, size=system.mesh.n_nodes)
        g[system.dirichlet] = 0.0
        omega = rng.uniform(math.pi / T, 2.0 * math.pi / T)
        sources.append(np.outer(np.sin(omega * times), g))
    return sources


def estimate_constants(system, params, trials, seed):
    """Sample C_nu from zero-data linear solves and B from products of those solutions."""
    if trials < 1:
        raise ParameterError(f"trials must be at least 1, got {trials}")
    rng = np.random.default_rng(seed)
    integrator = NewmarkIntegrator(system, params.wave)
    times = params.wave.times
    trajectories = []
    C_nu = 0.0
    for f in random_sources(system, times, trials, rng):
        traj = integrator.run(f=f)
        C_nu = max(C_nu, x_norm(traj) / y_norm(system, f, times))
        trajectories.append(traj)

    B1 = B2 = 0.0
    norms = [x_norm(traj) for traj in trajectories]
    for g, g_norm in zip(trajectories, norms):
        for b, b_norm in zip(trajectories, norms):
            scale = g_norm * b_norm
            B1 = max(B1, y_norm(system, g.u * b.a, times) / scale)
            B2 = max(B2, y_norm(system, g.v * b.v, times) / scale)
    B = max(B1, B2)
    r_star = smallness_radius(B, C_nu, params.alpha)
    logger.info(
        "constants over %d trials (seed %s): B=%.6g, C_nu=%.6g, r*=%.6g", trials, seed, B, C_nu, r_star
    )
    return ConstantEstimate(
        B=B, B1=B1, B2=B2, C_nu=C_nu, r_star=r_star, alpha=params.alpha, trials=trials, seed=seed
    )
