"""Energy bookkeeping and the empirical a-priori estimate of a trajectory."""
import logging
import math
from dataclasses import dataclass

import numpy as np

from prefractal_lab.fem.norms import laplacian_l2, norms

from .trajectory import _rows, sample_forcing, trapezoid_weights

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Energy:
    kinetic: float
    potential: float
    total: float


def energy(system, params, u, v):
    """kinetic = v'Mv/2, potential = c^2 u'Su/2 for nodal arrays or fields."""
    u = getattr(u, "values", u)
    v = getattr(v, "values", v)
    kinetic = 0.5 * float(v @ (system.M @ v))
    potential = 0.5 * params.c**2 * float(u @ (system.S @ u))
    return Energy(kinetic=kinetic, potential=potential, total=kinetic + potential)


def energy_history(traj, params):
    """Total energy at every sample of ``traj``."""
    return 0.5 * traj.l2_v**2 + 0.5 * params.c**2 * traj.v_norm_u**2


@dataclass(frozen=True)
class AprioriReport:
    """Both sides of the global estimate; ``ratio`` is ``None`` for zero data.

    lhs**2 = sup|Lap u|^2 + sup|u_t|_V^2 + int |Lap u_t|^2 + int |Lap u|^2
    rhs**2 = |Lap u0|^2 + |u1|_V^2 + int |f|_L2^2
    """

    lhs: float
    rhs: float
    ratio: float | None
    sup_laplacian_u: float
    sup_v_norm_v: float
    int_laplacian_v: float
    int_laplacian_u: float


def apriori_check(traj, u0=None, u1=None, f=None):
    system = traj.system
    w = trapezoid_weights(traj.times)
    sup_lap = float(traj.laplacian_u.max())
    sup_v = float(traj.v_norm_v.max())
    int_lap_v = float(w @ traj.laplacian_v**2)
    int_lap_u = float(w @ traj.laplacian_u**2)
    lhs = math.sqrt(sup_lap**2 + sup_v**2 + int_lap_v + int_lap_u)

    u0 = system.field(u0).values
    u1 = system.field(u1).values
    forcing = sample_forcing(system, f, traj.times)
    rhs = math.sqrt(
        laplacian_l2(system, u0) ** 2
        + norms(system, u1).v_norm ** 2
        + float(w @ _rows(system.M, forcing) ** 2)
    )
    ratio = lhs / rhs if rhs > 0.0 else None
    if ratio is None:
        logger.info("a-priori check: zero data, ratio not applicable")
    else:
        logger.info("a-priori check: lhs %.6g, rhs %.6g, ratio %.6g", lhs, rhs, ratio)
    return AprioriReport(
        lhs=lhs,
        rhs=rhs,
        ratio=ratio,
        sup_laplacian_u=sup_lap,
        sup_v_norm_v=sup_v,
        int_laplacian_v=int_lap_v,
        int_laplacian_u=int_lap_u,
    )


def is_dissipative(history, tol=1e-10):
    """True when no step raises the energy by more than ``tol * E(0)``."""
    history = np.asarray(history)
    if history.size < 2:
        return True
    return bool(np.all(np.diff(history) <= tol * history[0]))
