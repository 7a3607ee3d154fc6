"""Discrete norms of the V-form and empirical embedding constants."""
import logging
import math
from dataclasses import dataclass

import numpy as np

from prefractal_lab.exceptions import ParameterError

from .assembly import DiscreteField, element_matrices, nodal_values
from .solvers import solve_poisson

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NormSet:
    l2: float
    h1: float
    v_norm: float
    laplacian_l2: float
    robin: float


def _values(system, u):
    if isinstance(u, DiscreteField):
        u.check(system.mesh)
        return u.values
    return np.asarray(u, dtype=float)


def laplacian_l2(system, u):
    """sqrt(g' M g) with M g = S u on the free dofs (Riesz representative of -Lap u)."""
    u = _values(system, u)
    g = system.M_lu.solve((system.S @ u)[system.free])
    return math.sqrt(max(float(g @ (system.M_free @ g)), 0.0))


def laplacian_l2_many(system, columns):
    """laplacian_l2 of every column of a ``(n, k)`` array in one solve."""
    rhs = (system.S @ columns)[system.free]
    g = system.M_lu.solve(rhs)
    return np.sqrt(np.maximum(np.einsum("ik,ik->k", g, system.M_free @ g), 0.0))


def _quad(u, matrix):
    return max(float(u @ (matrix @ u)), 0.0)


def norms(system, u):
    u = _values(system, u)
    l2sq = _quad(u, system.M)
    return NormSet(
        l2=math.sqrt(l2sq),
        h1=math.sqrt(l2sq + _quad(u, system.A)),
        v_norm=math.sqrt(_quad(u, system.S)),
        laplacian_l2=laplacian_l2(system, u),
        robin=_quad(u, system.R),
    )


def h1_norm(mesh, u):
    """H1 norm of the nodal interpolant, assembled element by element."""
    stiffness, mass = element_matrices(mesh.nodes, mesh.triangles)
    local = np.asarray(u, dtype=float)[mesh.triangles]
    total = np.einsum("ti,tij,tj->", local, stiffness + mass, local)
    return math.sqrt(max(float(total), 0.0))


def l6_norm(mesh, u):
    """||u||_{L6} with the edge-midpoint rule on every triangle."""
    tris = mesh.triangles
    mids = 0.5 * (u[tris] + u[np.roll(tris, -1, axis=1)])
    integral = float((mesh.areas / 3.0 * np.sum(mids**6, axis=1)).sum())
    return integral ** (1.0 / 6.0)


# degree-5 rule on the reference triangle: barycentric points and weights
_QUAD_POINTS = np.array(
    [
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [0.059715871789770, 0.470142064105115, 0.470142064105115],
        [0.470142064105115, 0.059715871789770, 0.470142064105115],
        [0.470142064105115, 0.470142064105115, 0.059715871789770],
        [0.797426985353087, 0.101286507323456, 0.101286507323456],
        [0.101286507323456, 0.797426985353087, 0.101286507323456],
        [0.101286507323456, 0.101286507323456, 0.797426985353087],
    ]
)
_QUAD_WEIGHTS = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)


def l2_error(mesh, u, exact):
    """||u - exact||_{L2} for nodal ``u`` and a callable ``exact(x, y)``."""
    corners = mesh.nodes[mesh.triangles]
    points = np.einsum("qk,tkd->tqd", _QUAD_POINTS, corners)
    uh = np.einsum("qk,tk->tq", _QUAD_POINTS, u[mesh.triangles])
    diff = uh - exact(points[..., 0], points[..., 1])
    return math.sqrt(float((mesh.areas[:, None] * _QUAD_WEIGHTS[None, :] * diff**2).sum()))


@dataclass(frozen=True)
class EmbeddingReport:
    l6_ratio_max: float
    linf_ratio_max: float
    trials: int
    seed: int


def embedding_ratios(system, trials, seed, sources=None):
    """Maxima of ||u||_{L6}/||grad u||_{L2} and ||u||_{Linf}/||f||_{L2} over Poisson solves.

    Sources are nodal i.i.d. uniform[-1, 1] draws, M-normalized, unless
    ``sources`` supplies them (callables, fields or nodal arrays).
    """
    if trials < 1:
        raise ParameterError(f"trials must be at least 1, got {trials}")
    rng = np.random.default_rng(seed)
    l6_max = linf_max = 0.0
    for k in range(trials):
        if sources is not None:
            f = nodal_values(system.mesh, sources[k % len(sources)])
        else:
            f = rng.uniform(-1.0, 1.0, size=system.mesh.n_nodes)
        f = f / math.sqrt(_quad(f, system.M))
        u = solve_poisson(system, f).values
        grad = math.sqrt(_quad(u, system.A))
        if grad > 0.0:
            l6_max = max(l6_max, l6_norm(system.mesh, u) / grad)
        linf_max = max(linf_max, float(np.abs(u).max()))
    logger.info("embedding ratios: L6 %.6g, Linf %.6g (seed %s)", l6_max, linf_max, seed)
    return EmbeddingReport(l6_ratio_max=l6_max, linf_ratio_max=linf_max, trials=trials, seed=seed)
