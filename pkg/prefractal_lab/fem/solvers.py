"""Poisson mixed problem, its eigenproblem and the discrete Poincare constant."""
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from django.conf import settings
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from prefractal_lab.exceptions import ConvergenceError, SingularSystemError, SolverError

from .assembly import DiscreteField, nodal_values

logger = logging.getLogger(__name__)

DENSE_EIGEN_LIMIT = 600


def solve_poisson(system, f, rtol=None):
    """u in V_h with (u, v)_V = (f, v)_{L2} for every v in V_h."""
    rtol = settings.LAB_SOLVER_RTOL if rtol is None else rtol
    rhs = (system.M @ nodal_values(system.mesh, f))[system.free]
    u_free = system.S_lu.solve(rhs)
    residual = float(np.linalg.norm(system.S_free @ u_free - rhs))
    scale = float(np.linalg.norm(rhs))
    if not np.all(np.isfinite(u_free)) or residual > rtol * scale:
        raise SingularSystemError(
            f"Poisson residual {residual:.3e} exceeds {rtol:g} x |rhs| = {rtol * scale:.3e}"
        )
    return DiscreteField(values=system.extend(u_free), mesh=system.mesh)


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Ascending eigenpairs; ``vectors[:, k]`` is M-normalized and zero on Dirichlet nodes."""

    eigenvalues: np.ndarray
    vectors: np.ndarray
    system: object

    @property
    def count(self):
        return self.eigenvalues.shape[0]

    def mode(self, k):
        return DiscreteField(values=self.vectors[:, k], mesh=self.system.mesh)


def _smallest_pairs(stiff, mass, count, maxiter):
    n = stiff.shape[0]
    if n <= DENSE_EIGEN_LIMIT or count >= n - 1:
        values, vectors = scipy.linalg.eigh(
            stiff.toarray(), mass.toarray(), subset_by_index=[0, count - 1]
        )
        return values, vectors
    try:
        values, vectors = eigsh(stiff, k=count, M=mass, sigma=0.0, which="LM", maxiter=maxiter)
    except ArpackNoConvergence as exc:
        report = {
            "requested": count,
            "converged": len(exc.eigenvalues),
            "eigenvalues": [float(v) for v in exc.eigenvalues],
            "maxiter": maxiter,
        }
        raise ConvergenceError(
            f"shift-invert iteration found {len(exc.eigenvalues)} of {count} eigenpairs",
            report=report,
        ) from exc
    # Rayleigh-Ritz on the returned subspace restores exact M-orthonormality
    small_stiff = vectors.T @ (stiff @ vectors)
    small_mass = vectors.T @ (mass @ vectors)
    values, rotation = scipy.linalg.eigh(
        0.5 * (small_stiff + small_stiff.T), 0.5 * (small_mass + small_mass.T)
    )
    return values, vectors @ rotation


def solve_eigen(system, count, maxiter=None):
    """The ``count`` smallest eigenpairs of S w = lambda M w on the free dofs."""
    if not 1 <= count <= system.n_free:
        raise SolverError(f"eigenpair count must lie in 1..{system.n_free}, got {count}")
    if system.singular:
        raise SingularSystemError("S is singular: no Dirichlet boundary and no Robin term")
    maxiter = settings.LAB_EIGEN_MAXITER if maxiter is None else maxiter
    values, vectors = _smallest_pairs(system.S_free, system.M_free, count, maxiter)
    order = np.argsort(values)
    values, vectors = values[order], vectors[:, order]
    norms = np.sqrt(np.einsum("ik,ik->k", vectors, system.M_free @ vectors))
    vectors = vectors / norms
    # fix the sign so that results are reproducible
    signs = np.sign(vectors[np.argmax(np.abs(vectors), axis=0), np.arange(count)])
    vectors = vectors * np.where(signs == 0.0, 1.0, signs)
    full = np.zeros((system.mesh.n_nodes, count))
    full[system.free] = vectors
    if values[0] <= 0.0:
        raise SingularSystemError(f"smallest eigenvalue {values[0]:.3e} is not positive")
    logger.info("eigenvalues: %s", ", ".join(f"{v:.8g}" for v in values))
    return SpectralBasis(eigenvalues=values, vectors=full, system=system)


def poincare_constant(system):
    """1 / sqrt(lambda_1) of A w = lambda M w on the Dirichlet-free dofs.

    The Robin term is left out: this is the sharp constant C in
    ||u||_{L2} <= C ||grad u||_{L2} over the discrete space vanishing on
    the Dirichlet boundary.
    """
    if system.dirichlet.size == 0:
        raise SolverError("the Poincare constant needs a non-empty Dirichlet boundary")
    values, _ = _smallest_pairs(system.A_free, system.M_free, 1, settings.LAB_EIGEN_MAXITER)
    lam = float(np.min(values))
    if lam <= 0.0:
        raise SingularSystemError(f"gradient Rayleigh quotient {lam:.3e} is not positive")
    return 1.0 / math.sqrt(lam)
