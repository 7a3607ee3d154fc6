"""P1 assembly of the mass, stiffness and Robin boundary-mass matrices."""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from prefractal_lab.exceptions import MeshMismatchError, SingularSystemError, SolverError
from prefractal_lab.meshing.domains import BoundaryTag

logger = logging.getLogger(__name__)

REFERENCE_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
EDGE_MASS = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0


def element_matrices(nodes, triangles):
    """Per-triangle stiffness and mass blocks, each ``(t, 3, 3)``."""
    p = nodes[triangles]
    x, y = p[:, :, 0], p[:, :, 1]
    # gradient of the barycentric of vertex i is (y_j - y_k, x_k - x_j) / (2 area)
    b = np.roll(y, -1, axis=1) - np.roll(y, 1, axis=1)
    c = np.roll(x, 1, axis=1) - np.roll(x, -1, axis=1)
    area = 0.5 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    stiffness = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (
        4.0 * area[:, None, None]
    )
    mass = area[:, None, None] * REFERENCE_MASS[None, :, :]
    return stiffness, mass


def edge_mass_matrices(nodes, edges):
    lengths = np.linalg.norm(nodes[edges[:, 1]] - nodes[edges[:, 0]], axis=1)
    return lengths[:, None, None] * EDGE_MASS[None, :, :]


def _scatter(blocks, dofs, n):
    k = dofs.shape[1]
    rows = np.repeat(dofs, k, axis=1).ravel()
    cols = np.tile(dofs, (1, k)).ravel()
    return sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def nodal_values(mesh, f):
    """Nodal samples of ``f``: a callable ``f(x, y)``, a field, an array or ``None``."""
    if f is None:
        return np.zeros(mesh.n_nodes)
    if isinstance(f, DiscreteField):
        f.check(mesh)
        return f.values
    if callable(f):
        values = f(mesh.nodes[:, 0], mesh.nodes[:, 1])
        return np.broadcast_to(np.asarray(values, dtype=float), (mesh.n_nodes,)).copy()
    values = np.asarray(f, dtype=float)
    if values.shape != (mesh.n_nodes,):
        raise MeshMismatchError(
            f"nodal array of shape {values.shape} on a mesh with {mesh.n_nodes} nodes"
        )
    return values


@dataclass(frozen=True, eq=False)
class DiscreteField:
    """Nodal values on a mesh; zero on Dirichlet nodes when built by a system."""

    values: np.ndarray
    mesh: object

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise SolverError("discrete field has non-finite values")

    def check(self, mesh):
        if not self.mesh.same_as(mesh):
            raise MeshMismatchError("field lives on a different mesh")

    def __mul__(self, scalar):
        return DiscreteField(values=self.values * scalar, mesh=self.mesh)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class FemSystem:
    """Assembled V-form on a tagged mesh.

    ``R`` already carries the sigma weight, so ``S = A + a R``. Factorizations
    of the free-dof blocks are built once and reused.
    """

    mesh: object
    M: sp.csr_matrix
    A: sp.csr_matrix
    R: sp.csr_matrix
    a: float
    sigma_weight: float
    dirichlet: np.ndarray
    free: np.ndarray
    singular: bool = False

    @cached_property
    def S(self):
        return (self.A + self.a * self.R).tocsr()

    @property
    def n_free(self):
        return self.free.shape[0]

    def restrict(self, matrix):
        return matrix[self.free][:, self.free].tocsc()

    @cached_property
    def M_free(self):
        return self.restrict(self.M)

    @cached_property
    def S_free(self):
        return self.restrict(self.S)

    @cached_property
    def A_free(self):
        return self.restrict(self.A)

    def _factor(self, matrix, what):
        try:
            return splu(matrix)
        except RuntimeError as exc:
            raise SingularSystemError(f"{what} is singular on the free dofs: {exc}") from exc

    @cached_property
    def S_lu(self):
        if self.singular:
            raise SingularSystemError(
                "S = A + aR is singular: no Dirichlet boundary and a = 0 or no Robin edges"
            )
        return self._factor(self.S_free, "S = A + aR")

    @cached_property
    def M_lu(self):
        return self._factor(self.M_free, "mass matrix")

    def operator_lu(self, c0, c1):
        """Factorization of ``c0 M + c1 S`` on the free dofs."""
        matrix = (c0 * self.M + c1 * self.S).tocsr()
        return self._factor(self.restrict(matrix), "time-step operator")

    def extend(self, free_values):
        full = np.zeros(self.mesh.n_nodes)
        full[self.free] = free_values
        return full

    def field(self, f):
        """Field of ``f`` with its Dirichlet values cleared."""
        values = nodal_values(self.mesh, f).copy()
        values[self.dirichlet] = 0.0
        return DiscreteField(values=values, mesh=self.mesh)

    def inner(self, u, v, matrix=None):
        matrix = self.M if matrix is None else matrix
        return float(u @ (matrix @ v))


def assemble(mesh, a=0.0, sigma_weight=1.0):
    """Mass, stiffness and sigma-weighted Robin mass of a tagged mesh."""
    if a < 0.0:
        raise SolverError(f"robin coefficient must be non-negative, got {a!r}")
    n = mesh.n_nodes
    stiffness, mass = element_matrices(mesh.nodes, mesh.triangles)
    A = _scatter(stiffness, mesh.triangles, n)
    M = _scatter(mass, mesh.triangles, n)
    robin = mesh.edges_with_tag(BoundaryTag.ROBIN)
    R = sigma_weight * _scatter(edge_mass_matrices(mesh.nodes, robin), robin, n)
    dirichlet = mesh.boundary_nodes(BoundaryTag.DIRICHLET).astype(np.int64)
    free = np.setdiff1d(np.arange(n), dirichlet)
    singular = dirichlet.size == 0 and (a == 0.0 or robin.shape[0] == 0)
    if singular:
        logger.warning("no Dirichlet boundary and no Robin term: the V-norm degenerates")
    logger.debug(
        "assembled %d nodes (%d free), %d Robin edges, a=%g, sigma=%g",
        n,
        free.size,
        robin.shape[0],
        a,
        sigma_weight,
    )
    return FemSystem(
        mesh=mesh,
        M=M,
        A=A,
        R=R.tocsr(),
        a=float(a),
        sigma_weight=float(sigma_weight),
        dirichlet=dirichlet,
        free=free,
        singular=singular,
    )
