"""Space-time fields and their discrete X and Y norms."""
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from prefractal_lab.exceptions import MeshMismatchError
from prefractal_lab.fem.assembly import DiscreteField, nodal_values
from prefractal_lab.fem.norms import laplacian_l2_many


def trapezoid_weights(times):
    dt = np.diff(times)
    weights = np.zeros_like(times)
    weights[:-1] += 0.5 * dt
    weights[1:] += 0.5 * dt
    return weights


def _rows(matrix, samples):
    """sqrt(x' A x) for every row x of ``samples``."""
    return np.sqrt(np.maximum(np.einsum("ti,ti->t", samples, (matrix @ samples.T).T), 0.0))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples ``u``, ``v = u_t`` and ``a = u_tt`` on a uniform time grid.

    Every sample array has shape ``(len(times), n_nodes)``.
    """

    system: object
    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        shape = (self.times.shape[0], self.system.mesh.n_nodes)
        for name in ("u", "v", "a"):
            if getattr(self, name).shape != shape:
                raise MeshMismatchError(f"trajectory {name} has shape {getattr(self, name).shape}, expected {shape}")
            getattr(self, name).setflags(write=False)

    @classmethod
    def from_samples(cls, system, times, u):
        """Trajectory whose velocity and acceleration are second-order differences of ``u``."""
        u = np.asarray(u, dtype=float)
        v = np.gradient(u, times, axis=0, edge_order=2)
        a = np.gradient(v, times, axis=0, edge_order=2)
        return cls(system=system, times=np.asarray(times, dtype=float), u=u, v=v, a=a)

    @classmethod
    def zeros(cls, system, times):
        shape = (len(times), system.mesh.n_nodes)
        return cls(system, np.asarray(times, dtype=float), np.zeros(shape), np.zeros(shape), np.zeros(shape))

    @property
    def n_steps(self):
        return self.times.shape[0] - 1

    @property
    def dt(self):
        return float(self.times[1] - self.times[0]) if self.n_steps else 0.0

    def field(self, k, name="u"):
        return DiscreteField(values=np.array(getattr(self, name)[k]), mesh=self.system.mesh)

    def _check(self, other):
        if not self.system.mesh.same_as(other.system.mesh) or not np.array_equal(self.times, other.times):
            raise MeshMismatchError("trajectories live on different meshes or time grids")

    def __add__(self, other):
        self._check(other)
        return Trajectory(self.system, self.times, self.u + other.u, self.v + other.v, self.a + other.a)

    def __sub__(self, other):
        self._check(other)
        return Trajectory(self.system, self.times, self.u - other.u, self.v - other.v, self.a - other.a)

    def scaled(self, factor):
        return Trajectory(self.system, self.times, factor * self.u, factor * self.v, factor * self.a)

    @cached_property
    def l2_u(self):
        return _rows(self.system.M, self.u)

    @cached_property
    def l2_v(self):
        return _rows(self.system.M, self.v)

    @cached_property
    def l2_a(self):
        return _rows(self.system.M, self.a)

    @cached_property
    def v_norm_u(self):
        return _rows(self.system.S, self.u)

    @cached_property
    def v_norm_v(self):
        return _rows(self.system.S, self.v)

    @cached_property
    def laplacian_u(self):
        return laplacian_l2_many(self.system, self.u.T)

    @cached_property
    def laplacian_v(self):
        return laplacian_l2_many(self.system, self.v.T)


def x_norm(traj):
    """Unweighted sum of the H1-in-time laplacian and H2-in-time L2 pieces."""
    w = trapezoid_weights(traj.times)
    total = (
        traj.laplacian_u**2
        + traj.laplacian_v**2
        + traj.l2_u**2
        + traj.l2_v**2
        + traj.l2_a**2
    )
    return math.sqrt(float(w @ total))


def y_norm(system, samples, times):
    """l2-in-time (trapezoid) of the L2-in-space norms of ``samples``."""
    return math.sqrt(float(trapezoid_weights(times) @ _rows(system.M, samples) ** 2))


def l2l2_distance(a, b):
    a._check(b)
    return y_norm(a.system, a.u - b.u, a.times)


def sample_forcing(system, f, times):
    """Nodal forcing samples ``(len(times), n_nodes)``.

    ``f`` may be ``None``, a ``(len(times), n)`` array, one spatial field
    held constant in time, or a callable ``f(t, x, y)``.
    """
    n = system.mesh.n_nodes
    shape = (len(times), n)
    if f is None:
        return np.zeros(shape)
    if isinstance(f, np.ndarray) and f.ndim == 2:
        if f.shape != shape:
            raise MeshMismatchError(f"forcing samples of shape {f.shape}, expected {shape}")
        return np.asarray(f, dtype=float)
    if callable(f) and not isinstance(f, DiscreteField):
        x, y = system.mesh.nodes[:, 0], system.mesh.nodes[:, 1]
        return np.stack(
            [np.broadcast_to(np.asarray(f(t, x, y), dtype=float), (n,)) for t in times]
        )
    return np.tile(nodal_values(system.mesh, f), (len(times), 1))
