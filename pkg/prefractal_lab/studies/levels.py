"""One level of the solution study and its transfer to the background grid on Omega*."""
import logging
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from matplotlib import tri

from prefractal_lab.exceptions import ArtifactError, SolverError
from prefractal_lab.fem.solvers import solve_poisson
from prefractal_lab.wave.io import write_trajectory_csv
from prefractal_lab.wave.trajectory import trapezoid_weights
from prefractal_lab.westervelt.picard import picard_solve

from .config import field_by_name

logger = logging.getLogger(__name__)


def background_grid(box, resolution):
    """Cell centres of a ``resolution`` x ``resolution`` grid on ``box`` and the cell area."""
    xmin, ymin, xmax, ymax = box
    dx, dy = (xmax - xmin) / resolution, (ymax - ymin) / resolution
    xs = xmin + dx * (np.arange(resolution) + 0.5)
    ys = ymin + dy * (np.arange(resolution) + 0.5)
    gx, gy = np.meshgrid(xs, ys)
    return gx.ravel(), gy.ravel(), dx * dy


def transfer_matrix(nodes, triangles, gx, gy):
    """P1 interpolation onto grid points; rows of points outside the mesh are empty (zero extension)."""
    triangulation = tri.Triangulation(nodes[:, 0], nodes[:, 1], triangles)
    found = triangulation.get_trifinder()(gx, gy)
    inside = np.flatnonzero(found >= 0)
    corners = triangles[found[inside]]
    p = nodes[corners]
    px, py = gx[inside], gy[inside]
    x0, y0 = p[:, 0, 0], p[:, 0, 1]
    det = (p[:, 1, 0] - x0) * (p[:, 2, 1] - y0) - (p[:, 2, 0] - x0) * (p[:, 1, 1] - y0)
    l1 = ((px - x0) * (p[:, 2, 1] - y0) - (p[:, 2, 0] - x0) * (py - y0)) / det
    l2 = ((p[:, 1, 0] - x0) * (py - y0) - (px - x0) * (p[:, 1, 1] - y0)) / det
    weights = np.stack([1.0 - l1 - l2, l1, l2], axis=1)
    rows = np.repeat(inside, 3)
    return sp.csr_matrix(
        (weights.ravel(), (rows, corners.ravel())), shape=(gx.shape[0], nodes.shape[0])
    )


def level_path(work_dir, index):
    return Path(work_dir) / f"level_{index:02d}.npz"


def level_solution(study, index):
    """Mesh, parameters, system, Picard trajectory and report of study level ``index``.

    Solver failures are re-raised with the level in their message.
    """
    level = study.levels[index]
    try:
        mesh = study.mesh(index)
        params = study.westervelt(study.geometry_level(index))
        system = params.system(mesh)
        u0 = study.amplitude * solve_poisson(system, field_by_name(study.source)).values
        traj, report = picard_solve(system, params, u0=u0)
    except SolverError as exc:
        exc.level = level
        exc.args = (f"level {level}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
        raise
    return mesh, params, system, traj, report


def solve_level(study, index, work_dir):
    """Westervelt solve of study level ``index``.

    Samples go to ``level_<index>.npz`` and the norm history to
    ``level_<index>.csv``. The initial displacement solves the level's
    Poisson problem with the shared source, scaled by the study amplitude.
    """
    level = study.levels[index]
    mesh, params, system, traj, report = level_solution(study, index)
    w = trapezoid_weights(traj.times)
    drift = system.a * float(w @ np.einsum("ti,ti->t", traj.u, (system.R @ traj.u.T).T))
    path = level_path(work_dir, index)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, times=traj.times, nodes=mesh.nodes, triangles=mesh.triangles, u=traj.u)
    history = write_trajectory_csv(traj, params.wave, path.with_suffix(".csv"))
    logger.info("level %d solved: %d nodes, %d Picard iterates", level, mesh.n_nodes, report.iterations)
    return {
        "index": index,
        "level": level,
        "geometry_level": study.geometry_level(index),
        "h_max": float(mesh.h_max),
        "n_nodes": int(mesh.n_nodes),
        "iterations": report.iterations,
        "converged": bool(report.converged),
        "sigma": float(params.sigma_weight),
        "drift": drift,
        "path": str(path),
        "trajectory": str(history),
    }


class LevelSamples:
    """Stored level solution with its grid transfer."""

    def __init__(self, path, gx, gy):
        path = Path(path)
        if not path.is_file():
            raise ArtifactError(f"missing level samples: expected file {path}", path=str(path))
        with np.load(path) as data:
            self.times = data["times"]
            self.u = data["u"]
            nodes, triangles = data["nodes"], data["triangles"]
        self.transfer = transfer_matrix(nodes, triangles, gx, gy)

    def grid(self, start, stop):
        """Grid samples of time steps ``start:stop``, shape ``(n_grid, stop - start)``."""
        return self.transfer @ self.u[start:stop].T


def grid_distance(first, second, cell_area, chunk=32):
    """||u_a - u_b||_{L2(0,T; L2(Omega*))} by the midpoint rule in space and trapezoid in time."""
    if not np.array_equal(first.times, second.times):
        raise ArtifactError("level samples use different time grids")
    w = trapezoid_weights(first.times)
    total = 0.0
    for start in range(0, w.shape[0], chunk):
        stop = min(start + chunk, w.shape[0])
        diff = first.grid(start, stop) - second.grid(start, stop)
        total += float(w[start:stop] @ np.einsum("gt,gt->t", diff, diff))
    return float(np.sqrt(cell_area * total))
