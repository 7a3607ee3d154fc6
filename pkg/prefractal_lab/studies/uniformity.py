"""Level-uniformity diagnostics: weighted traces, measure density and Poincare constants."""
import logging

import numpy as np

from prefractal_lab.fem.assembly import assemble
from prefractal_lab.fem.norms import h1_norm
from prefractal_lab.fem.solvers import poincare_constant
from prefractal_lab.geometry.curves import generate_prefractal, measure_density_ratio, random_samples
from prefractal_lab.meshing.domains import BoundarySpec, build_domain
from prefractal_lab.meshing.mesher import triangulate

from .reports import ConvergenceReport, bounded_spread
from .trace import segment_integrals

logger = logging.getLogger(__name__)

BACKGROUND_CELLS = 32
POINCARE_SPREAD = 2.0


def box_mesh(box, cells=BACKGROUND_CELLS):
    xmin, ymin, xmax, ymax = box
    vertices = ((xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax))
    spec = BoundarySpec(tags=("neumann",) * 4, prefractal_edge=None)
    return triangulate(build_domain(vertices, spec), min(xmax - xmin, ymax - ymin) / cells)


def random_polynomial_fields(count, seed, scale=0.15):
    """``1 + sum a_ij x^i y^j`` over degree <= 2 with ``|a_ij| <= scale``; bounded away from 0 on [-1, 1]^2."""
    rng = np.random.default_rng(seed)
    powers = ((1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
    fields = []
    for _ in range(count):
        coefficients = rng.uniform(-scale, scale, size=len(powers))

        def field(x, y, coefficients=coefficients):
            x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
            value = np.ones(np.broadcast(x, y).shape)
            for c, (i, j) in zip(coefficients, powers):
                value = value + c * x**i * y**j
            return value

        fields.append(field)
    return fields


def uniform_trace_ratio(study, u, name="u"):
    """sigma_m ||Tr u||^2_{L2(K_m)} / ||u||^2_{H1(Omega*)} per level."""
    mesh = box_mesh(study.omega_star)
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    norm_sq = h1_norm(mesh, np.broadcast_to(u(x, y), x.shape)) ** 2
    rows = []
    for m in study.levels:
        curve = generate_prefractal(study.system_ifs, m)
        trace_sq = curve.sigma * float(segment_integrals(curve.points, lambda px, py: u(px, py) ** 2, order=3).sum())
        rows.append({"level": m, "sigma": curve.sigma, "trace_sq": trace_sq, "ratio": trace_sq / norm_sq})
    verdict = bounded_spread(
        "weighted trace ratio bounded uniformly in m", [row["ratio"] for row in rows], study.threshold
    )
    return ConvergenceReport(
        study="trace-uniformity",
        rows=rows,
        verdicts=[verdict],
        notes={"field": name, "omega_star": study.omega_star, "h1_norm_sq": repr(norm_sq)},
        plot_columns=("ratio",),
    )


def measure_uniformity_study(study, samples=None, seed=None):
    """Largest measure density ratio per level over one shared set of balls."""
    samples = study.samples if samples is None else samples
    seed = study.seed if seed is None else seed
    finest = generate_prefractal(study.system_ifs, max(study.levels))
    balls = random_samples(finest, samples, np.random.default_rng(seed))
    rows = []
    for m in study.levels:
        curve = generate_prefractal(study.system_ifs, m)
        ratios = [sample.ratio for sample in measure_density_ratio(curve, balls)]
        rows.append({"level": m, "sigma": curve.sigma, "density_ratio_max": max(ratios)})
    verdict = bounded_spread(
        "measure density ratio bounded uniformly in m", [row["density_ratio_max"] for row in rows], study.threshold
    )
    return ConvergenceReport(
        study="measure-uniformity",
        rows=rows,
        verdicts=[verdict],
        notes={"samples": samples, "seed": seed},
        plot_columns=("density_ratio_max",),
    )


def poincare_uniformity_study(study, threshold=POINCARE_SPREAD):
    rows = []
    for index, m in enumerate(study.levels):
        mesh = study.mesh(index)
        constant = poincare_constant(assemble(mesh, a=study.a, sigma_weight=study.sigma_weight(m)))
        rows.append({"level": m, "h_max": mesh.h_max, "n_nodes": mesh.n_nodes, "poincare": constant})
        logger.info("Poincare constant at level %d: %.6g", m, constant)
    verdict = bounded_spread(
        "Poincare constants within a fixed factor across levels", [row["poincare"] for row in rows], threshold
    )
    return ConvergenceReport(
        study="poincare",
        rows=rows,
        verdicts=[verdict],
        notes={"threshold": threshold},
        plot_columns=("poincare",),
    )
