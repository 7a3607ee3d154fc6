"""sigma_m-weighted trace integrals on K_m against the self-similar measure oracle."""
import logging
import math

import numpy as np

from prefractal_lab.exceptions import ParameterError
from prefractal_lab.geometry.curves import generate_prefractal
from prefractal_lab.geometry.ifs import word_maps

from .reports import ConvergenceReport, Verdict, strictly_decreasing

logger = logging.getLogger(__name__)

ORACLE_DEPTH = 4
ORACLE_BATCH = 1 << 20
ANCHORS = ("midpoint", "start")


def segment_integrals(points, g, order=2):
    """Integral of ``g`` over every polyline segment by ``order``-point Gauss-Legendre."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (nodes + 1.0)
    p0, d = points[:-1], np.diff(points, axis=0)
    lengths = np.linalg.norm(d, axis=1)
    q = p0[:, None, :] + t[None, :, None] * d[:, None, :]
    values = np.asarray(g(q[..., 0], q[..., 1]), dtype=float)
    values = np.broadcast_to(values, q.shape[:2])
    return 0.5 * lengths * (values @ weights)


def trace_integral(curve, g):
    """I_m = sigma_m * sum over segments of the two-point Gauss integral of g."""
    return curve.sigma * float(segment_integrals(curve.points, g).sum())


def measure_oracle(ifs, g, level, anchor="midpoint"):
    """sum over level-``level`` words of mu(cell) * g(anchor image).

    The words are split into prefix and suffix halves so memory stays
    bounded at deep levels.
    """
    if anchor not in ANCHORS:
        raise ParameterError(f"anchor must be one of {ANCHORS}, got {anchor!r}")
    a, b = (np.asarray(p, dtype=float) for p in ifs.base)
    point = 0.5 * (a + b) if anchor == "midpoint" else a
    split = level // 2
    pre_linear, pre_offset, pre_weights, _ = word_maps(ifs, 0, split)
    suf_linear, suf_offset, suf_weights, _ = word_maps(ifs, split, level)
    suffix_points = suf_linear @ point + suf_offset
    batch = max(1, ORACLE_BATCH // suffix_points.shape[0])
    total = 0.0
    for start in range(0, pre_weights.shape[0], batch):
        stop = start + batch
        images = (
            np.einsum("kab,sb->ksa", pre_linear[start:stop], suffix_points)
            + pre_offset[start:stop, None, :]
        )
        values = np.broadcast_to(
            np.asarray(g(images[..., 0], images[..., 1]), dtype=float), images.shape[:2]
        )
        total += float(pre_weights[start:stop] @ (values @ suf_weights))
    return total


def trace_convergence_study(ifs, g, levels, oracle_level=None, anchor="midpoint", name="g"):
    levels = [int(m) for m in levels]
    if not levels:
        raise ParameterError("trace study needs at least one level")
    oracle_level = max(levels) + ORACLE_DEPTH if oracle_level is None else oracle_level
    reference = measure_oracle(ifs, g, oracle_level, anchor)
    rows = []
    previous = None
    for m in levels:
        curve = generate_prefractal(ifs, m)
        value = trace_integral(curve, g)
        rows.append(
            {
                "level": m,
                "segments": curve.n_segments,
                "sigma": curve.sigma,
                "I_m": value,
                "abs_error": abs(value - reference),
                "step": math.nan if previous is None else abs(value - previous),
            }
        )
        logger.debug("trace level %d: I=%.15g", m, value)
        previous = value
    steps = [row["step"] for row in rows[1:]]
    verdicts = [
        Verdict(
            rule="successive differences |I_(m+1) - I_m| strictly decreasing",
            passed=strictly_decreasing(steps),
            values=tuple(steps),
        ),
    ]
    report = ConvergenceReport(
        study="trace",
        rows=rows,
        verdicts=verdicts,
        notes={
            "ifs": ifs.name,
            "field": name,
            "oracle_level": oracle_level,
            "oracle_anchor": anchor,
            "I_inf": repr(reference),
        },
        plot_columns=("abs_error",),
    )
    logger.info("trace study on %s: I_inf=%.12g, final error %.3e", ifs.name, reference, rows[-1]["abs_error"])
    return report
