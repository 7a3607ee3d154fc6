"""Convergence of Westervelt solutions across levels, compared on a shared grid over Omega*."""
import logging
import math
import tempfile

from celery import group

from .levels import LevelSamples, background_grid, grid_distance
from .reports import ConvergenceReport, Verdict, strictly_decreasing
from .tasks import solve_study_level

logger = logging.getLogger(__name__)


def solve_levels(study, work_dir):
    """Run every level as its own task; summaries come back in level order."""
    job = group(solve_study_level.s(study.to_dict(), index, str(work_dir)) for index in range(len(study.levels)))
    summaries = job.apply_async().join()
    return sorted(summaries, key=lambda summary: summary["index"])


def _relative_spread(values):
    values = [abs(v) for v in values]
    if not values or max(values) == 0.0:
        return 0.0
    return (max(values) - min(values)) / max(values)


def solution_convergence_study(study, work_dir=None):
    """e_m = ||u_(m+1) - u_m||_{L2(0,T; L2(Omega*))} with zero extension outside each domain.

    ``work_dir`` keeps the per-level ``.npz`` samples; a temporary directory
    is used (and removed) when it is not given.
    """
    if work_dir is None:
        with tempfile.TemporaryDirectory(prefix="prefractal_lab_") as tmp:
            return _study(study, tmp)
    return _study(study, work_dir)


def _study(study, work_dir):
    summaries = solve_levels(study, work_dir)
    gx, gy, cell_area = background_grid(study.omega_star, study.background_resolution)
    rows = []
    current = LevelSamples(summaries[0]["path"], gx, gy)
    for position, summary in enumerate(summaries):
        following = None
        if position + 1 < len(summaries):
            following = LevelSamples(summaries[position + 1]["path"], gx, gy)
        error = math.nan if following is None else grid_distance(current, following, cell_area)
        rows.append(
            {
                "level": summary["level"],
                "h_max": summary["h_max"],
                "n_nodes": summary["n_nodes"],
                "sigma": summary["sigma"],
                "picard_iterations": summary["iterations"],
                "drift": summary["drift"],
                "e_m": error,
            }
        )
        current = following
    errors = [row["e_m"] for row in rows[:-1]]
    for row, previous in zip(rows[1:], rows):
        row["ratio"] = previous["e_m"] / row["e_m"] if row["e_m"] > 0.0 else math.nan
    rows[0]["ratio"] = math.nan

    drifts = [row["drift"] for row in rows]
    verdicts = [
        Verdict(
            rule="level differences e_m strictly decreasing",
            passed=len(errors) > 0 and strictly_decreasing(errors),
            values=tuple(errors),
        ),
    ]
    report = ConvergenceReport(
        study="solution",
        rows=rows,
        verdicts=verdicts,
        notes={
            "background_resolution": study.background_resolution,
            "omega_star": study.omega_star,
            "sigma_scaling": study.sigma_scaling,
            "refine_only": study.refine_only,
            "robin_drift_spread": repr(_relative_spread(drifts)),
        },
        plot_columns=("e_m",),
    )
    logger.info("solution study over levels %s: %s", list(study.levels), "PASS" if report.passed else "FAIL")
    return report
