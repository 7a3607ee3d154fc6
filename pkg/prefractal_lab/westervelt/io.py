"""CSV export of Picard contraction reports."""
import math

import pandas as pd

from prefractal_lab.files import atomic_write
from prefractal_lab.wave.io import format_csv


def _number(value):
    return "none" if value is None else repr(float(value))


def summary_line(report):
    return (
        f"# B={_number(report.B)} C_nu={_number(report.C_nu)} r_star={_number(report.r_star)}"
        f" converged={str(report.converged).lower()} iterations={report.iterations}"
        f" ball_radius={_number(report.ball_radius)}"
    )


def report_frame(report):
    return pd.DataFrame(
        {
            "iter": range(1, report.iterations + 1),
            "correction_norm": report.corrections,
            "ratio": ([math.nan] + report.ratios)[: report.iterations],
        },
        columns=["iter", "correction_norm", "ratio"],
    )


def format_report(report):
    """CSV rows ``iter,correction_norm,ratio`` followed by a ``#`` summary line."""
    return format_csv(report_frame(report)) + summary_line(report) + "\n"


def write_report(report, path):
    return atomic_write(path, format_report(report))
