"""Per-level study tables with verdicts, and their CSV / summary / SVG artifacts."""
import io
import logging
import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from prefractal_lab.files import atomic_write  # noqa: E402
from prefractal_lab.wave.io import format_csv  # noqa: E402

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Verdict:
    """Outcome of one acceptance rule together with the numbers it was decided on."""

    rule: str
    passed: bool
    values: tuple = ()
    detail: str = ""

    def line(self):
        numbers = ", ".join(f"{v:.6g}" for v in self.values)
        status = "PASS" if self.passed else "FAIL"
        text = f"[{status}] {self.rule}"
        if numbers:
            text += f" | values: {numbers}"
        if self.detail:
            text += f" | {self.detail}"
        return text


@dataclass
class ConvergenceReport:
    study: str
    rows: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)
    plot_columns: tuple = ()

    def column(self, name):
        return [row.get(name, math.nan) for row in self.rows]

    @property
    def passed(self):
        return all(v.passed for v in self.verdicts)

    def frame(self):
        columns = []
        for row in self.rows:
            columns.extend(k for k in row if k not in columns)
        return pd.DataFrame(self.rows, columns=columns)

    def csv(self):
        return format_csv(self.frame())

    def summary(self):
        lines = [f"study: {self.study}"]
        lines += [f"{key}: {value}" for key, value in sorted(self.notes.items())]
        lines += [verdict.line() for verdict in self.verdicts]
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"

    def svg(self):
        """Line plot of ``plot_columns`` against the level, or ``None``."""
        if not self.plot_columns or not self.rows:
            return None
        with plt.rc_context({"svg.hashsalt": "prefractal_lab"}):
            return self._draw()

    def _draw(self):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        levels = self.column("level")
        for name in self.plot_columns:
            values = self.column(name)
            ax.plot(levels, values, "o-", label=name)
            if all(isinstance(v, float) and v > 0.0 for v in values if not math.isnan(v)):
                ax.set_yscale("log")
        ax.set_xlabel("level m")
        ax.set_title(self.study)
        ax.grid(True)
        ax.legend()
        buffer = io.StringIO()
        # fixed salt and metadata keep the SVG bytes reproducible
        fig.savefig(buffer, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
        return buffer.getvalue()

    def write(self, directory, stem=None):
        """Write ``<stem>.csv``, ``<stem>.txt`` and ``<stem>.svg``; returns the paths."""
        stem = stem or self.study
        paths = [
            atomic_write(f"{directory}/{stem}.csv", self.csv()),
            atomic_write(f"{directory}/{stem}.txt", self.summary()),
        ]
        svg = self.svg()
        if svg is not None:
            paths.append(atomic_write(f"{directory}/{stem}.svg", svg))
        logger.info("study %s written to %s (%s)", self.study, directory, "PASS" if self.passed else "FAIL")
        return paths


def strictly_decreasing(values):
    values = [v for v in values if not math.isnan(v)]
    return all(b < a for a, b in zip(values, values[1:]))


def bounded_spread(rule, values, threshold):
    """Verdict ``max / min <= threshold`` over the positive entries of ``values``."""
    positive = [v for v in values if v > 0.0 and math.isfinite(v)]
    if not positive:
        return Verdict(rule=rule, passed=False, values=tuple(values), detail="no positive values")
    spread = max(positive) / min(positive)
    skipped = len(values) - len(positive)
    detail = f"max/min = {spread:.6g} (threshold {threshold:g})"
    if skipped:
        detail += f"; {skipped} zero entries left out"
    return Verdict(rule=rule, passed=spread <= threshold, values=tuple(values), detail=detail)
