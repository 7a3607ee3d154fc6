"""Environment sequences of Koch mixtures and their occurrence frequencies."""
import logging
import math
from dataclasses import dataclass, field

from prefractal_lab.exceptions import GeometryError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnvironmentRule:
    """How to build an environment: constant label, periodic pattern or frequency target."""

    kind: str
    label: int = 1
    pattern: tuple = ()
    p: dict = field(default_factory=dict)
    c0: float = 1.0

    @classmethod
    def constant(cls, label):
        return cls(kind="constant", label=label)

    @classmethod
    def periodic(cls, pattern):
        return cls(kind="periodic", pattern=tuple(pattern))

    @classmethod
    def frequency(cls, p, c0=1.0):
        return cls(kind="frequency", p=dict(p), c0=float(c0))


@dataclass(frozen=True)
class EnvironmentReport:
    sequence: tuple
    frequencies: list
    violations: list
    feasible: bool


def frequencies(sequence, labels=None):
    """h_a(m) for m = 1..len(sequence), one mapping label -> frequency per m."""
    labels = tuple(sorted(set(sequence))) if labels is None else tuple(labels)
    counts = dict.fromkeys(labels, 0)
    table = []
    for m, label in enumerate(sequence, start=1):
        counts[label] = counts.get(label, 0) + 1
        table.append({a: counts.get(a, 0) / m for a in labels})
    return table


def _greedy(p, length):
    counts = dict.fromkeys(p, 0)
    sequence = []
    for m in range(1, length + 1):
        # largest deficit p_a * m - count_a; ties go to the smaller label
        label = max(sorted(p), key=lambda a: p[a] * m - counts[a])
        counts[label] += 1
        sequence.append(label)
    return tuple(sequence)


def build_environment(rule, length):
    if length < 1:
        raise GeometryError(f"environment length must be at least 1, got {length}")
    if rule.kind == "constant":
        sequence = (rule.label,) * length
        target = {rule.label: 1.0}
    elif rule.kind == "periodic":
        if not rule.pattern:
            raise GeometryError("periodic environment needs a non-empty pattern")
        sequence = tuple(rule.pattern[i % len(rule.pattern)] for i in range(length))
        target = None
    elif rule.kind == "frequency":
        p = rule.p
        if any(v < 0.0 for v in p.values()) or not math.isclose(
            sum(p.values()), 1.0, abs_tol=1e-12
        ):
            raise GeometryError(f"frequency target must be a probability, got {p}")
        sequence = _greedy(p, length)
        target = p
    else:
        raise GeometryError(f"unknown environment rule {rule.kind!r}")

    labels = tuple(sorted(set(sequence) | set(target or ())))
    table = frequencies(sequence, labels)
    violations = []
    if target is not None:
        for m, row in enumerate(table, start=1):
            for label in labels:
                deviation = abs(row[label] - target.get(label, 0.0))
                if deviation > rule.c0 / m + 1e-12:
                    violations.append((m, label, deviation))
    feasible = not violations and rule.c0 >= 1.0
    if not feasible:
        logger.warning(
            "environment %s: %d frequency violations (C0=%s)",
            rule.kind,
            len(violations),
            rule.c0,
        )
    return EnvironmentReport(
        sequence=sequence, frequencies=table, violations=violations, feasible=feasible
    )


def mixture_dimension(p, l):
    """ln 4 / (p1 ln l1 + p2 ln l2) for a two-family Koch mixture."""
    p1, p2 = (float(v) for v in p)
    if min(p1, p2) < 0.0 or not math.isclose(p1 + p2, 1.0, abs_tol=1e-12):
        raise GeometryError(f"p must be a probability pair, got {p}")
    if not all(2.0 < value < 4.0 for value in l):
        raise GeometryError(f"l values must lie in (2, 4), got {l}")
    return math.log(4.0) / (p1 * math.log(l[0]) + p2 * math.log(l[1]))
