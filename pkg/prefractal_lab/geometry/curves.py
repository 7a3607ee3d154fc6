"""Prefractal curves K_m = Phi_m(K0) and measure diagnostics on them."""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from scipy.optimize import brentq

from prefractal_lab.exceptions import GeometryError, LevelOverflowError

from .environment import frequencies, mixture_dimension
from .ifs import contraction_sum_D, sigma, word_maps

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PrefractalCurve:
    """Ordered polyline of level-m segments with their words and mu-weights.

    ``points`` has one more row than there are segments; segment ``k`` runs
    from ``points[k]`` to ``points[k + 1]``.
    """

    level: int
    points: np.ndarray
    words: np.ndarray
    weights: np.ndarray
    sigma: float
    D: float
    name: str = "ifs"

    def __post_init__(self):
        for array in (self.points, self.words, self.weights):
            array.setflags(write=False)

    @property
    def n_segments(self):
        return self.points.shape[0] - 1

    @property
    def segment_lengths(self):
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)

    @property
    def total_length(self):
        return float(self.segment_lengths.sum())

    @property
    def segments(self):
        return [
            (self.points[k], self.points[k + 1], tuple(int(i) for i in self.words[k]), float(self.weights[k]))
            for k in range(self.n_segments)
        ]


def generate_prefractal(ifs, m, max_segments=None):
    """Level-m prefractal of ``ifs``; level 0 is the base segment itself."""
    if m < 0:
        raise GeometryError(f"level must be non-negative, got {m}")
    cap = settings.LAB_MAX_SEGMENTS if max_segments is None else max_segments
    count = ifs.segment_count(m)
    if count > cap:
        raise LevelOverflowError(
            f"level {m} of {ifs.name} has {count} segments, cap is {cap}"
        )
    linear, offset, weights, words = word_maps(ifs, 0, m)
    a, b = (np.asarray(p) for p in ifs.base)
    starts = linear @ a + offset
    points = np.vstack([starts, (linear[-1] @ b + offset[-1])[None, :]])
    points[0] = a
    points[-1] = b
    logger.debug("generated %s level %d with %d segments", ifs.name, m, count)
    return PrefractalCurve(
        level=m,
        points=points,
        words=words,
        weights=weights,
        sigma=sigma(ifs, m),
        D=contraction_sum_D(ifs).D,
        name=ifs.name,
    )


@dataclass(frozen=True)
class DensitySample:
    center: tuple
    radius: float
    ratio: float


@dataclass(frozen=True)
class MeasureReport:
    D: float
    sigma_per_level: list
    density_ratio_samples: list
    dimension: float


def clipped_lengths(points, center, radius):
    """Length of each polyline segment inside the closed disk B(center, radius)."""
    p0 = points[:-1]
    d = np.diff(points, axis=0)
    f = p0 - np.asarray(center, dtype=float)
    a = np.einsum("ij,ij->i", d, d)
    b = 2.0 * np.einsum("ij,ij->i", f, d)
    c = np.einsum("ij,ij->i", f, f) - radius * radius
    disc = b * b - 4.0 * a * c
    root = np.sqrt(np.maximum(disc, 0.0))
    lo = np.clip((-b - root) / (2.0 * a), 0.0, 1.0)
    hi = np.clip((-b + root) / (2.0 * a), 0.0, 1.0)
    return np.where(disc > 0.0, np.maximum(hi - lo, 0.0) * np.sqrt(a), 0.0)


def measure_density_ratio(curve, samples):
    """lambda_1(B(P, r) ∩ K_m) / (D^m r) for every ``(center, radius)`` sample."""
    result = []
    for center, radius in samples:
        if not 0.0 < radius <= 1.0:
            raise GeometryError(f"sample radius must lie in (0, 1], got {radius!r}")
        length = float(clipped_lengths(curve.points, center, radius).sum())
        result.append(
            DensitySample(
                center=(float(center[0]), float(center[1])),
                radius=float(radius),
                ratio=length * curve.sigma / radius,
            )
        )
    return result


def similarity_dimension(ifs):
    """Root s of sum d_i^s = 1; mixtures use their environment frequencies."""
    if ifs.is_mixture:
        report = frequencies(ifs.environment, labels=ifs.labels)
        last = report[-1]
        p = tuple(last[label] for label in ifs.labels)
        l = tuple(1.0 / ifs.families[label][0].ratio for label in ifs.labels)
        return mixture_dimension(p, l)
    ratios = ifs.ratios(ifs.labels[0])
    if len(ratios) == 1:
        return 0.0
    return float(brentq(lambda s: float(np.sum(ratios**s)) - 1.0, 1e-9, 64.0))


def measure_report(ifs, curve, samples, levels=None):
    levels = range(curve.level + 1) if levels is None else levels
    return MeasureReport(
        D=contraction_sum_D(ifs).D,
        sigma_per_level=[sigma(ifs, m) for m in levels],
        density_ratio_samples=measure_density_ratio(curve, samples),
        dimension=similarity_dimension(ifs),
    )


def random_samples(curve, count, rng, radius_range=(0.01, 0.5)):
    """Centers near the curve with radii drawn log-uniformly from ``radius_range``."""
    lo, hi = (math.log(r) for r in radius_range)
    picks = rng.integers(0, curve.points.shape[0], size=count)
    jitter = rng.uniform(-0.05, 0.05, size=(count, 2))
    centers = curve.points[picks] + jitter
    radii = np.exp(rng.uniform(lo, hi, size=count))
    return [(tuple(c), float(r)) for c, r in zip(centers, radii)]
