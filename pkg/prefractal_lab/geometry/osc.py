"""Strong open set condition check with convex polygon arithmetic."""
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from prefractal_lab.exceptions import GeometryError

from .ifs import word_maps

logger = logging.getLogger(__name__)

TOL = 1e-10


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def polygon_area(vertices):
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def as_convex_polygon(vertices):
    """Counter-clockwise copy of ``vertices``; rejects non-convex input."""
    poly = np.asarray(vertices, dtype=float)
    if poly.ndim != 2 or poly.shape[0] < 3 or poly.shape[1] != 2:
        raise GeometryError("a polygon needs at least three 2-D vertices")
    area = polygon_area(poly)
    if abs(area) <= TOL:
        raise GeometryError("polygon has zero area")
    if area < 0.0:
        poly = poly[::-1].copy()
    edges = np.roll(poly, -1, axis=0) - poly
    turns = _cross(edges, np.roll(edges, -1, axis=0))
    scale = np.linalg.norm(edges, axis=1) * np.linalg.norm(np.roll(edges, -1, axis=0), axis=1)
    if np.any(turns < -TOL * scale):
        raise GeometryError("polygon is not convex")
    return poly


def contains(poly, points, tol=TOL):
    """True where ``points`` lie in the closed convex CCW polygon."""
    points = np.atleast_2d(points)
    edges = np.roll(poly, -1, axis=0) - poly
    rel = points[:, None, :] - poly[None, :, :]
    side = _cross(edges[None, :, :], rel)
    scale = tol * max(1.0, float(np.abs(poly).max()))
    return np.all(side >= -scale * np.linalg.norm(edges, axis=1), axis=1)


def clip_convex(subject, clip):
    """Sutherland-Hodgman intersection of two convex CCW polygons."""
    output = [p for p in subject]
    n = clip.shape[0]
    for i in range(n):
        a, b = clip[i], clip[(i + 1) % n]
        edge = b - a
        inputs, output = output, []
        if not inputs:
            break
        for j, current in enumerate(inputs):
            previous = inputs[j - 1]
            cur_in = _cross(edge, current - a) >= 0.0
            prev_in = _cross(edge, previous - a) >= 0.0
            if cur_in:
                if not prev_in:
                    output.append(_line_hit(previous, current, a, edge))
                output.append(current)
            elif prev_in:
                output.append(_line_hit(previous, current, a, edge))
    return np.array(output) if len(output) >= 3 else np.zeros((0, 2))


def _line_hit(p, q, a, edge):
    d = q - p
    denom = _cross(edge, d)
    if denom == 0.0:
        return p
    return p - (_cross(edge, p - a) / denom) * d


def segment_intersection(p, p2, q, q2, tol=TOL):
    """Intersection of closed segments: ``None``, a point, or an overlap segment."""
    r, s = p2 - p, q2 - q
    qp = q - p
    rr = float(np.dot(r, r))
    denom = float(_cross(r, s))
    scale = tol * max(1.0, np.linalg.norm(r) * np.linalg.norm(s))
    if abs(denom) <= scale:
        if abs(float(_cross(qp, r))) > tol * max(1.0, rr):
            return None
        t0 = float(np.dot(qp, r)) / rr
        t1 = t0 + float(np.dot(s, r)) / rr
        lo, hi = max(0.0, min(t0, t1)), min(1.0, max(t0, t1))
        if hi < lo - tol:
            return None
        if hi - lo <= tol:
            return ("point", p + lo * r)
        return ("overlap", (p + lo * r, p + hi * r))
    t = float(_cross(qp, s)) / denom
    u = float(_cross(qp, r)) / denom
    if -tol <= t <= 1.0 + tol and -tol <= u <= 1.0 + tol:
        return ("point", p + t * r)
    return None


def _boundary_meets(poly_a, segments_b):
    """Points where the boundary of ``poly_a`` meets segments; overlaps flagged."""
    points, overlaps = [], []
    n = poly_a.shape[0]
    for i in range(n):
        a0, a1 = poly_a[i], poly_a[(i + 1) % n]
        for b0, b1 in segments_b:
            hit = segment_intersection(a0, a1, b0, b1)
            if hit is None:
                continue
            kind, value = hit
            if kind == "overlap":
                overlaps.append(value)
            else:
                points.append(value)
    return points, overlaps


def _same_point_set(points, targets, tol=1e-9):
    unique = []
    for p in points:
        if not any(np.linalg.norm(p - u) <= tol for u in unique):
            unique.append(p)
    if len(unique) != len(targets):
        return False
    return all(any(np.linalg.norm(t - u) <= tol for u in unique) for t in targets)


def _polygon_segments(poly):
    return [(poly[i], poly[(i + 1) % poly.shape[0]]) for i in range(poly.shape[0])]


@dataclass(frozen=True)
class OscViolation:
    kind: str
    detail: str
    evidence: dict = field(default_factory=dict)


@dataclass(frozen=True)
class OscReport:
    holds: bool
    level: int
    violations: list


def check_open_set_condition(ifs, O, O_prime, level=1):
    """Verify the strong open set condition for the level-``level`` images of O.

    Checks that the images are pairwise disjoint, that each lies in O, and
    that the boundaries of O and O' meet K0 and each other exactly in the
    endpoints of K0.
    """
    O = as_convex_polygon(O)
    O_prime = as_convex_polygon(O_prime)
    violations = []
    area_o = polygon_area(O)
    if not np.all(contains(O_prime, O)) or polygon_area(O_prime) <= area_o * (1 + TOL):
        violations.append(OscViolation("nesting", "O is not a proper subset of O'"))

    linear, offset, _, words = word_maps(ifs, 0, level)
    images = [O @ lin.T + off for lin, off in zip(linear, offset)]
    for k, image in enumerate(images):
        outside = ~contains(O, image)
        if np.any(outside):
            violations.append(
                OscViolation(
                    "containment",
                    f"image of word {tuple(words[k])} leaves O",
                    {"word": tuple(int(i) for i in words[k]), "vertex": image[outside][0].tolist()},
                )
            )
            break

    boxes = np.array([[im[:, 0].min(), im[:, 1].min(), im[:, 0].max(), im[:, 1].max()] for im in images])
    for i, j in itertools.combinations(range(len(images)), 2):
        if (
            boxes[i, 2] < boxes[j, 0]
            or boxes[j, 2] < boxes[i, 0]
            or boxes[i, 3] < boxes[j, 1]
            or boxes[j, 3] < boxes[i, 1]
        ):
            continue
        overlap = clip_convex(as_convex_polygon(images[i]), as_convex_polygon(images[j]))
        if overlap.shape[0] and polygon_area(overlap) > TOL * area_o:
            violations.append(
                OscViolation(
                    "overlap",
                    f"images of words {tuple(words[i])} and {tuple(words[j])} overlap",
                    {
                        "words": (tuple(int(v) for v in words[i]), tuple(int(v) for v in words[j])),
                        "area": polygon_area(overlap),
                        "witness": overlap.mean(axis=0).tolist(),
                    },
                )
            )
            break

    a, b = (np.asarray(p) for p in ifs.base)
    endpoints = [a, b]
    for label, poly in (("O", O), ("O'", O_prime)):
        points, overlaps = _boundary_meets(poly, [(a, b)])
        if overlaps or not _same_point_set(points, endpoints):
            violations.append(
                OscViolation("base", f"boundary of {label} meets K0 outside its endpoints")
            )
    points, overlaps = _boundary_meets(O, _polygon_segments(O_prime))
    if overlaps or not _same_point_set(points, endpoints):
        violations.append(
            OscViolation("boundaries", "boundaries of O and O' meet outside the endpoints of K0")
        )

    holds = not violations
    logger.info("open set condition for %s at level %d: %s", ifs.name, level, holds)
    return OscReport(holds=holds, level=level, violations=violations)
