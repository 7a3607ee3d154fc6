"""Polygonal domains whose boundary pieces carry Dirichlet/Neumann/Robin tags."""
import logging
from dataclasses import dataclass

import numpy as np
from django.db import models

from prefractal_lab.exceptions import DomainError
from prefractal_lab.geometry.curves import generate_prefractal

logger = logging.getLogger(__name__)

UNIT_SQUARE = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))


class BoundaryTag(models.TextChoices):
    DIRICHLET = "dirichlet", "Dirichlet"
    NEUMANN = "neumann", "Neumann"
    ROBIN = "robin", "Robin"


@dataclass(frozen=True)
class BoundarySpec:
    """Tag of every edge of a base polygon.

    Edge ``i`` runs from vertex ``i`` to vertex ``i + 1``. The edge at
    ``prefractal_edge`` is replaced by the level-m prefractal; ``outward``
    makes its bumps point away from the interior.
    """

    tags: tuple
    prefractal_edge: int = 0
    outward: bool = True

    def __post_init__(self):
        tags = tuple(BoundaryTag(t) for t in self.tags)
        object.__setattr__(self, "tags", tags)
        if self.prefractal_edge is not None and not 0 <= self.prefractal_edge < len(tags):
            raise DomainError(
                f"prefractal edge {self.prefractal_edge} is not an edge of a "
                f"{len(tags)}-gon"
            )

    @classmethod
    def square(cls, outward=True):
        """Bottom Robin prefractal, right and left Dirichlet, top Neumann."""
        return cls(
            tags=(
                BoundaryTag.ROBIN,
                BoundaryTag.DIRICHLET,
                BoundaryTag.NEUMANN,
                BoundaryTag.DIRICHLET,
            ),
            prefractal_edge=0,
            outward=outward,
        )


@dataclass(frozen=True)
class BoundaryPiece:
    points: np.ndarray
    tag: str
    prefractal: bool = False

    @property
    def length(self):
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())


@dataclass(frozen=True, eq=False)
class PolygonalDomain:
    """Simple CCW polygon with per-edge tags and boundary piece indices."""

    vertices: np.ndarray
    edge_tags: tuple
    edge_pieces: np.ndarray
    pieces: tuple
    spec: BoundarySpec
    level: int = 0
    curve: object = None

    def __post_init__(self):
        self.vertices.setflags(write=False)
        self.edge_pieces.setflags(write=False)

    @property
    def edges(self):
        return np.stack([self.vertices, np.roll(self.vertices, -1, axis=0)], axis=1)

    @property
    def area(self):
        return shoelace(self.vertices)

    @property
    def perimeter(self):
        return float(np.linalg.norm(np.roll(self.vertices, -1, axis=0) - self.vertices, axis=1).sum())

    @property
    def bounding_box(self):
        return (*self.vertices.min(axis=0), *self.vertices.max(axis=0))

    def tagged_length(self, tag):
        lengths = np.linalg.norm(np.roll(self.vertices, -1, axis=0) - self.vertices, axis=1)
        mask = np.array([t == tag for t in self.edge_tags])
        return float(lengths[mask].sum())


def shoelace(vertices):
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _orient(a, b, c):
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (
        c[..., 0] - a[..., 0]
    )


def first_crossing(vertices, tol=1e-12):
    """Indices of the first pair of non-adjacent edges that meet, else ``None``."""
    p = vertices
    q = np.roll(vertices, -1, axis=0)
    n = p.shape[0]
    scale = tol * max(1.0, float(np.abs(vertices).max()))
    turn = _orient(p, q, np.roll(q, -1, axis=0))
    back = np.einsum("ij,ij->i", q - p, np.roll(q, -1, axis=0) - q)
    folded = np.flatnonzero((np.abs(turn) <= scale) & (back < 0.0))
    if folded.size:
        i = int(folded[0])
        return i, (i + 1) % n
    lo, hi = np.minimum(p, q), np.maximum(p, q)
    for i in range(n - 2):
        j = np.arange(i + 2, n if i > 0 else n - 1)
        if not j.size:
            continue
        j = j[np.all(lo[j] <= hi[i] + scale, axis=1) & np.all(hi[j] >= lo[i] - scale, axis=1)]
        if not j.size:
            continue
        d1 = _orient(p[j], q[j], p[i])
        d2 = _orient(p[j], q[j], q[i])
        d3 = _orient(p[i], q[i], p[j])
        d4 = _orient(p[i], q[i], q[j])
        d1, d2, d3, d4 = (np.where(np.abs(d) <= scale, 0.0, d) for d in (d1, d2, d3, d4))
        hit = j[(d1 * d2 <= 0.0) & (d3 * d4 <= 0.0)]
        if hit.size:
            return i, int(hit[0])
    return None


def place_curve(points, base, start, end, outward=True):
    """Carry a polyline drawn over ``base`` onto the edge ``start -> end``.

    On a CCW polygon the interior lies left of each edge; ``outward`` mirrors
    the curve so that its bumps point to the right.
    """
    a, b = (np.asarray(p, dtype=float) for p in base)
    start, end = np.asarray(start, dtype=float), np.asarray(end, dtype=float)
    chord = b - a
    rel = np.asarray(points, dtype=float) - a
    norm2 = float(np.dot(chord, chord))
    s = rel @ chord / norm2
    t = (chord[0] * rel[:, 1] - chord[1] * rel[:, 0]) / norm2
    if outward:
        t = -t
    edge = end - start
    normal = np.array([-edge[1], edge[0]])
    placed = start + s[:, None] * edge + t[:, None] * normal
    placed[0], placed[-1] = start, end
    return placed


def build_domain(base, spec, ifs=None, m=0, curve=None):
    """Replace ``spec.prefractal_edge`` of ``base`` by the level-``m`` prefractal.

    A ``curve`` read back from a curve file is used as is instead of being
    generated from ``ifs``; ``ifs`` still supplies the base segment.
    """
    base = np.asarray(base, dtype=float)
    if base.ndim != 2 or base.shape[0] < 3:
        raise DomainError("base polygon needs at least three vertices")
    if len(spec.tags) != base.shape[0]:
        raise DomainError(
            f"boundary spec tags {len(spec.tags)} edges, base polygon has {base.shape[0]}"
        )
    if shoelace(base) <= 0.0:
        raise DomainError("base polygon must be counter-clockwise with positive area")
    if spec.prefractal_edge is None:
        curve = None
    else:
        if ifs is None:
            raise DomainError("a prefractal edge needs an IFS")
        if curve is None:
            curve = generate_prefractal(ifs, m)
        elif curve.level != m:
            raise DomainError(f"curve file holds level {curve.level}, expected level {m}")

    pieces, vertices, edge_tags, edge_pieces = [], [], [], []
    count = base.shape[0]
    for i in range(count):
        start, end = base[i], base[(i + 1) % count]
        if i == spec.prefractal_edge:
            points = place_curve(curve.points, ifs.base, start, end, spec.outward)
            piece = BoundaryPiece(points=points, tag=spec.tags[i], prefractal=True)
        else:
            piece = BoundaryPiece(points=np.array([start, end]), tag=spec.tags[i])
        pieces.append(piece)
        vertices.extend(piece.points[:-1])
        edge_tags.extend([piece.tag] * (piece.points.shape[0] - 1))
        edge_pieces.extend([i] * (piece.points.shape[0] - 1))

    vertices = np.array(vertices)
    if not any(p.tag == BoundaryTag.DIRICHLET and p.length > 0.0 for p in pieces):
        logger.warning("domain has no Dirichlet boundary; the V-norm needs a Robin term")
    crossing = first_crossing(vertices)
    if crossing is not None:
        i, j = crossing
        n = vertices.shape[0]
        witness = (
            (tuple(vertices[i]), tuple(vertices[(i + 1) % n])),
            (tuple(vertices[j]), tuple(vertices[(j + 1) % n])),
        )
        raise DomainError(f"boundary edges {i} and {j} intersect", witness=witness)
    if shoelace(vertices) <= 0.0:
        raise DomainError("domain polygon has non-positive signed area")

    domain = PolygonalDomain(
        vertices=vertices,
        edge_tags=tuple(edge_tags),
        edge_pieces=np.array(edge_pieces, dtype=np.int64),
        pieces=tuple(pieces),
        spec=spec,
        level=m,
        curve=curve,
    )
    logger.info(
        "built domain level %d: %d boundary vertices, area %.12g",
        m,
        vertices.shape[0],
        domain.area,
    )
    return domain


def square_domain(ifs=None, m=0, outward=True):
    """Default study domain: unit square with a prefractal Robin bottom."""
    if ifs is None:
        spec = BoundarySpec(tags=BoundarySpec.square().tags, prefractal_edge=None)
        return build_domain(UNIT_SQUARE, spec)
    return build_domain(UNIT_SQUARE, BoundarySpec.square(outward=outward), ifs, m)
