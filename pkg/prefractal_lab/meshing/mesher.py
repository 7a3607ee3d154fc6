"""Constrained Delaunay meshing of tagged domains and red refinement."""
import logging
import math
from dataclasses import dataclass

import numpy as np
import triangle
from django.conf import settings

from prefractal_lab.exceptions import MeshError

from .domains import BoundaryTag

logger = logging.getLogger(__name__)

MIN_TRIANGLE_AREA = 1e-14
MAX_REFINE_PASSES = 40


@dataclass(frozen=True, eq=False)
class TaggedMesh:
    """P1 mesh: CCW triangles plus boundary edges with tag and parent piece."""

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: tuple
    boundary_pieces: np.ndarray
    h_max: float
    min_angle: float = 0.0
    quality_warning: str = ""

    def __post_init__(self):
        for array in (self.nodes, self.triangles, self.boundary_edges, self.boundary_pieces):
            array.setflags(write=False)

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @property
    def tags(self):
        return frozenset(self.boundary_tags)

    def tag_mask(self, tag):
        return np.array([t == tag for t in self.boundary_tags], dtype=bool)

    def edges_with_tag(self, tag):
        return self.boundary_edges[self.tag_mask(tag)]

    def boundary_nodes(self, tag):
        return np.unique(self.edges_with_tag(tag).ravel())

    @property
    def areas(self):
        return triangle_areas(self.nodes, self.triangles)

    @property
    def area(self):
        return float(self.areas.sum())

    def same_as(self, other):
        return (
            self is other
            or (
                self.nodes.shape == other.nodes.shape
                and self.triangles.shape == other.triangles.shape
                and np.array_equal(self.nodes, other.nodes)
                and np.array_equal(self.triangles, other.triangles)
            )
        )


def triangle_areas(nodes, triangles):
    a, b, c = (nodes[triangles[:, k]] for k in range(3))
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def edge_lengths(nodes, triangles):
    """(t, 3) edge lengths in the order (0-1, 1-2, 2-0)."""
    p = nodes[triangles]
    return np.linalg.norm(p - np.roll(p, -1, axis=1), axis=2)


def min_angle_degrees(nodes, triangles):
    p = nodes[triangles]
    u = np.roll(p, -1, axis=1) - p
    v = np.roll(p, 1, axis=1) - p
    cos = np.einsum("tki,tki->tk", u, v) / (np.linalg.norm(u, axis=2) * np.linalg.norm(v, axis=2))
    return float(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))).min())


def _presplit(domain, h_max):
    """Boundary vertices and segments with every segment no longer than ``h_max``."""
    vertices, segments, tags, pieces = [], [], [], []
    v = domain.vertices
    n = v.shape[0]
    for i in range(n):
        start, end = v[i], v[(i + 1) % n]
        length = float(np.linalg.norm(end - start))
        parts = max(1, math.ceil(length / h_max - 1e-9))
        for k in range(parts):
            vertices.append(start + (end - start) * (k / parts) if k else start)
            segments.append(len(vertices) - 1)
            tags.append(domain.edge_tags[i])
            pieces.append(int(domain.edge_pieces[i]))
    vertices = np.array(vertices)
    count = vertices.shape[0]
    first = np.array(segments, dtype=np.int32)
    segments = np.stack([first, (first + 1) % count], axis=1)
    return vertices, segments, tuple(tags), np.array(pieces, dtype=np.int64)


def _boundary_edges(triangles):
    """Edges used by exactly one triangle, oriented as in that triangle."""
    directed = np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]
    )
    keys = np.sort(directed, axis=1)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    return directed[counts[inverse.ravel()] == 1]


def _orient_ccw(nodes, triangles):
    flip = triangle_areas(nodes, triangles) < 0.0
    triangles = triangles.copy()
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    return triangles


def triangulate(domain, h_max, interior_h=None, min_angle=None):
    """Conforming triangulation with every boundary edge at most ``h_max``.

    Interior edges are bounded by ``interior_h`` (default ``h_max``). No
    Steiner points are inserted on the boundary, so each presplit boundary
    segment is one mesh edge.
    """
    if not h_max > 0.0:
        raise MeshError(f"h_max must be positive, got {h_max!r}")
    interior_h = h_max if interior_h is None else max(float(interior_h), h_max)
    min_angle = settings.LAB_MIN_ANGLE if min_angle is None else min_angle
    if domain.area <= MIN_TRIANGLE_AREA:
        raise MeshError("domain polygon is degenerate")

    vertices, segments, seg_tags, seg_pieces = _presplit(domain, h_max)
    area = math.sqrt(3.0) / 4.0 * interior_h**2
    opts = f"pq{min_angle:g}Y"
    try:
        result = triangle.triangulate(
            {"vertices": vertices, "segments": segments}, f"{opts}a{area:.17g}"
        )
        for _ in range(MAX_REFINE_PASSES):
            nodes, tris = result["vertices"], result["triangles"]
            too_long = edge_lengths(nodes, tris).max(axis=1) > interior_h * (1.0 + 1e-12)
            if not too_long.any():
                break
            areas = np.abs(triangle_areas(nodes, tris))
            result = triangle.triangulate(
                {
                    "vertices": nodes,
                    "triangles": tris,
                    "segments": result["segments"],
                    "triangle_max_area": np.where(too_long, 0.5 * areas, -1.0).reshape(-1, 1),
                },
                f"r{opts}a",
            )
        else:
            raise MeshError(f"edge bound {interior_h} not reached after {MAX_REFINE_PASSES} passes")
    except (RuntimeError, ValueError) as exc:
        raise MeshError(f"triangle failed on the domain polygon: {exc}") from exc

    nodes = np.asarray(result["vertices"], dtype=float)
    tris = _orient_ccw(nodes, np.asarray(result["triangles"], dtype=np.int64))
    if np.any(triangle_areas(nodes, tris) <= MIN_TRIANGLE_AREA):
        raise MeshError("mesher produced a degenerate triangle")
    if not np.array_equal(nodes[: vertices.shape[0]], vertices):
        raise MeshError("mesher moved boundary vertices")

    lookup = {
        (int(min(a, b)), int(max(a, b))): k for k, (a, b) in enumerate(segments)
    }
    found = _boundary_edges(tris)
    if found.shape[0] != segments.shape[0]:
        raise MeshError(
            f"mesh boundary has {found.shape[0]} edges, domain has {segments.shape[0]}"
        )
    for a, b in found:
        if (int(min(a, b)), int(max(a, b))) not in lookup:
            raise MeshError(f"boundary edge ({a}, {b}) is not a domain segment")

    return _finish(nodes, tris, segments.astype(np.int64), seg_tags, seg_pieces, min_angle)


def _finish(nodes, tris, edges, tags, pieces, min_angle):
    worst = min_angle_degrees(nodes, tris)
    warning = ""
    if worst < min_angle - 1e-9:
        warning = f"minimum angle {worst:.2f} deg below {min_angle:g} deg"
        logger.warning("mesh quality: %s", warning)
    mesh = TaggedMesh(
        nodes=nodes,
        triangles=tris,
        boundary_edges=edges,
        boundary_tags=tuple(tags),
        boundary_pieces=pieces,
        h_max=float(edge_lengths(nodes, tris).max()),
        min_angle=worst,
        quality_warning=warning,
    )
    logger.info(
        "mesh: %d nodes, %d triangles, h_max %.6g", mesh.n_nodes, mesh.n_triangles, mesh.h_max
    )
    return mesh


def refine(mesh):
    """Uniform red refinement; existing node indices are kept."""
    tris = mesh.triangles
    directed = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    keys = np.sort(directed, axis=1)
    unique, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    n = mesh.n_nodes
    mids = 0.5 * (mesh.nodes[unique[:, 0]] + mesh.nodes[unique[:, 1]])
    nodes = np.vstack([mesh.nodes, mids])
    t = tris.shape[0]
    m01, m12, m20 = (n + inverse[k * t : (k + 1) * t] for k in range(3))
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    children = np.concatenate(
        [
            np.stack([a, m01, m20], axis=1),
            np.stack([b, m12, m01], axis=1),
            np.stack([c, m20, m12], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ]
    )
    index = {(int(p), int(q)): n + k for k, (p, q) in enumerate(unique)}
    edges, tags, pieces = [], [], []
    for (p, q), tag, piece in zip(mesh.boundary_edges, mesh.boundary_tags, mesh.boundary_pieces):
        mid = index[(int(min(p, q)), int(max(p, q)))]
        edges.extend([(p, mid), (mid, q)])
        tags.extend([tag, tag])
        pieces.extend([piece, piece])
    return _finish(
        nodes,
        children,
        np.array(edges, dtype=np.int64),
        tags,
        np.array(pieces, dtype=np.int64),
        settings.LAB_MIN_ANGLE,
    )


def boundary_mass_support(mesh, tag):
    """Edges carrying ``tag`` with their exact lengths."""
    try:
        tag = BoundaryTag(tag)
    except ValueError:
        raise MeshError(f"unknown boundary tag {tag!r}") from None
    edges = mesh.edges_with_tag(tag)
    lengths = np.linalg.norm(mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]], axis=1)
    return [((int(p), int(q)), float(length)) for (p, q), length in zip(edges, lengths)]
