"""Mesh files: NODES, TRIANGLES and BOUNDARY sections in plain text."""
import re

import numpy as np

from prefractal_lab.exceptions import ArtifactError
from prefractal_lab.files import atomic_write, read_text

from .domains import BoundaryTag
from .mesher import TaggedMesh

HEADER = re.compile(r"^# tagged-mesh h_max=(?P<h>\S+) min_angle=(?P<angle>\S+)$")


def format_mesh(mesh):
    lines = [f"# tagged-mesh h_max={mesh.h_max!r} min_angle={mesh.min_angle!r}"]
    lines.append(f"NODES {mesh.n_nodes}")
    lines.extend(f"{k} {x!r} {y!r}" for k, (x, y) in enumerate(mesh.nodes.tolist()))
    lines.append(f"TRIANGLES {mesh.n_triangles}")
    lines.extend(f"{k} {a} {b} {c}" for k, (a, b, c) in enumerate(mesh.triangles.tolist()))
    lines.append(f"BOUNDARY {mesh.boundary_edges.shape[0]}")
    lines.extend(
        f"{p} {q} {tag.value if isinstance(tag, BoundaryTag) else tag} {piece}"
        for (p, q), tag, piece in zip(
            mesh.boundary_edges.tolist(), mesh.boundary_tags, mesh.boundary_pieces.tolist()
        )
    )
    return "\n".join(lines) + "\n"


def write_mesh(mesh, path):
    return atomic_write(path, format_mesh(mesh))


def _section(lines, cursor, name, source):
    fields = lines[cursor].split() if cursor < len(lines) else []
    if len(fields) != 2 or fields[0] != name:
        raise ArtifactError(f"{source}: expected section {name} at line {cursor + 1}", path=source)
    count = int(fields[1])
    rows = [line.split() for line in lines[cursor + 1 : cursor + 1 + count]]
    if len(rows) != count:
        raise ArtifactError(f"{source}: section {name} is truncated", path=source)
    return rows, cursor + 1 + count


def parse_mesh(text, source="mesh"):
    lines = [line for line in text.splitlines() if line.strip()]
    match = HEADER.match(lines[0]) if lines else None
    if match is None:
        raise ArtifactError(f"{source}: bad mesh header", path=source)
    try:
        node_rows, cursor = _section(lines, 1, "NODES", source)
        tri_rows, cursor = _section(lines, cursor, "TRIANGLES", source)
        edge_rows, cursor = _section(lines, cursor, "BOUNDARY", source)
        nodes = np.array([[float(r[1]), float(r[2])] for r in node_rows]).reshape(-1, 2)
        tris = np.array([[int(v) for v in r[1:4]] for r in tri_rows], dtype=np.int64).reshape(-1, 3)
        edges = np.array([[int(r[0]), int(r[1])] for r in edge_rows], dtype=np.int64).reshape(-1, 2)
        tags = tuple(BoundaryTag(r[2]) for r in edge_rows)
        pieces = np.array([int(r[3]) for r in edge_rows], dtype=np.int64)
    except (IndexError, ValueError) as exc:
        raise ArtifactError(f"{source}: malformed mesh file ({exc})", path=source) from exc
    return TaggedMesh(
        nodes=nodes,
        triangles=tris,
        boundary_edges=edges,
        boundary_tags=tags,
        boundary_pieces=pieces,
        h_max=float(match["h"]),
        min_angle=float(match["angle"]),
    )


def read_mesh(path):
    return parse_mesh(read_text(path, "mesh file"), source=str(path))
