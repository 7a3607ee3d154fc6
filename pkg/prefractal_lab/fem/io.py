"""Coordinate-triplet export of assembled matrices."""
import numpy as np

from prefractal_lab.files import atomic_write


def format_coo(matrix):
    """``row col value`` lines, row-major, explicit zeros dropped."""
    coo = matrix.tocoo()
    keep = coo.data != 0.0
    rows, cols, data = coo.row[keep], coo.col[keep], coo.data[keep]
    order = np.lexsort((cols, rows))
    return "".join(
        f"{r} {c} {v!r}\n"
        for r, c, v in zip(rows[order].tolist(), cols[order].tolist(), data[order].tolist())
    )


def write_coo(matrix, path):
    return atomic_write(path, format_coo(matrix))


def export_system(system, directory):
    """M, A, R and S of a system as ``<name>.coo`` files; returns the paths."""
    return [
        write_coo(getattr(system, name), f"{directory}/{name}.coo") for name in ("M", "A", "R", "S")
    ]
