"""Plain-text curve files: a header line then one segment per line."""
import re

import numpy as np

from prefractal_lab.exceptions import ArtifactError
from prefractal_lab.files import atomic_write, read_text

from .curves import PrefractalCurve

HEADER = re.compile(
    r"^# ifs-curve level=(?P<level>\d+) D=(?P<D>\S+)"
    r"(?: sigma=(?P<sigma>\S+))?(?: name=(?P<name>\S+))?$"
)


def _word(word):
    return ".".join(str(int(i)) for i in word) or "-"


def format_curve(curve):
    lines = [
        f"# ifs-curve level={curve.level} D={curve.D!r} sigma={curve.sigma!r} name={curve.name}"
    ]
    p = curve.points.tolist()
    for k in range(curve.n_segments):
        lines.append(
            f"{p[k][0]!r} {p[k][1]!r} {p[k + 1][0]!r} {p[k + 1][1]!r} "
            f"{float(curve.weights[k])!r} {_word(curve.words[k])}"
        )
    return "\n".join(lines) + "\n"


def write_curve(curve, path):
    return atomic_write(path, format_curve(curve))


def parse_curve(text, source="curve"):
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ArtifactError(f"{source}: empty curve file", path=source)
    match = HEADER.match(lines[0])
    if match is None:
        raise ArtifactError(f"{source}: bad curve header {lines[0]!r}", path=source)
    level = int(match["level"])
    starts, ends, weights, words = [], [], [], []
    for number, line in enumerate(lines[1:], start=2):
        fields = line.split()
        if len(fields) != 6:
            raise ArtifactError(f"{source}:{number}: expected 6 fields", path=source)
        x0, y0, x1, y1, weight = (float(v) for v in fields[:5])
        starts.append((x0, y0))
        ends.append((x1, y1))
        weights.append(weight)
        words.append([] if fields[5] == "-" else [int(i) for i in fields[5].split(".")])
    if not starts:
        raise ArtifactError(f"{source}: curve has no segments", path=source)
    points = np.array(starts + [ends[-1]], dtype=float)
    word_array = np.array(words, dtype=np.int64).reshape(len(words), level)
    return PrefractalCurve(
        level=level,
        points=points,
        words=word_array,
        weights=np.array(weights),
        sigma=float(match["sigma"]) if match["sigma"] else float("nan"),
        D=float(match["D"]),
        name=match["name"] or "ifs",
    )


def read_curve(path):
    return parse_curve(read_text(path, "curve file"), source=str(path))
