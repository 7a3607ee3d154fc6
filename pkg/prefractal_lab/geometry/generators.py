"""Named generators: Koch, square-Koch (Minkowski), Koch mixtures, tents."""
import math

import numpy as np

from prefractal_lab.exceptions import GeometryError

from .environment import EnvironmentRule, build_environment
from .ifs import IfsSystem, Similitude


def chain_family(vertices, reflect=False):
    """Maps sending K0 = [(0,0), (1,0)] onto consecutive polyline segments."""
    points = np.asarray(vertices, dtype=float)
    if reflect:
        points = points * np.array([1.0, -1.0])
    maps = []
    for p, q in zip(points[:-1], points[1:]):
        dx, dy = q - p
        maps.append(
            Similitude(
                ratio=float(math.hypot(dx, dy)),
                angle=float(math.atan2(dy, dx)),
                translation=(p[0], p[1]),
            )
        )
    return tuple(maps)


def koch_apex_height(l):
    if not 2.0 < l < 4.0:
        raise GeometryError(f"Koch parameter l must lie in (2, 4), got {l!r}")
    return math.sqrt(1.0 / l**2 - (0.5 - 1.0 / l) ** 2)


def koch_vertices(l=3.0):
    h = koch_apex_height(l)
    return [(0.0, 0.0), (1.0 / l, 0.0), (0.5, h), (1.0 - 1.0 / l, 0.0), (1.0, 0.0)]


def koch(l=3.0, reflect=False):
    """Four-map Koch generator with contraction factor 1/l."""
    return IfsSystem(families={1: chain_family(koch_vertices(l), reflect)}, name="koch")


MINKOWSKI_VERTICES = [
    (0.0, 0.0),
    (0.25, 0.0),
    (0.25, 0.25),
    (0.5, 0.25),
    (0.5, 0.0),
    (0.5, -0.25),
    (0.75, -0.25),
    (0.75, 0.0),
    (1.0, 0.0),
]


def minkowski(reflect=False):
    """Eight-map square-Koch generator, ratio 1/4 (right-up-right-down-down-right-up-right)."""
    return IfsSystem(
        families={1: chain_family(MINKOWSKI_VERTICES, reflect)}, name="minkowski"
    )


def tent(ratio=0.9):
    """Two maps of equal ratio meeting at an apex; overlapping for large ratios."""
    if not 0.5 < ratio < 1.0:
        raise GeometryError(f"tent ratio must lie in (1/2, 1), got {ratio!r}")
    apex = (0.5, math.sqrt(ratio**2 - 0.25))
    return IfsSystem(
        families={1: chain_family([(0.0, 0.0), apex, (1.0, 0.0)])}, name="tent"
    )


def koch_mixture(l=(3.0, 3.5), environment=(1, 2), reflect=False):
    """Scale-irregular Koch curve driven by an environment over two families."""
    families = {
        label: chain_family(koch_vertices(value), reflect)
        for label, value in zip((1, 2), l)
    }
    return IfsSystem(
        families=families, environment=tuple(environment), name="koch-mixture"
    )


def from_maps(maps, environment=(), name="explicit"):
    """Single-family system from explicit map descriptions."""
    family = tuple(
        Similitude(
            ratio=float(spec["ratio"]),
            angle=float(spec.get("angle", 0.0)),
            reflect=bool(spec.get("reflect", False)),
            translation=tuple(spec.get("translation", (0.0, 0.0))),
        )
        for spec in maps
    )
    return IfsSystem(families={1: family}, environment=tuple(environment), name=name)


def rhombus(height, base=((0.0, 0.0), (1.0, 0.0))):
    """Convex rhombus with diagonal K0 and half-width ``height``."""
    a, b = (np.asarray(p, dtype=float) for p in base)
    mid = 0.5 * (a + b)
    direction = b - a
    normal = np.array([-direction[1], direction[0]]) / np.linalg.norm(direction)
    return np.array([a, mid - height * normal, b, mid + height * normal])


def osc_polygons(ifs):
    """Nested convex polygons (O, O') used for the open set check of a preset."""
    if ifs.name == "minkowski":
        height = 0.5
    elif ifs.name == "koch":
        l = 1.0 / ifs.families[1][0].ratio
        height = koch_apex_height(l)
    elif ifs.name == "koch-mixture":
        height = max(
            koch_apex_height(1.0 / family[0].ratio) for family in ifs.families.values()
        )
    else:
        raise GeometryError(f"no reference polygons for generator {ifs.name!r}")
    return rhombus(height, ifs.base), rhombus(2.0 * height, ifs.base)


GENERATORS = {
    "koch": koch,
    "minkowski": minkowski,
    "koch-mixture": koch_mixture,
    "tent": tent,
}


def environment_from_spec(spec, length):
    """Label sequence of ``length`` positions from a rule description.

    ``spec`` is a list of labels, or a mapping with ``kind`` in
    ``constant | periodic | frequency`` and the matching ``label``,
    ``pattern`` or ``p`` (label -> frequency) and ``c0``.
    """
    if isinstance(spec, (list, tuple)):
        return tuple(int(label) for label in spec)
    kind = spec.get("kind")
    if kind == "constant":
        rule = EnvironmentRule.constant(int(spec.get("label", 1)))
    elif kind == "periodic":
        rule = EnvironmentRule.periodic(int(label) for label in spec.get("pattern", ()))
    elif kind == "frequency":
        p = {int(label): float(value) for label, value in spec.get("p", {}).items()}
        rule = EnvironmentRule.frequency(p, c0=float(spec.get("c0", 1.0)))
    else:
        raise GeometryError(f"unknown environment rule {kind!r}")
    return build_environment(rule, length).sequence


def ifs_from_spec(spec, levels=1):
    """IFS described by ``{"generator": name, "params": {...}}``.

    ``generator = "explicit"`` takes ``maps`` (ratio, angle, reflect,
    translation). Mixtures take an ``environment`` rule that is expanded to
    ``levels`` positions.
    """
    name = spec.get("generator", "koch")
    params = dict(spec.get("params") or {})
    environment = spec.get("environment")
    if name == "explicit":
        sequence = environment_from_spec(environment, levels) if environment else ()
        return from_maps(spec.get("maps", ()), environment=sequence)
    if name not in GENERATORS:
        raise GeometryError(f"unknown generator {name!r}; expected one of {sorted(GENERATORS)}")
    if name == "koch-mixture":
        if "l" in params:
            params["l"] = tuple(float(v) for v in params["l"])
        if environment is not None:
            params["environment"] = environment_from_spec(environment, max(levels, 1))
    return GENERATORS[name](**params)
