"""Study settings shared by every convergence study."""
import logging
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np
from django.conf import settings

from prefractal_lab.exceptions import ParameterError
from prefractal_lab.geometry.curves import generate_prefractal
from prefractal_lab.geometry.generators import ifs_from_spec
from prefractal_lab.geometry.ifs import sigma
from prefractal_lab.meshing.domains import square_domain
from prefractal_lab.meshing.mesher import refine, triangulate
from prefractal_lab.wave.params import WaveParams
from prefractal_lab.westervelt.params import WesterveltParams

logger = logging.getLogger(__name__)


def _bump(x, y):
    return np.sin(np.pi * x) * np.sin(np.pi * y)


# closed-form fields f(x, y) addressable by name from configuration files
FIELDS = {
    "one": lambda x, y: np.ones_like(np.asarray(x, dtype=float) + np.asarray(y, dtype=float)),
    "x": lambda x, y: np.asarray(x, dtype=float) + 0.0 * np.asarray(y, dtype=float),
    "y": lambda x, y: np.asarray(y, dtype=float) + 0.0 * np.asarray(x, dtype=float),
    "x2": lambda x, y: np.asarray(x, dtype=float) ** 2 + 0.0 * np.asarray(y, dtype=float),
    "bump": _bump,
    "gauss": lambda x, y: np.exp(-8.0 * ((x - 0.5) ** 2 + (y - 0.3) ** 2)),
}


def field_by_name(name):
    try:
        return FIELDS[name]
    except KeyError:
        raise ParameterError(f"unknown field {name!r}; expected one of {sorted(FIELDS)}") from None


@dataclass(frozen=True)
class StudyConfig:
    """Level range, per-level meshing and physics of a study over the square family.

    ``h`` caps the mesh size; each level meshes its prefractal with segments no
    longer than the shortest level-m segment. With ``refine_only`` the
    geometry stays at ``levels[0]`` and level ``i`` is the i-fold red
    refinement of the first mesh.
    """

    ifs: dict = field(default_factory=lambda: {"generator": "koch"})
    levels: tuple = (1, 2, 3)
    h: float = 0.1
    interior_h: float | None = None
    outward: bool = True
    c: float = 1.0
    nu: float = 0.5
    T: float = 2.0
    dt: float = 0.01
    alpha: float = 0.1
    a: float = 1.0
    sigma_scaling: bool = True
    source: str = "bump"
    amplitude: float = 0.01
    background: int | None = None
    refine_only: bool = False
    samples: int = 200
    seed: int = 0
    threshold: float = 10.0

    def __post_init__(self):
        levels = tuple(int(m) for m in self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise ParameterError("a study needs at least one level")
        if levels[0] < 0 or any(b <= a for a, b in zip(levels, levels[1:])):
            raise ParameterError(f"levels must be non-negative and increasing, got {list(levels)}")
        if not self.h > 0.0:
            raise ParameterError(f"mesh size h must be positive, got {self.h!r}")
        if self.interior_h is not None and not self.interior_h > 0.0:
            raise ParameterError(f"interior_h must be positive, got {self.interior_h!r}")
        if not self.amplitude >= 0.0:
            raise ParameterError(f"amplitude must be non-negative, got {self.amplitude!r}")
        field_by_name(self.source)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "levels" in data:
            data["levels"] = tuple(data["levels"])
        return cls(**data)

    def to_dict(self):
        data = asdict(self)
        data["levels"] = list(self.levels)
        return data

    @cached_property
    def system_ifs(self):
        return ifs_from_spec(self.ifs, levels=max(self.levels) + 4)

    @property
    def background_resolution(self):
        return settings.LAB_BACKGROUND_RESOLUTION if self.background is None else self.background

    def geometry_level(self, index):
        return self.levels[0] if self.refine_only else self.levels[index]

    def segment_length(self, m):
        return float(generate_prefractal(self.system_ifs, m).segment_lengths.min())

    def level_h(self, m):
        """Boundary-conforming mesh size at level ``m``."""
        return min(self.h, self.segment_length(m))

    def sigma_weight(self, m):
        return sigma(self.system_ifs, m) if self.sigma_scaling else 1.0

    def domain(self, m):
        return square_domain(self.system_ifs, m, outward=self.outward)

    def mesh(self, index):
        """Mesh of the ``index``-th level of the study."""
        m = self.geometry_level(index)
        h = self.level_h(m)
        interior = None if self.interior_h is None else max(self.interior_h, h)
        mesh = triangulate(self.domain(m), h, interior_h=interior)
        if self.refine_only:
            for _ in range(index):
                mesh = refine(mesh)
        return mesh

    @cached_property
    def omega_star(self):
        """Bounding box (xmin, ymin, xmax, ymax) of every level domain."""
        boxes = np.array([self.domain(self.geometry_level(i)).bounding_box for i in range(len(self.levels))])
        return (*boxes[:, :2].min(axis=0).tolist(), *boxes[:, 2:].max(axis=0).tolist())

    @property
    def wave(self):
        return WaveParams(c=self.c, nu=self.nu, T=self.T, dt=self.dt)

    def westervelt(self, m):
        return WesterveltParams(wave=self.wave, alpha=self.alpha, a=self.a, sigma_weight=self.sigma_weight(m))
