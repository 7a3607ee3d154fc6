"""Similitudes, iterated function systems and their self-similar measure."""
import logging
import math
from dataclasses import dataclass

import numpy as np

from prefractal_lab.exceptions import GeometryError

logger = logging.getLogger(__name__)

ENDPOINT_TOL = 1e-12


def contraction_sum(ratios, n=2):
    """Sum of d_i^(n-1) over a list of contraction ratios."""
    return float(np.sum(np.asarray(ratios, dtype=float) ** (n - 1)))


@dataclass(frozen=True)
class Similitude:
    """Contractive similitude ``p -> ratio * R(angle) F p + translation``.

    ``F`` is the reflection ``(x, y) -> (x, -y)`` when ``reflect`` is set and
    the identity otherwise.
    """

    ratio: float
    angle: float = 0.0
    reflect: bool = False
    translation: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise GeometryError(
                f"similitude ratio must lie in (0, 1), got {self.ratio!r}"
            )
        tx, ty = self.translation
        object.__setattr__(self, "translation", (float(tx), float(ty)))

    @property
    def linear(self):
        c, s = math.cos(self.angle), math.sin(self.angle)
        rotation = np.array([[c, -s], [s, c]])
        if self.reflect:
            rotation = rotation @ np.array([[1.0, 0.0], [0.0, -1.0]])
        return self.ratio * rotation

    @property
    def offset(self):
        return np.asarray(self.translation, dtype=float)

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return p @ self.linear.T + self.offset


def apply_similitude(similitude, p):
    """Image of the point (or ``(k, 2)`` array of points) ``p``."""
    return similitude(p)


@dataclass(frozen=True, eq=False)
class IfsSystem:
    """One or more families of similitudes sharing the base segment K0.

    ``environment`` lists the family label used at each refinement position.
    A single-family system may leave it empty: the family is used at every
    position.
    """

    families: dict
    environment: tuple = ()
    base: tuple = ((0.0, 0.0), (1.0, 0.0))
    name: str = "ifs"

    def __post_init__(self):
        if not self.families:
            raise GeometryError("an IFS needs at least one family of maps")
        families = {}
        for label, maps in self.families.items():
            maps = tuple(maps)
            if not maps:
                raise GeometryError(f"family {label!r} has no maps")
            if not all(isinstance(s, Similitude) for s in maps):
                raise GeometryError(f"family {label!r} holds a non-similitude")
            families[label] = maps
        sizes = {len(maps) for maps in families.values()}
        if len(sizes) > 1:
            raise GeometryError(
                f"mixture families must have equal sizes, got {sorted(sizes)}"
            )
        environment = tuple(self.environment)
        unknown = sorted({str(a) for a in environment if a not in families})
        if unknown:
            raise GeometryError(f"environment uses unknown families {unknown}")
        if len(families) > 1 and not environment:
            raise GeometryError("a mixture needs an environment sequence")
        base = tuple(tuple(float(c) for c in p) for p in self.base)
        if np.allclose(base[0], base[1]):
            raise GeometryError("base segment endpoints coincide")
        object.__setattr__(self, "families", families)
        object.__setattr__(self, "environment", environment)
        object.__setattr__(self, "base", base)
        for label, maps in families.items():
            self._check_chain(label, maps)

    def _check_chain(self, label, maps):
        a, b = (np.asarray(p) for p in self.base)
        scale = ENDPOINT_TOL * max(1.0, float(np.linalg.norm(b - a)))
        links = [(maps[0](a), a, "first map must fix A")]
        links += [
            (maps[j](b), maps[j + 1](a), f"maps {j + 1} and {j + 2} must chain")
            for j in range(len(maps) - 1)
        ]
        links.append((maps[-1](b), b, "last map must fix B"))
        for left, right, message in links:
            if np.linalg.norm(left - right) > scale:
                raise GeometryError(f"family {label!r}: {message}")

    @property
    def labels(self):
        return tuple(self.families)

    @property
    def is_mixture(self):
        return len(self.families) > 1

    def label_at(self, position):
        """Family label used at refinement position ``position`` (0-based)."""
        if position < len(self.environment):
            return self.environment[position]
        if not self.is_mixture:
            return self.labels[0]
        raise GeometryError(
            f"environment of length {len(self.environment)} does not reach "
            f"position {position + 1}"
        )

    def family_at(self, position):
        return self.families[self.label_at(position)]

    def ratios(self, label):
        return np.array([s.ratio for s in self.families[label]])

    def contraction_sum(self, label, n=2):
        return contraction_sum(self.ratios(label), n)

    def segment_count(self, m):
        count = 1
        for position in range(m):
            count *= len(self.family_at(position))
        return count


@dataclass(frozen=True)
class ContractionSum:
    D: float
    per_family: dict


def contraction_sum_D(ifs, n=2):
    """D = sum of d_i^(n-1); mixtures report every family alongside.

    For mixtures ``D`` is the value of the family used at the first
    refinement position.
    """
    per_family = {label: ifs.contraction_sum(label, n) for label in ifs.labels}
    first = ifs.label_at(0)
    return ContractionSum(D=per_family[first], per_family=per_family)


def sigma(ifs, m, n=2):
    """Boundary renormalization D^-m (product over the environment for mixtures)."""
    if m < 0:
        raise GeometryError(f"level must be non-negative, got {m}")
    value = 1.0
    for position in range(m):
        value /= ifs.contraction_sum(ifs.label_at(position), n)
    return value


def cell_measure(ifs, word, n=2):
    """mu of the cell psi_word(K); ``word`` holds 1-based map indices."""
    value = 1.0
    for position, index in enumerate(word):
        family = ifs.family_at(position)
        if not 1 <= index <= len(family):
            raise GeometryError(
                f"word index {index} at position {position + 1} is outside "
                f"1..{len(family)}"
            )
        label = ifs.label_at(position)
        value *= family[index - 1].ratio ** (n - 1) / ifs.contraction_sum(label, n)
    return value


def word_maps(ifs, start, stop, n=2):
    """Composite maps of every word over environment positions [start, stop).

    Returns ``(linear, offset, weights, words)`` with words in lexicographic
    order, ``linear`` of shape ``(k, 2, 2)``, ``offset`` ``(k, 2)``, the
    mu-weights of the words relative to the shifted environment and the
    1-based words themselves ``(k, stop - start)``.
    """
    linear = np.eye(2)[None, :, :]
    offset = np.zeros((1, 2))
    weights = np.ones(1)
    words = np.zeros((1, 0), dtype=np.int64)
    for position in range(start, stop):
        family = ifs.family_at(position)
        label = ifs.label_at(position)
        maps_linear = np.stack([s.linear for s in family])
        maps_offset = np.stack([s.offset for s in family])
        factors = ifs.ratios(label) ** (n - 1) / ifs.contraction_sum(label, n)
        k, size = linear.shape[0], len(family)
        new_offset = np.einsum("kab,jb->kja", linear, maps_offset) + offset[:, None, :]
        linear = np.einsum("kab,jbc->kjac", linear, maps_linear).reshape(k * size, 2, 2)
        offset = new_offset.reshape(k * size, 2)
        weights = (weights[:, None] * factors[None, :]).reshape(k * size)
        letters = np.arange(1, size + 1, dtype=np.int64)
        words = np.concatenate(
            [np.repeat(words, size, axis=0), np.tile(letters, k)[:, None]], axis=1
        )
    return linear, offset, weights, words
