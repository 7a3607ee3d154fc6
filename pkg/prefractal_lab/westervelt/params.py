from dataclasses import dataclass

from prefractal_lab.exceptions import ParameterError
from prefractal_lab.fem.assembly import assemble
from prefractal_lab.wave.params import WaveParams


@dataclass(frozen=True)
class WesterveltParams:
    """Linear wave parameters plus the nonlinearity ``alpha``.

    ``a`` is the Robin coefficient and ``sigma_weight`` the boundary
    renormalization of the level, so the Robin term is ``a * sigma * R``.
    """

    wave: WaveParams
    alpha: float
    a: float = 0.0
    sigma_weight: float = 1.0

    def __post_init__(self):
        if not self.alpha >= 0.0:
            raise ParameterError(f"nonlinearity alpha must be non-negative, got {self.alpha!r}")
        if not self.a >= 0.0:
            raise ParameterError(f"robin coefficient a must be non-negative, got {self.a!r}")
        if not self.sigma_weight > 0.0:
            raise ParameterError(f"sigma weight must be positive, got {self.sigma_weight!r}")

    def system(self, mesh):
        return assemble(mesh, a=self.a, sigma_weight=self.sigma_weight)

    def with_alpha(self, alpha):
        return WesterveltParams(wave=self.wave, alpha=alpha, a=self.a, sigma_weight=self.sigma_weight)

    def with_sigma(self, sigma_weight):
        return WesterveltParams(wave=self.wave, alpha=self.alpha, a=self.a, sigma_weight=sigma_weight)
