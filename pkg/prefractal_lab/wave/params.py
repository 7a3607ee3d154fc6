from dataclasses import dataclass

import numpy as np

from prefractal_lab.exceptions import ParameterError


@dataclass(frozen=True)
class WaveParams:
    """Wave speed ``c``, damping ``nu``, horizon ``T`` and step ``dt``.

    ``nu = 0`` is accepted so the spectral solver can run the undamped
    oscillator; every time stepper calls :meth:`require_damping`.
    """

    c: float
    nu: float
    T: float
    dt: float

    def __post_init__(self):
        if not self.c > 0.0:
            raise ParameterError(f"wave speed c must be positive, got {self.c!r}")
        if not self.nu >= 0.0:
            raise ParameterError(f"damping nu must be non-negative, got {self.nu!r}")
        if not 0.0 < self.dt <= self.T:
            raise ParameterError(f"need 0 < dt <= T, got dt={self.dt!r}, T={self.T!r}")
        if abs(self.steps * self.dt - self.T) > 1e-9 * self.T:
            raise ParameterError(f"T={self.T!r} is not a multiple of dt={self.dt!r}")

    @property
    def steps(self):
        return int(round(self.T / self.dt))

    @property
    def times(self):
        return self.dt * np.arange(self.steps + 1)

    def require_damping(self):
        if not self.nu > 0.0:
            raise ParameterError("the time stepper needs nu > 0")
        return self

    def with_nu(self, nu):
        return WaveParams(c=self.c, nu=nu, T=self.T, dt=self.dt)
