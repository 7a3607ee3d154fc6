"""Exception hierarchy shared by every lab app."""


class LabError(Exception):
    """Base class of all lab failures."""


class GeometryError(LabError):
    """Invalid similitude, IFS, polygon or environment."""


class LevelOverflowError(GeometryError):
    """A prefractal level would exceed the configured segment cap."""


class DomainError(LabError):
    """Invalid boundary layout or non-simple domain polygon."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class MeshError(LabError):
    """Degenerate polygon, mesher failure or unknown boundary tag."""


class MeshMismatchError(MeshError):
    """Two objects that must live on one mesh do not."""


class SolverError(LabError):
    """A linear, eigen or nonlinear solve failed."""


class SingularSystemError(SolverError):
    """The operator is singular on the free degrees of freedom."""


class ConvergenceError(SolverError):
    """An iteration did not converge; ``report`` holds the evidence."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DivergenceError(ConvergenceError):
    """Picard corrections grew on consecutive iterates."""


class DegeneracyError(SolverError):
    """The Westervelt coefficient 1 - alpha*u came too close to zero."""


class ArtifactError(LabError):
    """An upstream artifact file is missing or unreadable."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class ParameterError(LabError):
    """A physical or discretization parameter is out of range."""
