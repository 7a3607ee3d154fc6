"""Fixed-point iteration u = u* + v, v <- L^-1 Phi(u* + v), on the linear damped-wave solver."""
import logging
import math
from dataclasses import dataclass, field

from django.conf import settings

from prefractal_lab.exceptions import ConvergenceError, DivergenceError
from prefractal_lab.wave.newmark import NewmarkIntegrator
from prefractal_lab.wave.trajectory import Trajectory, x_norm

logger = logging.getLogger(__name__)

GROWTH_LIMIT = 3
NORMS_NOTE = "X = H1(V-laplacian) + H2(L2) in time, unweighted; Y = l2 in time of L2"


def nonlinear_source(traj, alpha):
    """Nodal samples of alpha * (u u_tt + u_t^2)."""
    return alpha * (traj.u * traj.a + traj.v * traj.v)


@dataclass
class ContractionReport:
    B: float | None = None
    C_nu: float | None = None
    r_star: float | None = None
    alpha: float = 0.0
    corrections: list = field(default_factory=list)
    converged: bool = False
    linear_norm: float | None = None
    solution_norm: float | None = None
    ball_radius: float | None = None
    norms: str = NORMS_NOTE

    def __post_init__(self):
        if self.ball_radius is None and self.linear_norm is not None:
            self.ball_radius = 2.0 * self.linear_norm

    @property
    def iterations(self):
        return len(self.corrections)

    @property
    def ratios(self):
        return [
            b / a if a > 0.0 else math.nan for a, b in zip(self.corrections, self.corrections[1:])
        ]

    @property
    def within_smallness(self):
        """||u*||_X <= r*, or ``None`` without constants."""
        if self.r_star is None or self.linear_norm is None:
            return None
        return self.linear_norm <= self.r_star

    @property
    def within_ball(self):
        """||u||_X <= ball_radius (2 ||u*||_X unless given) for the final iterate."""
        if self.solution_norm is None or self.ball_radius is None:
            return None
        return self.solution_norm <= self.ball_radius * (1.0 + 1e-12)


def _growing(corrections):
    tail = corrections[-(GROWTH_LIMIT + 1) :]
    return len(tail) == GROWTH_LIMIT + 1 and all(b > a for a, b in zip(tail, tail[1:]))


def picard_solve(system, params, u0=None, u1=None, f=None, tol=None, max_iters=None, constants=None):
    """Westervelt trajectory by Picard iteration on the factorized linear stepper.

    ``constants`` is an optional :class:`ConstantEstimate` whose B, C_nu and
    r* are copied into the report and checked against the linear solution.
    """
    tol = settings.LAB_PICARD_TOL if tol is None else tol
    max_iters = settings.LAB_PICARD_MAXITER if max_iters is None else max_iters
    integrator = NewmarkIntegrator(system, params.wave)
    linear = integrator.run(u0, u1, f)
    report = ContractionReport(alpha=params.alpha, linear_norm=x_norm(linear))
    if constants is not None:
        report.B, report.C_nu, report.r_star = constants.B, constants.C_nu, constants.r_star
        if not report.within_smallness:
            logger.warning(
                "data norm %.6g exceeds the smallness radius r*=%.6g; convergence is not guaranteed",
                report.linear_norm,
                report.r_star,
            )

    v = Trajectory.zeros(system, linear.times)
    for k in range(1, max_iters + 1):
        following = integrator.run(f=nonlinear_source(linear + v, params.alpha))
        correction = x_norm(following - v)
        report.corrections.append(correction)
        v = following
        logger.debug("Picard iterate %d: correction %.6e", k, correction)
        if not math.isfinite(correction) or _growing(report.corrections):
            raise DivergenceError(
                f"Picard corrections grew on {GROWTH_LIMIT} consecutive iterates", report=report
            )
        if correction <= tol:
            report.converged = True
            break
    else:
        raise ConvergenceError(
            f"Picard iteration did not reach {tol:g} in {max_iters} iterates", report=report
        )

    solution = linear + v
    report.solution_norm = x_norm(solution)
    if report.within_ball is False:
        logger.warning(
            "final norm %.6g left the ball of radius %.6g",
            report.solution_norm,
            report.ball_radius,
        )
    logger.info("Picard converged in %d iterates (last correction %.3e)", report.iterations, correction)
    return solution, report
