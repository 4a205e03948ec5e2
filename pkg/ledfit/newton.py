"""
Damped Newton Optimizer

Iterates x <- x - alpha d, where d solves M(x) d = R(x) with R the
gradient of E and M either the Gauss-Newton matrix or the full Hessian.
The Gauss-Newton direction is always tried; the Hessian direction is
tried as well wherever the Hessian is positive definite, and the
iteration keeps whichever reaches the lower E. The step length alpha
starts at 1 and is halved until E decreases, so E never increases over
a run.
"""

import logging
import warnings
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, LinAlgWarning, cho_factor, lu_factor, lu_solve

from ledfit.derivatives import (
    TermCache,
    build_cache,
    gauss_newton_from_cache,
    gradient_from_cache,
    hessian_from_cache,
)
from ledfit.errors import SingularSystemError
from ledfit.model import ParamsLike, as_vector, eval_e, objective
from ledfit.state import (
    PARAM_WIDTHS,
    FitResult,
    IntensitySamples,
    ModelParams,
    NewtonOptions,
    Termination,
)

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-14
# A parameter whose Gauss-Newton diagonal falls below this fraction of
# the largest diagonal entry has no influence on E and is held fixed.
FREEZE_TOLERANCE = 1e-24
BOUNDARY_NUDGE = 1e-9
# Diagonal shift for a scaled Gauss-Newton system that cannot be solved as is.
LEVENBERG_SHIFT = 1e-8
# E at or below this fraction of mean(I^2) is at the rounding floor.
STAGNATION_FLOOR = 1e-24


def solve_linear_9(J: np.ndarray, R: np.ndarray) -> np.ndarray:
    """
    Solve J d = R by Gaussian elimination with partial pivoting.

    Args:
        J: Square system matrix (9x9, or smaller when parameters are frozen)
        R: Right-hand side

    Returns:
        The delta vector d

    Raises:
        SingularSystemError: If J is not finite or a pivot is below
            1e-14 * ||J||
    """
    J = np.asarray(J, dtype=float)
    R = np.asarray(R, dtype=float)
    if not (np.all(np.isfinite(J)) and np.all(np.isfinite(R))):
        raise SingularSystemError("system contains non-finite entries")

    norm = np.linalg.norm(J, np.inf)
    if norm == 0.0:
        raise SingularSystemError("system matrix is zero")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(J, check_finite=False)

    smallest = float(np.min(np.abs(np.diag(lu))))
    if smallest < PIVOT_TOLERANCE * norm:
        raise SingularSystemError(f"pivot {smallest:.3e} below tolerance (||J|| = {norm:.3e})")
    return lu_solve((lu, piv), R, check_finite=False)


def _nudge_off_boundary(x: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Move any b_k with |phi_i - b_k| exactly 90 degrees onto the clamped side."""
    x = x.copy()
    for k in range(3):
        raw = phi - x[3 + k]
        if np.any(raw == 90.0):
            x[3 + k] -= BOUNDARY_NUDGE
        elif np.any(raw == -90.0):
            x[3 + k] += BOUNDARY_NUDGE
    return x


def _free_parameters(gauss_newton: np.ndarray) -> np.ndarray:
    diag = np.diag(gauss_newton)
    scale = diag.max()
    if not np.isfinite(scale) or scale <= 0.0:
        return np.zeros(diag.shape, dtype=bool)
    return diag > FREEZE_TOLERANCE * scale


def _line_search(
    x: np.ndarray,
    e: float,
    d: np.ndarray,
    s: IntensitySamples,
    halvings: int,
) -> Tuple[Optional[np.ndarray], float, int]:
    """Backtrack from alpha = 1; returns (point or None, E, evaluations)."""
    alpha = 1.0
    for attempt in range(halvings + 1):
        trial = _nudge_off_boundary(x - alpha * d, s.phi)
        e_trial = eval_e(trial, s)
        if e_trial < e:
            return trial, e_trial, attempt + 1
        alpha *= 0.5
    return None, e, halvings + 1


def _positive_definite(matrix: np.ndarray) -> bool:
    try:
        cho_factor(matrix, check_finite=False)
    except LinAlgError:
        return False
    return True


def _directions(
    cache: TermCache,
    grad: np.ndarray,
    gauss_newton: np.ndarray,
    free: np.ndarray,
    opts: NewtonOptions,
) -> List[np.ndarray]:
    """
    Candidate Newton directions for one iteration.

    Systems are solved in Jacobi-scaled form, D M D y = D R with
    D = diag(GN)^-1/2 over the free parameters, and d = D y. With
    ``opts.gauss_newton`` the Gauss-Newton direction comes first and the
    full Hessian direction is added only where the scaled Hessian is
    positive definite. When neither system can be solved, a
    Levenberg-shifted Gauss-Newton system is used instead.

    Returns:
        Directions in parameter space, possibly empty
    """
    index = np.ix_(free, free)
    scale = 1.0 / np.sqrt(np.diag(gauss_newton)[free])
    outer = np.outer(scale, scale)
    rhs = grad[free] * scale

    gn_scaled = gauss_newton[index] * outer
    h_scaled = hessian_from_cache(cache)[index] * outer
    if opts.gauss_newton:
        systems = [gn_scaled]
        if _positive_definite(h_scaled):
            systems.append(h_scaled)
    else:
        systems = [h_scaled]

    directions = []
    for matrix in systems:
        try:
            y = solve_linear_9(matrix, rhs)
        except SingularSystemError as exc:
            logger.debug("singular system: %s", exc)
            continue
        d = np.zeros_like(grad)
        d[free] = y * scale
        directions.append(d)

    if not directions and opts.gauss_newton:
        shifted = gn_scaled + LEVENBERG_SHIFT * np.eye(len(rhs))
        try:
            y = solve_linear_9(shifted, rhs)
        except SingularSystemError as exc:
            logger.debug("shifted system still singular: %s", exc)
        else:
            d = np.zeros_like(grad)
            d[free] = y * scale
            directions.append(d)
    return directions


def newton_optimize(
    p0: ParamsLike,
    s: IntensitySamples,
    opts: NewtonOptions = NewtonOptions(),
) -> FitResult:
    """
    Run the damped Newton iteration from ``p0``.

    Each iteration line-searches every candidate direction and keeps
    the one reaching the lowest E. The run converges when the smallest
    scaled step is below ``opts.delta_tolerance``, or when E has reached
    the rounding floor of the instance.

    Args:
        p0: Initial parameters
        s: Measured samples
        opts: Iteration limits and tolerances

    Returns:
        FitResult for the best point visited
    """
    x = as_vector(p0).copy()
    e = eval_e(x, s)
    evaluations = 1

    nudged = _nudge_off_boundary(x, s.phi)
    if not np.array_equal(nudged, x):
        e_nudged = eval_e(nudged, s)
        evaluations += 1
        if e_nudged <= e:
            x, e = nudged, e_nudged

    floor = STAGNATION_FLOOR * float(np.mean(np.square(s.candela)))
    iterations = 0
    step_norms: List[float] = []
    termination = Termination.MAX_ITERATIONS

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(opts.max_iterations):
            if e <= floor:
                termination = Termination.CONVERGED
                break
            cache = build_cache(x, s)
            grad = gradient_from_cache(cache)
            gauss_newton = gauss_newton_from_cache(cache)
            free = _free_parameters(gauss_newton)
            if not free.any():
                termination = Termination.CONVERGED
                break

            directions = _directions(cache, grad, gauss_newton, free, opts)
            if not directions:
                termination = Termination.SINGULAR_SYSTEM
                break
            norms = [float(np.linalg.norm(d / PARAM_WIDTHS)) for d in directions]
            if min(norms) < opts.delta_tolerance:
                step_norms.append(min(norms))
                termination = Termination.CONVERGED
                break

            best = None
            for d, norm in zip(directions, norms):
                if grad @ d <= 0.0:
                    continue
                trial, e_trial, used = _line_search(x, e, d, s, opts.max_damping_halvings)
                evaluations += used
                if trial is not None and (best is None or e_trial < best[1]):
                    best = (trial, e_trial, norm)

            if best is None:
                termination = Termination.DAMPING_EXHAUSTED
                break
            x, e, norm = best
            step_norms.append(norm)
            iterations += 1
            logger.debug("iteration %d: E = %.6e, step = %.3e", iterations, e, norm)

    value = objective(x, s)
    return FitResult(
        params=ModelParams.from_vector(x),
        rms=value.rms,
        rmsp=value.rmsp,
        e=value.e,
        iterations=iterations,
        termination=termination,
        evaluations=evaluations,
        step_norms=step_norms,
    )
