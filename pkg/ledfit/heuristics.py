"""
Search Heuristics

This module holds the derivative-free stages that produce starting
points for Newton's method:

- uniform random sampling of the discrete parameter grid, keeping the
  best candidates in a CandidatePool (S-/L-Newton and the plain RAN
  stage)
- the multi-start iterative improvement walk (IF) over the 512-point
  neighbourhood with morphing and refined step sizes

``run_config`` dispatches one experiment configuration on one instance.
"""

import logging
import math
import time
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from ledfit import kernels
from ledfit.errors import ConfigError, LedFitError
from ledfit.model import ParamsLike, as_vector, objective
from ledfit.newton import newton_optimize
from ledfit.state import (
    A_RANGE,
    B_RANGE,
    C_RANGE,
    N_PARAMS,
    AlgorithmConfig,
    FitResult,
    IFOptions,
    IntensitySamples,
    ModelParams,
    NewtonOptions,
    ObjectiveValue,
    RunRecord,
    Termination,
)

logger = logging.getLogger(__name__)

LOWER = np.array([A_RANGE[0]] * 3 + [B_RANGE[0]] * 3 + [C_RANGE[0]] * 3)
UPPER = np.array([A_RANGE[1]] * 3 + [B_RANGE[1]] * 3 + [C_RANGE[1]] * 3)

NEIGHBOURHOOD_SIZE = 2**N_PARAMS
# Random candidates are drawn and scored in chunks of this many rows.
CHUNK_SIZE = 65_536


def random_param_matrix(rng: np.random.Generator, m: int) -> np.ndarray:
    """
    Draw ``m`` parameter vectors uniformly from the discrete search grid.

    a in {0, 0.001, ..., 1}, b in {-90, -89.9, ..., 90}, c in {0, 1, ..., 100}.

    Returns:
        Array of shape (m, 9)
    """
    a = rng.integers(0, 1001, size=(m, 3)) / 1000.0
    b = (rng.integers(0, 1801, size=(m, 3)) - 900) / 10.0
    c = rng.integers(0, 101, size=(m, 3)).astype(float)
    return np.hstack([a, b, c])


def random_params(rng: np.random.Generator) -> ModelParams:
    return ModelParams.from_vector(random_param_matrix(rng, 1)[0])


def batch_eval_e(X: np.ndarray, s: IntensitySamples) -> np.ndarray:
    """E for every row of an (M, 9) parameter matrix."""
    X = np.ascontiguousarray(X, dtype=float)
    return kernels.batch_energy(X, s.phi, s.candela, s.i_max)


def if_neighbors(p: ParamsLike, steps: Tuple[float, float, float]) -> np.ndarray:
    """
    All 512 sign combinations (a_k +- da, b_k +- db, c_k +- dc).

    Row m takes +step for component j when bit j of m is set. Values are
    clipped to the canonical ranges, so duplicates may appear at corners.

    Returns:
        Array of shape (512, 9)
    """
    x = as_vector(p)
    bits = (np.arange(NEIGHBOURHOOD_SIZE)[:, None] >> np.arange(N_PARAMS)) & 1
    signs = 2.0 * bits - 1.0
    delta = np.repeat(np.asarray(steps, dtype=float), 3)
    return np.clip(x + signs * delta, LOWER, UPPER)


class CandidatePool:
    """
    The ``pool_size`` best candidates seen so far, sorted ascending by E.

    Ties keep the order in which candidates were offered.
    """

    def __init__(self, pool_size: int = 100):
        if pool_size <= 0:
            raise ValueError("pool_size must be positive")
        self.pool_size = pool_size
        self.vectors = np.empty((0, N_PARAMS))
        self.values = np.empty(0)

    def offer(self, X: np.ndarray, E: np.ndarray) -> None:
        vectors = np.vstack([self.vectors, X])
        values = np.concatenate([self.values, E])
        order = np.argsort(values, kind="stable")[: self.pool_size]
        self.vectors = vectors[order]
        self.values = values[order]

    def __len__(self) -> int:
        return int(self.values.size)

    def entries(self) -> List[Tuple[ModelParams, float]]:
        return [
            (ModelParams.from_vector(x), float(e)) for x, e in zip(self.vectors, self.values)
        ]

    @property
    def best(self) -> Tuple[ModelParams, float]:
        if len(self) == 0:
            raise LedFitError("candidate pool is empty")
        return ModelParams.from_vector(self.vectors[0]), float(self.values[0])


def random_search(
    s: IntensitySamples,
    m: int,
    rng: np.random.Generator,
    pool_size: int = 100,
) -> CandidatePool:
    """
    Score ``m`` uniform random candidates and keep the best ones.

    Args:
        s: Measured samples
        m: Number of random candidates
        rng: Random generator
        pool_size: Candidates to keep

    Returns:
        CandidatePool of the best candidates
    """
    pool = CandidatePool(pool_size)
    remaining = m
    while remaining > 0:
        size = min(CHUNK_SIZE, remaining)
        X = random_param_matrix(rng, size)
        pool.offer(X, batch_eval_e(X, s))
        remaining -= size
    return pool


def if_search(
    p0: ParamsLike,
    s: IntensitySamples,
    opts: IFOptions,
    rng: Optional[np.random.Generator] = None,
) -> FitResult:
    """
    Run one IF walk from ``p0``, spending ``opts.steps_per_start`` evaluations.

    Args:
        p0: Starting point
        s: Measured samples
        opts: Step sizes, morphing and budget settings
        rng: Generator for the neighbour choices (defaults to one seeded
            with ``opts.rng_seed``)

    Returns:
        FitResult for the best point reached
    """
    if rng is None:
        rng = np.random.default_rng(opts.rng_seed)

    # The evaluation of p0 counts toward the budget.
    choices = rng.integers(0, NEIGHBOURHOOD_SIZE, size=opts.steps_per_start - 1)
    x, _, evaluations, moves = kernels.if_walk(
        as_vector(p0).copy(),
        s.phi,
        s.candela,
        s.i_max,
        np.array(opts.initial_steps, dtype=float),
        choices,
        LOWER,
        UPPER,
        opts.trials_before_morph,
        opts.morph_limit,
        opts.refine_factor,
    )
    return replace(_as_result(x, s), iterations=int(moves), evaluations=int(evaluations))


@dataclass
class SearchOutcome:
    """Best result of one configuration run plus its bookkeeping."""

    best: FitResult
    # Best point of the derivative-free stage, before any Newton refinement.
    pre_newton: ObjectiveValue
    evaluations: int
    newton_iterations: int = 0
    newton_converged: int = 0
    converged_iterations: int = 0


def _refine(
    starts: List[ParamsLike],
    s: IntensitySamples,
    newton_opts: NewtonOptions,
    outcome: SearchOutcome,
) -> List[FitResult]:
    """Newton on every start, tallying iterations into ``outcome``."""
    results = []
    for p in starts:
        result = newton_optimize(p, s, newton_opts)
        outcome.newton_iterations += result.iterations
        if result.termination is Termination.CONVERGED:
            outcome.newton_converged += 1
            outcome.converged_iterations += result.iterations
        results.append(result)
    return results


def _as_result(x: np.ndarray, s: IntensitySamples) -> FitResult:
    value = objective(x, s)
    return FitResult(
        params=ModelParams.from_vector(x),
        rms=value.rms,
        rmsp=value.rmsp,
        e=value.e,
        iterations=0,
        termination=Termination.BUDGET_EXHAUSTED,
    )


def search(
    cfg: AlgorithmConfig,
    s: IntensitySamples,
    seed: int,
    newton_opts: NewtonOptions = NewtonOptions(),
) -> SearchOutcome:
    """
    Run one configuration and keep its best point.

    "random-newton" refines the ``pool_size`` best of ``multi_starts``
    random candidates with Newton; "random" returns the best candidate;
    "if" runs ``multi_starts`` IF walks of ``steps_per_start``
    evaluations, start i seeded with (seed, i), each refined by Newton
    when ``cfg.newton`` is set.

    Returns:
        SearchOutcome whose ``best.evaluations`` counts heuristic
        evaluations only
    """
    if cfg.method in ("random-newton", "random"):
        pool = random_search(s, cfg.multi_starts, np.random.default_rng(seed), cfg.pool_size)
        candidate, _ = pool.best
        first = _as_result(as_vector(candidate), s)
        outcome = SearchOutcome(first, first.objective, cfg.multi_starts)
        if cfg.method == "random-newton" and cfg.newton:
            finals = _refine(list(pool.vectors), s, newton_opts, outcome)
        else:
            finals = [first]

    elif cfg.method == "if":
        opts = IFOptions(multi_starts=cfg.multi_starts, steps_per_start=cfg.steps_per_start)
        walks = []
        for start in range(cfg.multi_starts):
            rng = np.random.default_rng([seed, start])
            walks.append(if_search(random_params(rng), s, opts, rng))
        best_walk = min(walks, key=lambda w: w.e)
        outcome = SearchOutcome(best_walk, best_walk.objective, sum(w.evaluations for w in walks))
        if cfg.newton:
            finals = _refine([w.params for w in walks], s, newton_opts, outcome)
        else:
            finals = walks

    else:
        raise ConfigError(f"unknown method {cfg.method!r}")

    # min() keeps the earliest entry among equal E values.
    best = min(finals, key=lambda r: r.e)
    outcome.best = replace(best, evaluations=outcome.evaluations)
    return outcome


def run_config(
    cfg: AlgorithmConfig,
    s: IntensitySamples,
    seed: int,
    instance_id: str = "",
    repeat: int = 0,
    newton_opts: NewtonOptions = NewtonOptions(),
) -> RunRecord:
    """
    Run one experiment configuration on one instance.

    Args:
        cfg: Configuration (random-newton, if or random)
        s: Measured samples
        seed: Seed of this run
        instance_id: Label copied into the record
        repeat: Repeat index copied into the record
        newton_opts: Options for every Newton refinement

    Returns:
        RunRecord of the best point found
    """
    started = time.perf_counter()
    outcome = search(cfg, s, seed, newton_opts)
    elapsed = time.perf_counter() - started
    best = outcome.best
    logger.info(
        "%s on %s: rmsp %.6g after %d evaluations",
        cfg.name,
        instance_id or "-",
        best.rmsp,
        outcome.evaluations,
    )
    refined = cfg.newton and cfg.method != "random"
    return RunRecord(
        config_name=cfg.name,
        instance_id=instance_id,
        best_rmsp=best.rmsp,
        best_params=best.params,
        evaluations=outcome.evaluations,
        newton_iterations=outcome.newton_iterations,
        wall_seconds=elapsed,
        seed=seed,
        repeat=repeat,
        best_rms=best.rms,
        pre_newton_rmsp=outcome.pre_newton.rmsp if refined else math.nan,
        newton_converged=outcome.newton_converged,
        converged_iterations=outcome.converged_iterations,
    )
