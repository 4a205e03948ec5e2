import numpy as np
import pytest

from ledfit import kernels
from ledfit.errors import ConfigError, LedFitError
from ledfit.generator import generate_dataset
from ledfit.heuristics import (
    LOWER,
    NEIGHBOURHOOD_SIZE,
    UPPER,
    CandidatePool,
    batch_eval_e,
    if_neighbors,
    if_search,
    random_param_matrix,
    random_params,
    random_search,
    run_config,
    search,
)
from ledfit.model import eval_e, rmsp
from ledfit.newton import newton_optimize
from ledfit.state import AlgorithmConfig, IFOptions, ModelParams, NewtonOptions, Termination


def test_batch_energy_matches_model(exact_samples):
    X = random_param_matrix(np.random.default_rng(0), 200)
    values = batch_eval_e(X, exact_samples)
    expected = [eval_e(x, exact_samples) for x in X]
    np.testing.assert_allclose(values, expected, rtol=1e-10)


def test_kernel_handles_right_angle_terms(exact_samples):
    # b = 0 puts phi = 90 exactly on the clamp; c = 0 there counts as 0 ** 0 = 1
    x = np.array([0.3, 0.2, 0.1, 0.0, 0.0, 40.0, 0.0, 3.0, 5.0])
    assert kernels.energy(x, exact_samples.phi, exact_samples.candela, 1000.0) == pytest.approx(
        eval_e(x, exact_samples), rel=1e-12
    )


def test_random_params_on_grid():
    X = random_param_matrix(np.random.default_rng(1), 10_000)
    a, b, c = X[:, 0:3], X[:, 3:6], X[:, 6:9]
    assert (X >= LOWER).all() and (X <= UPPER).all()
    np.testing.assert_allclose(a * 1000, np.round(a * 1000), atol=1e-9)
    np.testing.assert_allclose(b * 10, np.round(b * 10), atol=1e-9)
    np.testing.assert_array_equal(c, np.round(c))


def test_random_params_means_near_grid_midpoint():
    X = random_param_matrix(np.random.default_rng(2), 1_000_000)
    n = X.shape[0]
    for block, (mid, width) in enumerate([(0.5, 1.0), (0.0, 180.0), (50.0, 100.0)]):
        sigma = width / np.sqrt(12.0) / np.sqrt(n)
        means = X[:, 3 * block : 3 * block + 3].mean(axis=0)
        assert np.all(np.abs(means - mid) < 4 * sigma)


def test_random_params_reproducible():
    first = random_params(np.random.default_rng(9))
    second = random_params(np.random.default_rng(9))
    assert first == second
    assert first.in_canonical_ranges()


def test_neighbourhood_has_512_sign_combinations(truth):
    neighbours = if_neighbors(truth, (0.01, 1.0, 10.0))
    assert neighbours.shape == (NEIGHBOURHOOD_SIZE, 9)
    x = truth.to_vector()
    delta = np.repeat([0.01, 1.0, 10.0], 3)
    np.testing.assert_allclose(neighbours[0], np.clip(x - delta, LOWER, UPPER))
    np.testing.assert_allclose(neighbours[-1], np.clip(x + delta, LOWER, UPPER))
    assert len({tuple(row) for row in neighbours}) == NEIGHBOURHOOD_SIZE


def test_neighbourhood_clamped_at_corner():
    corner = ModelParams(a=(0, 0, 0), b=(-90, -90, -90), c=(0, 0, 0))
    neighbours = if_neighbors(corner, (0.01, 1.0, 10.0))
    assert neighbours.shape == (512, 9)
    assert (neighbours >= LOWER).all()


def test_neighbourhood_with_zero_steps(truth):
    neighbours = if_neighbors(truth, (0.0, 0.0, 0.0))
    np.testing.assert_array_equal(neighbours, np.tile(truth.to_vector(), (512, 1)))


def test_candidate_pool_keeps_best_sorted():
    pool = CandidatePool(pool_size=3)
    X = np.arange(45, dtype=float).reshape(5, 9)
    pool.offer(X, np.array([5.0, 1.0, 4.0, 1.0, 3.0]))
    assert len(pool) == 3
    np.testing.assert_array_equal(pool.values, [1.0, 1.0, 3.0])
    # equal values keep their offer order
    np.testing.assert_array_equal(pool.vectors[0], X[1])
    np.testing.assert_array_equal(pool.vectors[1], X[3])
    pool.offer(X[:1], np.array([0.5]))
    assert pool.best[1] == 0.5
    assert len(pool.entries()) == 3


def test_empty_pool_has_no_best():
    with pytest.raises(LedFitError):
        CandidatePool(2).best


def test_random_search_matches_best_of_m(exact_samples):
    pool = random_search(exact_samples, 5000, np.random.default_rng(3), pool_size=1)
    X = random_param_matrix(np.random.default_rng(3), 5000)
    oracle = batch_eval_e(X, exact_samples)
    best, e = pool.best
    assert e == oracle.min()
    np.testing.assert_array_equal(best.to_vector(), X[np.argmin(oracle)])


def test_if_search_is_monotone_and_capped(exact_samples):
    opts = IFOptions(multi_starts=1, steps_per_start=5000, rng_seed=4)
    for seed in range(5):
        p0 = random_params(np.random.default_rng(seed))
        result = if_search(p0, exact_samples, opts)
        assert result.e <= eval_e(p0, exact_samples)
        assert result.evaluations == opts.steps_per_start
        assert result.termination is Termination.BUDGET_EXHAUSTED


def test_if_search_reproducible(exact_samples):
    opts = IFOptions(multi_starts=1, steps_per_start=2000, rng_seed=8)
    p0 = random_params(np.random.default_rng(0))
    assert if_search(p0, exact_samples, opts) == if_search(p0, exact_samples, opts)


def test_search_degenerates_to_random_sampling(exact_samples):
    cfg = AlgorithmConfig("S-Newton", "random-newton", 2000, pool_size=1)
    outcome = search(cfg, exact_samples, 6, NewtonOptions(max_iterations=0))
    pool = random_search(exact_samples, 2000, np.random.default_rng(6), pool_size=1)
    best, e = pool.best
    assert outcome.best.e == pytest.approx(e, rel=1e-9)
    np.testing.assert_allclose(outcome.best.params.to_vector(), best.to_vector(), atol=1e-8)
    assert outcome.evaluations == 2000


def test_newton_refinement_never_worsens_pool(exact_samples):
    cfg = AlgorithmConfig("S-Newton", "random-newton", 3000, pool_size=5)
    outcome = search(cfg, exact_samples, 7)
    assert outcome.best.e <= outcome.pre_newton.e
    assert outcome.best.evaluations == 3000


def test_if_with_newton_counts_budget(exact_samples):
    cfg = AlgorithmConfig("IF4", "if", 4, 500)
    outcome = search(cfg, exact_samples, 8)
    assert outcome.evaluations == cfg.total_budget
    assert outcome.best.e <= outcome.pre_newton.e
    assert 0 <= outcome.newton_converged <= 4


def test_unknown_method_rejected(exact_samples):
    with pytest.raises(ConfigError):
        search(AlgorithmConfig("X", "annealing", 10), exact_samples, 0)


def test_run_config_reproducible(exact_samples):
    cfg = AlgorithmConfig("IF2", "if", 2, 300)
    first = run_config(cfg, exact_samples, 11, "lens", 0)
    second = run_config(cfg, exact_samples, 11, "lens", 0)
    assert first.best_params == second.best_params
    assert first.best_rmsp == second.best_rmsp
    assert first.evaluations == second.evaluations == 600
    assert first.instance_id == "lens"


def test_random_stage_has_no_pre_newton_value(exact_samples):
    record = run_config(AlgorithmConfig("RAN", "random", 1000, newton=False), exact_samples, 1)
    assert np.isnan(record.pre_newton_rmsp)
    assert record.newton_iterations == 0


@pytest.mark.slow
def test_newton_post_processing_improves_if_starts():
    improved = starts = 0
    opts = IFOptions(multi_starts=1, steps_per_start=10_000)
    for instance in generate_dataset(20, 99):
        for start in range(5):
            rng = np.random.default_rng([instance.index, start])
            walk = if_search(random_params(rng), instance.samples, opts, rng)
            refined = newton_optimize(walk.params, instance.samples)
            assert refined.e <= walk.e
            starts += 1
            improved += refined.e < walk.e
    assert improved >= 0.95 * starts


@pytest.mark.slow
def test_s_newton_reaches_the_floor_on_generated_instances():
    cfg = AlgorithmConfig("S-Newton", "random-newton", 100_000, pool_size=100)
    finals = []
    converged = iterations = 0
    for instance in generate_dataset(100, 2024):
        outcome = search(cfg, instance.samples, instance.seed)
        finals.append(outcome.best.rmsp)
        converged += outcome.newton_converged
        iterations += outcome.converged_iterations
    finals = np.array(finals)
    assert np.sum(finals < 1e-2) >= 90
    assert np.median(finals) < 1e-3
    assert converged > 0
    assert 2.0 <= iterations / converged <= 8.0


@pytest.mark.slow
def test_if_walk_beats_random_sampling_at_equal_budget():
    budget = 100_000
    opts = IFOptions(multi_starts=1, steps_per_start=budget)
    walk_rmsp, random_rmsp = [], []
    for instance in generate_dataset(20, 77):
        rng = np.random.default_rng([instance.index, 0])
        walk_rmsp.append(if_search(random_params(rng), instance.samples, opts, rng).rmsp)
        sampler = np.random.default_rng([instance.index, 1])
        pool = random_search(instance.samples, budget, sampler, pool_size=1)
        candidate, _ = pool.best
        random_rmsp.append(rmsp(candidate, instance.samples))
    assert np.median(walk_rmsp) < np.median(random_rmsp)
