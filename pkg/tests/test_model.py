import math

import numpy as np
import pytest

from ledfit.errors import DarkInstanceError
from ledfit.model import CLAMPED, eval_e, eval_intensity, objective, rms, rmsp, term_angle
from ledfit.state import IntensitySamples, ModelParams

from conftest import PHI


def direct_intensity(p: ModelParams, phi: float, i_max: float) -> float:
    total = 0.0
    for a, b, c in zip(p.a, p.b, p.c):
        theta = abs(phi - b)
        if theta > 90.0:
            continue
        base = 0.0 if theta == 90.0 else math.cos(math.radians(theta))
        total += a * (1.0 if c == 0.0 else base**c)
    return i_max * total


def test_term_angle_clamps_back_side():
    assert term_angle(95.0, 0.0) == CLAMPED
    assert term_angle(-5.0, 90.0).clamped


def test_term_angle_mirrors_negative_angles():
    angle = term_angle(10.0, 30.0)
    assert angle.theta == 20.0
    assert angle.sign == -1
    assert not angle.clamped


def test_term_angle_at_offset():
    angle = term_angle(30.0, 30.0)
    assert angle.theta == 0.0
    assert angle.sign == 1


def test_eval_intensity_peak():
    p = ModelParams(a=(1, 0, 0), b=(0, 0, 0), c=(5, 0, 0))
    assert eval_intensity(p, 0.0, 1000.0) == 1000.0


def test_eval_intensity_half_cosine():
    p = ModelParams(a=(0.5, 0, 0), b=(0, 0, 0), c=(1, 0, 0))
    assert eval_intensity(p, 60.0, 1000.0) == pytest.approx(250.0, rel=1e-12)


def test_eval_intensity_matches_direct_sum():
    rng = np.random.default_rng(3)
    for _ in range(50):
        p = ModelParams(
            a=tuple(rng.uniform(0, 1, 3)),
            b=tuple(rng.uniform(-90, 90, 3)),
            c=tuple(rng.uniform(0, 100, 3)),
        )
        values = eval_intensity(p, PHI, 750.0)
        expected = [direct_intensity(p, phi, 750.0) for phi in PHI]
        np.testing.assert_allclose(values, expected, rtol=1e-12, atol=1e-300)


def test_eval_intensity_zero_when_all_terms_clamped():
    p = ModelParams(a=(1, 1, 1), b=(-10, -20, -30), c=(2, 3, 4))
    assert eval_intensity(p, 95.0, 1000.0) == 0.0


def test_zero_exponent_term_is_constant():
    p = ModelParams(a=(0.4, 0, 0), b=(0, 0, 0), c=(0, 0, 0))
    np.testing.assert_array_equal(eval_intensity(p, PHI, 1000.0), np.full(PHI.size, 400.0))


def test_intensity_continuous_across_mirror():
    p = ModelParams(a=(0.7, 0, 0), b=(40, 0, 0), c=(8, 0, 0))
    below = eval_intensity(p, 40.0 - 1e-9, 1000.0)
    above = eval_intensity(p, 40.0 + 1e-9, 1000.0)
    assert below == pytest.approx(above, rel=1e-12)


def test_exact_fit_has_zero_error(truth, exact_samples):
    assert rms(truth, exact_samples) == 0.0
    assert rmsp(truth, exact_samples) == 0.0
    assert eval_e(truth, exact_samples) == 0.0


def test_constant_residual(truth, exact_samples):
    shifted = IntensitySamples(exact_samples.phi, exact_samples.candela + 2.0, 1000.0)
    assert rms(truth, shifted) == pytest.approx(2.0, rel=1e-12)


def test_rmsp_uniform_data():
    s = IntensitySamples(PHI, np.full(91, 100.0))
    p = ModelParams(a=(0.98, 0, 0), b=(0, 0, 0), c=(0, 0, 0))
    assert rms(p, s) == pytest.approx(2.0, rel=1e-12)
    assert rmsp(p, s) == pytest.approx(2.0, rel=1e-12)


def test_dark_instance_raises():
    s = IntensitySamples(PHI, np.zeros(91))
    p = ModelParams(a=(0.5, 0, 0), b=(0, 0, 0), c=(1, 0, 0))
    with pytest.raises(DarkInstanceError, match="dark instance"):
        rmsp(p, s)


def test_e_is_rms_squared(exact_samples):
    p = ModelParams(a=(0.2, 0.6, 0.1), b=(-20, 15, 70), c=(3, 7, 40))
    value = objective(p, exact_samples)
    assert value.e == pytest.approx(value.rms**2, rel=1e-12)
    assert value.rmsp >= 0.0


def test_error_invariant_under_term_permutation(exact_samples):
    p = ModelParams(a=(0.2, 0.6, 0.1), b=(-20, 15, 70), c=(3, 7, 40))
    for order in [(1, 0, 2), (2, 1, 0), (1, 2, 0)]:
        assert eval_e(p.permuted(order), exact_samples) == pytest.approx(
            eval_e(p, exact_samples), rel=1e-12
        )


def test_explicit_i_max_defaults_to_peak():
    s = IntensitySamples(PHI, np.linspace(500.0, 0.0, 91))
    assert s.i_max == 500.0
    assert s.n == 91
