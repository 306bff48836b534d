import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bellsim.errors import ConfigError
from bellsim.geometry import minkowski_metric, perturbed_metric
from bellsim.correlation import (
    COSINE,
    SIGN,
    AnalyzerSetting,
    CorrelationModel,
    HiddenVariableSample,
    correlation_analytic,
    correlation_mc,
    expectation,
    sample_products,
    shard_sizes,
    sign_outcome,
)

COS = CorrelationModel("cosine")
SGN = CorrelationModel("sign")

ALPHA_GRID = (np.arange(1_000_000) + 0.5) * (2 * math.pi / 1_000_000)


def brute_force_sign(theta):
    """Midpoint-rule average of the two stations' sign outcomes over alpha."""
    return float(np.mean(np.sign(np.cos(ALPHA_GRID)) * np.sign(np.cos(ALPHA_GRID + theta))))


def test_model_names():
    assert COS.variant == COSINE and SGN.variant == SIGN
    assert CorrelationModel(COSINE) == COS
    with pytest.raises(ConfigError, match="bogus"):
        CorrelationModel("bogus")


def test_cosine_at_quarter_pi():
    est = correlation_analytic(COS, math.pi / 4)
    assert est.value == pytest.approx(math.sqrt(2) / 2, abs=1e-15)
    assert est.stderr == 0.0 and est.analytic


def test_cosine_aligned():
    assert correlation_analytic(COS, 0.0).value == 1.0


def test_sign_at_right_angle_matches_brute_force():
    assert brute_force_sign(math.pi / 2) == pytest.approx(0.0, abs=1e-5)
    assert correlation_analytic(SGN, math.pi / 2).value == pytest.approx(0.0, abs=1e-15)


def test_sign_closed_form_matches_quadrature():
    for theta in np.arange(32) * (2 * math.pi / 32):
        assert abs(correlation_analytic(SGN, theta).value - brute_force_sign(theta)) <= 1e-3


@given(st.floats(-50, 50))
def test_cosine_even_periodic_exact(theta):
    assert correlation_analytic(COS, theta).value == math.cos(theta)
    assert abs(expectation(COS, -theta) - expectation(COS, theta)) == 0.0
    assert abs(expectation(COS, theta + 2 * math.pi) - expectation(COS, theta)) <= 1e-12


@given(st.floats(-50, 50))
def test_sign_even_periodic_bounded(theta):
    e = expectation(SGN, theta)
    assert abs(e) <= 1.0
    assert e == pytest.approx(expectation(SGN, -theta), abs=1e-12)
    assert e == pytest.approx(expectation(SGN, theta + 2 * math.pi), abs=1e-12)


@given(st.floats(-math.pi, math.pi))
def test_sign_matches_arcsin_identity(theta):
    # independent closed form (2/pi) asin(cos theta); asin near +-1 costs ~sqrt(eps)
    assert expectation(SGN, theta) == pytest.approx(2 / math.pi * math.asin(math.cos(theta)),
                                                    abs=1e-7)


def test_cosine_magnitude_is_abs_cos():
    theta = np.linspace(-7, 7, 101)
    assert np.array_equal(np.abs(expectation(COS, theta)), np.abs(np.cos(theta)))


@pytest.mark.parametrize("alpha, angle, expected", [
    (0.0, 0.0, 1),
    (math.pi, 0.0, -1),
    (math.pi / 2, 0.0, 1),
])
def test_sign_outcome_examples(alpha, angle, expected):
    assert sign_outcome(alpha, AnalyzerSetting(angle)) == expected


def test_sign_outcome_vectorized():
    alpha = np.array([0.0, 1.0, 2.0, math.pi, 5.0])
    expected = np.where(np.cos(alpha - 0.5) >= 0, 1, -1)
    assert np.array_equal(sign_outcome(alpha, AnalyzerSetting(0.5)), expected)


def test_settings_are_wrapped():
    assert AnalyzerSetting(-math.pi / 2).angle == pytest.approx(1.5 * math.pi)
    assert AnalyzerSetting(2 * math.pi).angle == 0.0
    assert HiddenVariableSample(7.0).alpha == pytest.approx(7.0 - 2 * math.pi)
    assert np.linalg.norm(AnalyzerSetting(1.234).direction()) == pytest.approx(1.0, abs=1e-15)


# -- Monte Carlo ------------------------------------------------------------

def test_mc_cosine_quarter_pi_large_n():
    est = correlation_mc(COS, math.pi / 4, 1_000_000, seed=42)
    assert est.n_samples == 1_000_000
    assert abs(est.value - math.sqrt(2) / 2) <= 4 * est.stderr


def test_mc_single_sample_is_reproducible_formula():
    est = correlation_mc(COS, math.pi / 4, 1, seed=42)
    alpha1 = np.random.default_rng([42, 0]).uniform(0.0, 2 * math.pi, 1)[0]
    assert est.value == pytest.approx(2 * math.cos(alpha1) * math.cos(alpha1 + math.pi / 4),
                                      abs=1e-15)
    again = correlation_mc(COS, math.pi / 4, 1, seed=42)
    assert again.value.hex() == est.value.hex()
    assert math.isinf(est.stderr)


@pytest.mark.parametrize("n", [1, 17, 1000])
def test_mc_sign_aligned_is_perfect(n):
    est = correlation_mc(SGN, 0.0, n, seed=3)
    assert est.value == 1.0
    assert est.stderr == 0.0 or n == 1


def test_mc_rejects_empty_run():
    with pytest.raises(ConfigError):
        correlation_mc(COS, 0.1, 0)


def test_mc_coverage_over_seeds():
    theta = 1.1
    hits = 0
    for seed in range(100):
        est = correlation_mc(COS, theta, 100_000, seed=seed)
        hits += abs(est.value - math.cos(theta)) <= 4 * est.stderr
    assert hits >= 99


def test_mc_sign_model_converges():
    for theta in (0.3, 1.2, 2.5):
        est = correlation_mc(SGN, theta, 200_000, seed=9)
        assert abs(est.value - expectation(SGN, theta)) <= 4 * est.stderr


def test_mc_with_perturbed_metric_is_bounded():
    h = np.zeros((4, 4))
    h[1, 1], h[2, 2], h[1, 2], h[2, 1] = 4e-4, -3e-4, 2e-4, 2e-4
    model = CorrelationModel(COSINE, perturbed_metric(minkowski_metric(), h))
    bound = np.max(np.abs(h))
    for theta in (0.0, 0.7, 2.0):
        curved = correlation_mc(model, theta, 100_000, seed=1)
        flat = correlation_mc(COS, theta, 100_000, seed=1)
        assert abs(curved.value - math.cos(theta)) <= 4 * bound + 4 * curved.stderr
        assert abs(curved.value - flat.value) <= 4 * bound


# -- sharding ---------------------------------------------------------------

def test_shard_sizes():
    assert shard_sizes(10, 3) == [4, 3, 3]
    assert sum(shard_sizes(100_001, 7)) == 100_001
    with pytest.raises(ConfigError):
        shard_sizes(10, 0)


def test_sharded_run_is_ordered_merge_of_shards():
    n, m, seed = 10_001, 4, 77
    est = correlation_mc(COS, 0.4, n, seed=seed, shards=m)
    parts = [sample_products(COS, 0.4, size, [seed, i]) for i, size in enumerate(shard_sizes(n, m))]
    merged = np.concatenate(parts)
    assert est.value == float(np.mean(merged))
    assert est.stderr == float(np.std(merged, ddof=1)) / math.sqrt(n)


@pytest.mark.parametrize("model", [COS, SGN])
def test_threads_never_change_results(model):
    serial = correlation_mc(model, 0.9, 50_000, seed=5, shards=8, threads=1)
    parallel = correlation_mc(model, 0.9, 50_000, seed=5, shards=8, threads=4)
    assert serial == parallel
