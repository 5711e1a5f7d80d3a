import math

import numpy as np
import pytest
import scipy.special
import scipy.stats

from binagg.gdp import (
    ApproxDpParams,
    BudgetAllocation,
    RandomSource,
    allocate,
    compose,
    epsilon_for_delta,
    gaussian_mechanism,
    gdp_to_approx_dp,
    gdp_to_pure_dp,
    pure_dp_to_gdp,
    sample_laplace,
    std_normal_cdf,
    std_normal_quantile,
)

# High-precision reference values, computed independently with mpmath at
# 50 decimal digits.
DELTA_MU1_EPS1 = 0.1269367375066439458
DELTA_MU1_EPS0 = 0.3829249225480262029
MU_FOR_EPS1 = 1.2320353853449009729


def test_random_source_is_deterministic():
    a = RandomSource(123, stream=4).generator.normal(size=16)
    b = RandomSource(123, stream=4).generator.normal(size=16)
    assert np.array_equal(a, b)


def test_random_source_streams_differ():
    a = RandomSource(123, stream=0).generator.normal(size=16)
    b = RandomSource(123, stream=1).generator.normal(size=16)
    assert not np.array_equal(a, b)


def test_random_source_sibling_matches_direct_construction():
    a = RandomSource(9, stream=0).sibling(3).generator.normal(size=8)
    b = RandomSource(9, stream=3).generator.normal(size=8)
    assert np.array_equal(a, b)


def test_random_source_rejects_bad_arguments():
    with pytest.raises(ValueError):
        RandomSource(-1)
    with pytest.raises(ValueError):
        RandomSource(2**64)
    with pytest.raises(ValueError):
        RandomSource(0, stream=-1)


def test_budget_allocation_total():
    b = BudgetAllocation(mu_bin=0.3, mu_c=0.4, mu_s=0.5, mu_t=0.6)
    expected = math.sqrt(0.3**2 + 0.4**2 + 0.5**2 + 0.6**2)
    assert b.total() == pytest.approx(expected, abs=1e-15)


def test_budget_allocation_rejects_nonpositive():
    with pytest.raises(ValueError):
        BudgetAllocation(mu_bin=0.0, mu_c=1.0, mu_s=1.0, mu_t=1.0)


def test_approx_dp_params_validation():
    ApproxDpParams(epsilon=1.0, delta=0.5)
    ApproxDpParams(epsilon=0.0, delta=0.0)
    with pytest.raises(ValueError):
        ApproxDpParams(epsilon=-1.0, delta=0.5)
    with pytest.raises(ValueError):
        ApproxDpParams(epsilon=1.0, delta=1.0)


def test_compose_pythagorean():
    assert compose([3.0, 4.0]) == 5.0


def test_compose_permutation_invariant():
    mus = [0.7, 1.3, 0.2, 2.1]
    assert compose(mus) == pytest.approx(compose(mus[::-1]), abs=1e-12)


def test_compose_associative():
    a, b, c = 0.9, 1.7, 0.4
    assert compose([a, compose([b, c])]) == pytest.approx(
        compose([a, b, c]), abs=1e-12
    )


def test_compose_rejects_nonpositive():
    with pytest.raises(ValueError):
        compose([1.0, 0.0])


def test_allocate_default_ratios():
    alloc = allocate(1.0)
    root = math.sqrt(1 + 9 + 9 + 9)
    assert alloc.mu_bin == pytest.approx(1.0 / root, abs=1e-15)
    assert alloc.mu_c == pytest.approx(3.0 / root, abs=1e-15)
    assert alloc.mu_s == pytest.approx(3.0 / root, abs=1e-15)
    assert alloc.mu_t == pytest.approx(3.0 / root, abs=1e-15)


def test_allocate_composes_back_to_total():
    for total in (0.25, 1.0, 4.0):
        alloc = allocate(total, ratios=(2.0, 1.0, 5.0, 0.5))
        parts = [alloc.mu_bin, alloc.mu_c, alloc.mu_s, alloc.mu_t]
        assert compose(parts) == pytest.approx(total, abs=1e-12)


def test_allocate_rejects_bad_ratios():
    with pytest.raises(ValueError):
        allocate(1.0, ratios=(1.0, 2.0, 3.0))
    with pytest.raises(ValueError):
        allocate(1.0, ratios=(1.0, -2.0, 3.0, 3.0))
    with pytest.raises(ValueError):
        allocate(0.0)


def test_gdp_to_approx_dp_reference_value():
    assert gdp_to_approx_dp(1.0, 1.0).delta == pytest.approx(DELTA_MU1_EPS1, abs=1e-12)


def test_gdp_to_approx_dp_at_eps_zero_matches_formula():
    for mu in (0.3, 1.0, 2.5):
        expected = std_normal_cdf(mu / 2.0) - std_normal_cdf(-mu / 2.0)
        assert gdp_to_approx_dp(mu, 0.0).delta == pytest.approx(expected, abs=1e-14)
    assert gdp_to_approx_dp(1.0, 0.0).delta == pytest.approx(DELTA_MU1_EPS0, abs=1e-12)


def test_gdp_to_approx_dp_decreasing_in_epsilon():
    deltas = [gdp_to_approx_dp(1.0, eps).delta for eps in np.linspace(0.0, 5.0, 40)]
    assert all(a > b for a, b in zip(deltas, deltas[1:]))
    assert all(0.0 <= d < 1.0 for d in deltas)


def test_pure_dp_to_gdp_reference_value():
    assert pure_dp_to_gdp(1.0) == pytest.approx(MU_FOR_EPS1, abs=1e-9)


def test_pure_dp_to_gdp_strictly_increasing():
    grid = np.linspace(1e-3, 10.0, 100)
    mus = [pure_dp_to_gdp(e) for e in grid]
    assert all(a < b for a, b in zip(mus, mus[1:]))


def test_pure_dp_round_trip():
    for eps in (0.1, 1.0, 5.0):
        assert gdp_to_pure_dp(pure_dp_to_gdp(eps)) == pytest.approx(eps, abs=1e-9)
    for mu in (0.2, 1.0, 3.0):
        assert pure_dp_to_gdp(gdp_to_pure_dp(mu)) == pytest.approx(mu, abs=1e-9)


def test_epsilon_for_delta_inverts_forward_map():
    for mu in (0.5, 1.0, 2.0):
        for eps in (0.1, 1.0, 3.0):
            delta = gdp_to_approx_dp(mu, eps).delta
            assert epsilon_for_delta(mu, delta) == pytest.approx(eps, abs=1e-9)


def test_epsilon_for_delta_saturates_at_zero():
    # A delta already met without any epsilon gives epsilon 0.
    big_delta = gdp_to_approx_dp(1.0, 0.0).delta + 0.01
    assert epsilon_for_delta(1.0, big_delta) == 0.0


def test_std_normal_cdf_matches_scipy():
    grid = np.linspace(-8.0, 8.0, 321)
    ours = np.array([std_normal_cdf(x) for x in grid])
    theirs = scipy.special.ndtr(grid)
    np.testing.assert_allclose(ours, theirs, atol=1e-14, rtol=0)


def test_std_normal_quantile_matches_scipy():
    grid = np.linspace(1e-9, 1.0 - 1e-9, 2001)
    ours = np.array([std_normal_quantile(p) for p in grid])
    theirs = scipy.special.ndtri(grid)
    np.testing.assert_allclose(ours, theirs, atol=1e-10, rtol=1e-10)


def test_std_normal_quantile_round_trip():
    for x in (-6.0, -1.96, 0.0, 0.5, 3.3):
        assert std_normal_quantile(std_normal_cdf(x)) == pytest.approx(x, abs=1e-9)


def test_std_normal_quantile_rejects_boundary():
    for p in (0.0, 1.0, -0.1, 1.1):
        with pytest.raises(ValueError):
            std_normal_quantile(p)


def test_gaussian_mechanism_moments():
    n = 10**5
    rng = RandomSource(42)
    sens, mu = 2.0, 0.8
    draws = np.array([gaussian_mechanism(1.0, sens, mu, rng) for _ in range(n)])
    noise = draws - 1.0
    sd = sens / mu
    assert abs(noise.mean()) <= 4.0 * sd / math.sqrt(n)
    assert noise.var() == pytest.approx(sd**2, rel=0.05)


def test_gaussian_mechanism_zero_sensitivity_is_identity():
    rng = RandomSource(0)
    before = rng.generator.bit_generator.state
    assert gaussian_mechanism(3.5, 0.0, 1.0, rng) == 3.5
    assert rng.generator.bit_generator.state == before


def test_gaussian_mechanism_reproducible():
    a = gaussian_mechanism(0.0, 1.0, 1.0, RandomSource(5))
    b = gaussian_mechanism(0.0, 1.0, 1.0, RandomSource(5))
    assert a == b


def test_gaussian_mechanism_rejects_bad_arguments():
    rng = RandomSource(0)
    with pytest.raises(ValueError):
        gaussian_mechanism(0.0, -1.0, 1.0, rng)
    with pytest.raises(ValueError):
        gaussian_mechanism(0.0, 1.0, 0.0, rng)


def test_sample_laplace_moments():
    n = 10**5
    rng = RandomSource(11)
    scale = 1.7
    draws = np.array([sample_laplace(scale, rng) for _ in range(n)])
    sd = math.sqrt(2.0) * scale
    assert abs(draws.mean()) <= 4.0 * sd / math.sqrt(n)
    assert draws.var() == pytest.approx(2.0 * scale**2, rel=0.05)


def test_sample_laplace_distribution_shape():
    rng = RandomSource(13)
    draws = np.array([sample_laplace(0.9, rng) for _ in range(20000)])
    stat = scipy.stats.kstest(draws, scipy.stats.laplace(scale=0.9).cdf).statistic
    assert stat < 0.015


def test_high_precision_oracle_agreement():
    # Recompute the frozen module constants with mpmath instead of trusting
    # the values typed above.
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 50
    phi = lambda x: mpmath.ncdf(x)
    delta = phi(mpmath.mpf(-1) / 1 + mpmath.mpf(1) / 2) - mpmath.e**1 * phi(
        mpmath.mpf(-1) / 1 - mpmath.mpf(1) / 2
    )
    assert float(delta) == pytest.approx(DELTA_MU1_EPS1, abs=1e-15)
    mu = -2 * float(mpmath.erfinv(2 * mpmath.mpf(1) / (1 + mpmath.e) - 1)) * math.sqrt(2)
    assert mu == pytest.approx(MU_FOR_EPS1, abs=1e-12)
