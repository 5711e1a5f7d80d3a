import numpy as np
import pytest

from binagg.aggregation import (
    BinSummary,
    PreparedBins,
    _round_half_away,
    assign_bins,
    prepare,
    sensitivity_vector,
)
from binagg.errors import EmptyResultError
from binagg.gdp import RandomSource, gaussian_mechanism
from binagg.privtree import Box


def quadrant_bins():
    return [
        Box((0.0, 0.0), (0.5, 0.5)),
        Box((0.5, 0.0), (1.0, 0.5)),
        Box((0.0, 0.5), (0.5, 1.0)),
        Box((0.5, 0.5), (1.0, 1.0)),
    ]


def sample_data(seed=0, n=400):
    gen = RandomSource(seed).generator
    X = gen.uniform(0.0, 1.0, size=(n, 2))
    y = X.sum(axis=1) + gen.normal(0.0, 0.1, size=n)
    return X, y


def test_round_half_away_from_zero():
    assert _round_half_away(2.5) == 3
    assert _round_half_away(-2.5) == -3
    assert _round_half_away(2.4) == 2
    assert _round_half_away(-0.5) == -1
    assert _round_half_away(0.49) == 0
    assert _round_half_away(-0.49) == 0


def test_sensitivity_vector_uses_largest_magnitude_corner():
    box = Box((-3.0, 0.25), (1.0, 0.75))
    np.testing.assert_allclose(sensitivity_vector(box), [3.0, 0.75])


def test_assign_bins_exactly_once():
    X, _ = sample_data()
    assigned = assign_bins(X, quadrant_bins())
    for k, box in enumerate(quadrant_bins()):
        rows = X[assigned == k]
        assert ((rows >= box.lower) & (rows <= box.upper)).all()
    assert np.bincount(assigned, minlength=4).sum() == len(X)


def test_assign_bins_rejects_uncovered_points():
    bins = quadrant_bins()[:3]
    X = np.array([[0.9, 0.9]])
    with pytest.raises(ValueError):
        assign_bins(X, bins)


def test_prepare_noiseless_counts_and_sums_are_exact():
    X, y = sample_data()
    bins = quadrant_bins()
    prepared = prepare(X, y, bins, mu_c=1.0, label_bound=3.0,
                       rng=RandomSource(1), noiseless=True)
    assigned = assign_bins(X, bins)
    assert prepared.K == 4
    for k, summary in enumerate(prepared.bins):
        rows = assigned == k
        assert summary.count == rows.sum()
        assert summary.noisy_count == summary.count
        np.testing.assert_array_equal(summary.sum_x, X[rows].sum(axis=0))
        assert summary.sum_y == y[rows].sum()


def test_prepare_survivor_invariants():
    X, y = sample_data(seed=3)
    prepared = prepare(X, y, quadrant_bins(), mu_c=0.5, label_bound=3.0,
                       rng=RandomSource(4))
    for summary in prepared.bins:
        assert summary.noisy_count >= 2
        box = summary.region
        np.testing.assert_allclose(summary.sensitivity, sensitivity_vector(box))
        lower = summary.count * np.asarray(box.lower)
        upper = summary.count * np.asarray(box.upper)
        assert (summary.sum_x >= lower - 1e-9).all()
        assert (summary.sum_x <= upper + 1e-9).all()


def test_prepare_conserves_totals_over_all_bins():
    X, y = sample_data(seed=5)
    bins = quadrant_bins()
    assigned = assign_bins(X, bins)
    prepared = prepare(X, y, bins, mu_c=1.0, label_bound=3.0,
                       rng=RandomSource(6), noiseless=True)
    assert sum(s.count for s in prepared.bins) == len(X)
    total_x = sum((s.sum_x for s in prepared.bins), np.zeros(2))
    np.testing.assert_allclose(total_x, X.sum(axis=0), atol=1e-9)
    # with noise some bins may be discarded; the exact counts of the
    # survivors plus the recomputed counts of the dropped bins still
    # partition the sample
    noisy = prepare(X, y, bins, mu_c=0.05, label_bound=3.0,
                    rng=RandomSource(7), min_count=25)
    surviving = {tuple(s.region.lower) for s in noisy.bins}
    left_out = [k for k, b in enumerate(bins) if tuple(b.lower) not in surviving]
    n_rest = sum(int((assigned == k).sum()) for k in left_out)
    assert sum(s.count for s in noisy.bins) + n_rest == len(X)
    assert noisy.discarded == len(left_out)


def test_count_noise_replay_and_rounding_shift():
    X, y = sample_data(seed=8)
    bins = quadrant_bins()
    mu_c = 0.7
    prepared = prepare(X, y, bins, mu_c=mu_c, label_bound=3.0,
                       rng=RandomSource(9), min_count=1)
    counts = np.bincount(assign_bins(X, bins), minlength=4)
    gen = RandomSource(9).generator
    for k, summary in enumerate(prepared.bins):
        pre_round = counts[k] + gen.normal(0.0, 1.0 / mu_c)
        assert abs(summary.noisy_count - pre_round) <= 0.5
        assert summary.noisy_count == _round_half_away(pre_round)


def test_count_noise_variance_calibrated():
    n = 10**5
    mu_c = 0.7
    rng = RandomSource(10)
    noise = np.array(
        [gaussian_mechanism(50.0, 1.0, mu_c, rng) - 50.0 for _ in range(n)]
    )
    assert noise.var() == pytest.approx(1.0 / mu_c**2, rel=0.05)


def test_discard_threshold_monotone_in_min_count():
    X, y = sample_data(seed=11, n=120)
    sizes = []
    for floor in (1, 2, 3, 10, 40):
        try:
            prepared = prepare(X, y, quadrant_bins(), mu_c=0.3, label_bound=3.0,
                               rng=RandomSource(12), min_count=floor)
            sizes.append(prepared.K)
        except EmptyResultError:
            sizes.append(0)
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))


def test_prepare_raises_when_every_bin_is_discarded():
    X, y = sample_data(n=20)
    with pytest.raises(EmptyResultError):
        prepare(X, y, quadrant_bins(), mu_c=1.0, label_bound=3.0,
                rng=RandomSource(13), min_count=1000)


def test_prepare_rejects_out_of_bound_labels():
    X, y = sample_data()
    with pytest.raises(ValueError):
        prepare(X, y, quadrant_bins(), mu_c=1.0, label_bound=0.5,
                rng=RandomSource(0))


def test_prepare_rejects_bad_arguments():
    X, y = sample_data()
    with pytest.raises(ValueError):
        prepare(X, y[:-1], quadrant_bins(), mu_c=1.0, label_bound=3.0,
                rng=RandomSource(0))
    with pytest.raises(ValueError):
        prepare(X, y, quadrant_bins(), mu_c=0.0, label_bound=3.0,
                rng=RandomSource(0))
    with pytest.raises(ValueError):
        prepare(X, y, quadrant_bins(), mu_c=1.0, label_bound=3.0,
                rng=RandomSource(0), min_count=0)


def test_prepare_intercept_appends_exact_count_column():
    X, y = sample_data(seed=14)
    prepared = prepare(X, y, quadrant_bins(), mu_c=1.0, label_bound=3.0,
                       rng=RandomSource(15), noiseless=True, intercept=True)
    assert prepared.intercept
    assert prepared.d == 3
    for summary in prepared.bins:
        assert summary.sum_x[-1] == summary.count
        assert summary.sensitivity[-1] == 1.0


def test_bin_summary_is_immutable():
    prepared = prepare(*sample_data(), quadrant_bins(), mu_c=1.0,
                       label_bound=3.0, rng=RandomSource(16), noiseless=True)
    with pytest.raises(AttributeError):
        prepared.bins[0].count = 5
    assert isinstance(prepared, PreparedBins)
    assert isinstance(prepared.bins[0], BinSummary)
