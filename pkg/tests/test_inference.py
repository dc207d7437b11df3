import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinsense.errors import DegeneratePosteriorError, DomainError
from spinsense.experiments import prefix_variances
from spinsense.inference import (
    FieldGrid,
    Posterior,
    average_error,
    error_summary,
    log_likelihood,
    posterior,
    posterior_from_loglik,
)
from spinsense.protocol import Dataset, Schedule, decode, generate_dataset, sequence_probability
from spinsense.spin import ChainSpec

GRID_FULL = FieldGrid(-0.2, 0.2, 401)
GRID = FieldGrid.default()


def test_grid_invariants():
    assert GRID.n == 201 and GRID.values[0] == 0.0 and GRID.values[-1] == 0.2
    assert np.allclose(np.diff(GRID_FULL.values), 0.001, atol=1e-12)
    with pytest.raises(DomainError):
        FieldGrid(0, 0.2, 2)
    with pytest.raises(DomainError):
        FieldGrid(0.2, 0.0, 11)


def test_all_down_data_has_unit_likelihood_at_zero_field():
    data = Dataset(np.array([7, 0, 0, 0]), Schedule.arithmetic(2), ChainSpec(3))
    ll = log_likelihood(data, GRID_FULL)
    assert abs(ll[200]) < 1e-12  # B = 0
    assert (ll[:200] < 0).all()


def multinomial_likelihood(data, B):
    """Probability of the count vector itself, coefficient included, by direct products."""
    coef = math.factorial(data.M_sam)
    value = 1.0
    for code, k in enumerate(data.counts):
        coef //= math.factorial(int(k))
        if k:
            value *= sequence_probability(B, data.template, data.schedule, decode(code, data.n_seq)) ** int(k)
    return coef * value


@pytest.mark.parametrize("M", [1, 5, 20])
def test_likelihood_matches_direct_multinomial(M):
    data = generate_dataset(ChainSpec(3, 1.0, 0.15), Schedule((4.0, 5.0, 6.0)), M, np.random.default_rng(M))
    grid = FieldGrid(0.05, 0.2, 7)
    coef = math.factorial(M) / math.prod(math.factorial(int(k)) for k in data.counts)
    ll = log_likelihood(data, grid)
    for B, value in zip(grid.values, ll):
        direct = multinomial_likelihood(data, B)
        assert abs(coef * math.exp(value) - direct) <= 1e-10 * direct


@pytest.mark.parametrize("M", [3, 12, 20])
def test_posterior_independent_of_multinomial_coefficient(M):
    data = generate_dataset(ChainSpec(3, 1.0, 0.1), Schedule((4.0, 5.0)), M, np.random.default_rng(M))
    grid = FieldGrid(0.0, 0.2, 41)
    direct = np.array([multinomial_likelihood(data, B) for B in grid.values])
    with np.errstate(divide="ignore"):
        with_coef = posterior_from_loglik(np.log(direct), grid)
    assert np.allclose(with_coef.density, posterior(data, grid).density, rtol=1e-9, atol=1e-12)


def test_single_down_outcome_posterior_is_positive():
    data = Dataset(np.array([1, 0]), Schedule((6.0,)), ChainSpec(5))
    post = posterior(data, GRID_FULL)
    assert (post.density > 0).all()


def test_zero_field_posterior_is_symmetric():
    data = generate_dataset(ChainSpec(5), Schedule.arithmetic(3), 300, np.random.default_rng(0))
    post = posterior(data, GRID_FULL)
    assert np.abs(post.density - post.density[::-1]).max() < 1e-8


def test_degenerate_posterior():
    with pytest.raises(DegeneratePosteriorError):
        posterior_from_loglik(np.full(5, -np.inf), FieldGrid(0, 1, 5))


@settings(max_examples=20, deadline=None)
@given(B=st.floats(0.02, 0.2), M=st.integers(1, 3000), n=st.integers(1, 5), seed=st.integers(0, 2**31))
def test_posterior_normalized_and_nonnegative(B, M, n, seed):
    data = generate_dataset(ChainSpec(4, 1.0, B), Schedule.arithmetic(n), M, np.random.default_rng(seed))
    post = posterior(data, GRID)
    assert abs(post.integral() - 1) < 1e-9
    assert (post.density >= 0).all()


def test_error_summary_point_mass():
    d = np.zeros(GRID.n)
    d[100] = 1.0
    d /= Posterior(GRID, d).integral()
    B = GRID.values[100]
    s = error_summary(Posterior(GRID, d), B)
    assert s.deltaB2 == pytest.approx(0.0, abs=1e-20)
    assert error_summary(Posterior(GRID, d), B / 2).deltaB2 == pytest.approx(1.0, abs=1e-12)


def test_error_summary_uniform_closed_form():
    post = Posterior(GRID_FULL, np.full(GRID_FULL.n, 1 / 0.4))
    s = error_summary(post, 0.1)
    var = 0.4**2 / 12
    assert abs(s.mean) < 1e-12
    assert abs(s.variance - var) < 1e-12
    assert abs(s.deltaB2 - (var + 0.01) / 0.01) < 1e-12
    assert s.deltaB == pytest.approx(math.sqrt(s.deltaB2))


def test_error_summary_needs_nonzero_field():
    with pytest.raises(DomainError):
        error_summary(Posterior(GRID_FULL, np.full(GRID_FULL.n, 2.5)), 0.0)


def test_average_error_single_repeat_is_one_draw():
    spec, s = ChainSpec(4, 1.0, 0.1), Schedule.arithmetic(3)
    res = average_error(spec, s, GRID, 200, repeats=1, seed=42)
    child = np.random.SeedSequence(42).spawn(1)[0]
    data = generate_dataset(spec, s, 200, np.random.default_rng(child))
    assert res.mean == error_summary(posterior(data, GRID), 0.1).deltaB
    assert res.stderr == 0.0


def test_average_error_is_deterministic():
    spec, s = ChainSpec(4, 1.0, 0.1), Schedule.arithmetic(3)
    a = average_error(spec, s, GRID, 200, repeats=10, seed=(3, 1))
    b = average_error(spec, s, GRID, 200, repeats=10, seed=(3, 1))
    assert a == b
    assert average_error(spec, s, GRID, 200, repeats=10, seed=(3, 2)) != a


def test_squared_average_flag():
    spec, s = ChainSpec(4, 1.0, 0.1), Schedule.arithmetic(2)
    plain = average_error(spec, s, GRID, 300, repeats=20, seed=1)
    rms = average_error(spec, s, GRID, 300, repeats=20, seed=1, squared=True)
    assert rms.mean >= plain.mean  # root-mean-square dominates the mean


def test_error_grows_at_small_field_and_shrinks_with_sequences():
    grid = GRID
    errs = {}
    for n in (1, 5):
        for B in (0.02, 0.1):
            errs[n, B] = average_error(ChainSpec(5, 1.0, B), Schedule.arithmetic(n), grid, 1000, 40, seed=(n, int(B * 100))).mean
    assert errs[5, 0.02] > errs[5, 0.1]
    assert errs[1, 0.02] > errs[1, 0.1]
    assert errs[5, 0.1] < errs[1, 0.1]
    assert errs[5, 0.02] < errs[1, 0.02]


def test_median_variance_non_increasing_in_n_seq():
    med = np.median(prefix_variances(ChainSpec(5, 1.0, 0.1), Schedule.arithmetic(5), GRID, 1000, 60, seed=9), axis=0)
    assert (np.diff(med) <= 0).all()


def test_estimator_covers_truth():
    spec, s = ChainSpec(5, 1.0, 0.1), Schedule.arithmetic(5)
    hits = 0
    repeats = 100
    for child in np.random.SeedSequence(5).spawn(repeats):
        post = posterior(generate_dataset(spec, s, 5000, np.random.default_rng(child)), GRID)
        hits += abs(post.mean() - 0.1) <= 3 * math.sqrt(post.variance())
    assert hits >= 95
