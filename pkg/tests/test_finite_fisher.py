import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from gen import random_ldp_channel, random_model
from ldp_fisher.channel import Channel, push_forward, verify_ldp
from ldp_fisher.factorize import factorize
from ldp_fisher.finite_fisher import (
    FiniteModel, HypothesisError, MaxInfoResult, ModelError, closed_form_max, closed_form_value,
    fisher_info, optimal_two_point_channel, privatized_score, small_alpha_condition, solve_lp,
    utility_vector,
)
from ldp_fisher.staircase import pattern


def _numeric_info(theta: float, m: int, q: Channel, h: float = 1e-5) -> float:
    """Information of the privatized binomial family by central differences."""
    k = np.arange(m + 1)

    def pt(t):
        return binom.pmf(k, m, t) @ q.kernel

    dp = (pt(theta + h) - pt(theta - h)) / (2 * h)
    return float(np.sum(dp ** 2 / pt(theta)))


def test_bernoulli_half_value():
    m = FiniteModel.bernoulli(0.5)
    res = closed_form_max(m, 0.3)
    assert res.I_max == pytest.approx(0.08867, abs=5e-6)
    assert res.alpha_bar_check
    assert res.lp_vs_closed_form_gap < 1e-12
    assert solve_lp(m, 0.3).I_max == pytest.approx(res.I_max, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.01, 4.0))
def test_binary_alphabet_closed_form_is_exact_at_every_budget(theta, alpha):
    # with two symbols the only informative patterns are the two sign sets
    m = FiniteModel.bernoulli(theta)
    assert solve_lp(m, alpha).I_max == pytest.approx(closed_form_value(m, alpha), rel=1e-10)


def test_identity_recovers_model_information():
    for theta in (0.2, 0.5, 0.9):
        m = FiniteModel.bernoulli(theta)
        assert fisher_info(m, Channel.identity(2)) == pytest.approx(1 / (theta * (1 - theta)))
    b = FiniteModel.binomial(5, 0.3)
    assert fisher_info(b, Channel.identity(6)) == pytest.approx(5 / (0.3 * 0.7))
    assert b.information() == pytest.approx(5 / (0.3 * 0.7))


def test_constant_channel_carries_nothing():
    m = FiniteModel.binomial(4, 0.4)
    assert fisher_info(m, Channel.constant(5, [0.3, 0.7])) == pytest.approx(0.0, abs=1e-25)


@pytest.mark.parametrize("alpha", [0.2, 1.0])
def test_information_matches_finite_differences(alpha):
    rng = np.random.default_rng(3)
    m = FiniteModel.binomial(4, 0.35)
    q = random_ldp_channel(rng, 5, 4, alpha)
    assert fisher_info(m, q) == pytest.approx(_numeric_info(0.35, 4, q), rel=1e-6)


def test_privatized_score_is_centered():
    rng = np.random.default_rng(5)
    m = random_model(rng, 5)
    q = random_ldp_channel(rng, 5, 4, 1.0)
    t = privatized_score(m, q)
    assert push_forward(q, m.p0) @ t == pytest.approx(0.0, abs=1e-14)


def test_zero_mass_output_warns():
    m = FiniteModel.bernoulli(0.5)
    q = Channel(np.array([[0.5, 0.5, 0.0], [0.2, 0.8, 0.0]]))
    with pytest.warns(UserWarning):
        t = privatized_score(m, q)
    assert t[2] == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([0.1, 0.7, 2.0]))
def test_utility_vector_matches_pattern_integrals(seed, alpha):
    rng = np.random.default_rng(seed)
    m = random_model(rng, int(rng.integers(2, 7)))
    uv = utility_vector(m, alpha)
    i, _, _ = uv.arrays()
    e1 = math.expm1(alpha)
    for beta in range(1, len(uv) - 1):
        r = pattern(m.d, beta, alpha).values
        direct = (m.score * m.p0 @ r) ** 2 / (m.p0 @ r) / e1 ** 2
        assert uv[beta] == pytest.approx(direct, rel=1e-9, abs=1e-15)
        assert i[beta] == pytest.approx(uv[beta], rel=1e-12, abs=1e-18)
    assert uv[0] == uv[len(uv) - 1] == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([0.1, 0.7, 2.0]))
def test_extremal_information_is_linear_in_omega(seed, alpha):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 6))
    m = random_model(rng, d)
    fac = factorize(random_ldp_channel(rng, d, int(rng.integers(2, 6)), alpha), alpha)
    uv = utility_vector(m, alpha)
    linear = math.expm1(alpha) ** 2 * sum(w * uv[b] for b, w in fac.omega.items())
    assert fisher_info(m, fac.q1) == pytest.approx(linear, rel=1e-9, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([0.1, 0.5, 1.5]))
def test_lp_optimum_dominates_every_private_channel(seed, alpha):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 6))
    m = random_model(rng, d, nonzero=bool(rng.integers(2)))
    best = solve_lp(m, alpha).I_max
    q = random_ldp_channel(rng, d, int(rng.integers(2, 7)), alpha)
    assert fisher_info(m, q) <= best + 1e-12
    assert best <= m.information() + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_two_point_channel(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng, int(rng.integers(2, 8)))
    alpha = 0.1
    q = optimal_two_point_channel(m, alpha)
    cert = verify_ldp(q, alpha)
    assert cert.passes and cert.is_extremal
    assert fisher_info(m, q) == pytest.approx(closed_form_value(m, alpha), rel=1e-10)


def test_closed_form_needs_nonvanishing_score():
    m = FiniteModel([0.25, 0.5, 0.25], [-2.0, 0.0, 2.0])
    with pytest.raises(HypothesisError):
        closed_form_max(m, 0.2)
    with pytest.raises(HypothesisError):
        optimal_two_point_channel(m, 0.2)
    res = solve_lp(m, 0.2)
    assert res.I_max > 0


def test_zero_budget():
    m = FiniteModel.bernoulli(0.3)
    res = solve_lp(m, 0.0)
    assert res.I_max == 0.0
    assert sum(res.omega_opt.values()) == pytest.approx(1.0)


def test_small_alpha_condition():
    m = FiniteModel.binomial(3, 0.4)
    assert small_alpha_condition(m, 0.01)
    big = small_alpha_condition(m, 10.0)
    assert isinstance(big, bool) and not big
    assert small_alpha_condition(FiniteModel.bernoulli(0.3), 10.0)


def test_support_and_weights_of_optimum():
    m = FiniteModel.binomial(3, 0.4)
    alpha = 0.05
    lp = solve_lp(m, alpha)
    cf = closed_form_max(m, alpha)
    assert lp.support == cf.support
    for b in cf.support:
        assert lp.omega_opt[b] == pytest.approx(1 / (1 + math.exp(alpha)), abs=1e-10)


def test_monotone_in_budget():
    m = FiniteModel.binomial(4, 0.6)
    vals = [solve_lp(m, a).I_max for a in (0.1, 0.3, 0.8, 2.0, 5.0)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[-1] <= m.information()


def test_result_round_trip():
    res = closed_form_max(FiniteModel.binomial(3, 0.4), 0.2)
    assert MaxInfoResult.from_dict(res.to_dict()) == res
    model = FiniteModel.bernoulli(0.4)
    back = FiniteModel.from_dict(model.to_dict())
    np.testing.assert_array_equal(back.p0, model.p0)


@pytest.mark.parametrize("p0,score", [
    ([0.5, 0.5], [1.0, 1.0]),
    ([0.5, 0.5], [1.0]),
    ([0.6, 0.6], [1.0, -1.0]),
    ([0.5, 0.5], [np.inf, -np.inf]),
])
def test_invalid_models(p0, score):
    with pytest.raises(ModelError):
        FiniteModel(p0, score)


def test_caps():
    m = FiniteModel(np.full(13, 1 / 13), np.r_[np.ones(6), 0.0, -np.ones(6)])
    with pytest.raises(ModelError):
        solve_lp(m, 0.1)
    with pytest.raises(ModelError):
        utility_vector(m, 0.1, max_dim=8)
    with pytest.raises(ModelError):
        FiniteModel.from_dict({"p0": [1.0]})
