import math

import numpy as np
import pytest

from utils.errors import StationaryNonConvergence
from utils.flows import (
    SECTOR_STATES,
    build_transition_matrix,
    capped_tenure_pmf,
    continuation_prob,
    mean_tenure,
    stationary_stocks,
    summarize,
    tenure_distribution,
    tenure_frame,
    transition_frame,
)
from utils.microsim import MicrosimSettings, analysis_frame, simulate_panel


def test_stationary_of_small_chain():
    T = np.array([
        [0.7, 0.1, 0.15, 0.05],
        [0.2, 0.8, 0.0, 0.0],
        [0.3, 0.0, 0.6, 0.1],
        [0.05, 0.0, 0.0, 0.95],
    ])
    stocks = stationary_stocks(T)
    pi = stocks.distribution
    assert pi.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(pi @ T, pi, atol=1e-10)
    assert stocks.employment == pytest.approx(1.0 - pi[0])
    assert stocks.formal_share == pytest.approx(pi[2] + pi[3])


def test_identity_chain_keeps_uniform_start():
    stocks = stationary_stocks(np.eye(4))
    np.testing.assert_allclose(stocks.distribution, 0.25)


def test_periodic_chain_warns_and_averages():
    T = np.array([
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, 0.0],
    ])
    with pytest.warns(StationaryNonConvergence):
        stocks = stationary_stocks(T, max_iter=100)
    np.testing.assert_allclose(stocks.distribution, [0.5, 0.0, 0.0, 0.5], atol=1e-12)


def test_capped_tenure_pmf_limits():
    np.testing.assert_allclose(capped_tenure_pmf(0.0), np.eye(13)[1])
    np.testing.assert_allclose(capped_tenure_pmf(1.0), np.eye(13)[12])
    previous = 0.0
    for s in np.linspace(0.0, 1.0, 21):
        pmf = capped_tenure_pmf(s)
        assert pmf.sum() == pytest.approx(1.0)
        assert pmf[0] == 0.0
        assert pmf[12] >= previous
        previous = pmf[12]
    assert mean_tenure(capped_tenure_pmf(1.0)) == 12.0


def test_renewal_formula_matches_simulated_jobs():
    rng = np.random.default_rng(3)
    s = 0.9
    months = np.ones(1_000_000, dtype=int)
    for _ in range(60):
        months = np.where(rng.random(months.size) < s, months + 1, 1)
    tenure = np.minimum(months, 12)
    pmf = capped_tenure_pmf(s)
    assert tenure.mean() == pytest.approx(mean_tenure(pmf), abs=0.02)
    observed = np.bincount(tenure, minlength=13) / tenure.size
    np.testing.assert_allclose(observed, pmf, atol=0.005)


def test_mean_tenure_of_empty_pmf_is_nan():
    assert math.isnan(mean_tenure(np.zeros(13)))


def test_reference_transition_matrix(reference_eq):
    T = build_transition_matrix(reference_eq)
    assert T.labels[:2] == ("U", "INF")
    assert T.labels[2] == "STC_1"
    assert T.labels[-2] == "STC_48"
    assert T.labels[-1] == "LTC"
    assert np.all(T.matrix >= 0)
    np.testing.assert_allclose(T.matrix.sum(axis=1), 1.0, atol=1e-12)

    stocks = stationary_stocks(T)
    np.testing.assert_allclose(stocks.distribution @ T.matrix, stocks.distribution, atol=1e-10)
    collapsed = T.collapse(stocks.distribution)
    np.testing.assert_allclose(collapsed.sum(axis=1), 1.0, atol=1e-12)
    frame = transition_frame(T, stocks)
    assert list(frame.index) == list(SECTOR_STATES)


def test_last_counter_state_cannot_renew(reference_eq):
    T = build_transition_matrix(reference_eq)
    last = T.index("STC_48")
    assert T.matrix[last, last] == 0.0
    assert T.matrix[last, T.index("STC_47")] == 0.0


def test_capped_jobs_convert_at_the_last_counter_state(reference_eq):
    T = build_transition_matrix(reference_eq)
    last, ltc = T.index("STC_48"), T.index("LTC")
    assert T.matrix[last, ltc] > 0
    assert T.continuing[last, ltc]
    # reaching the cap takes 47 straight renewals, so the state is thin but occupied
    pi = stationary_stocks(T).distribution
    assert 0 < pi[last] < 1e-6


def test_unbounded_renewals_use_one_stc_state(reference_post_eq):
    T = build_transition_matrix(reference_post_eq)
    assert T.labels == ("U", "INF", "STC", "LTC")


def test_steady_state_accounting(reference_eq, reference_post_eq):
    for eq in (reference_eq, reference_post_eq):
        s = summarize(eq)
        total = s.unemployment + s.informal_share + s.stc_share + s.ltc_share
        assert total == pytest.approx(1.0, abs=1e-12)
        assert s.formal_share == pytest.approx(s.stc_share + s.ltc_share)
        assert s.employment == pytest.approx(1.0 - s.unemployment)
        assert 0.0 <= s.ltc_conditional <= 1.0
        assert s.ltc_unconditional == pytest.approx(s.ltc_share)
        for value in s.mean_tenure.values():
            assert math.isnan(value) or 1.0 <= value <= 12.0
        assert s.mean_nonemp_years > 0
        flat = s.to_dict()
        assert "mean_tenure_stc" in flat and "mean_wage_formal" in flat


def test_tenure_distributions_are_normalized(reference_post_eq):
    for state in ("STC", "LTC", "INF", "formal"):
        pmf = tenure_distribution(reference_post_eq, state)
        assert len(pmf) == 13
        assert pmf[0] == 0.0
        assert pmf.sum() == pytest.approx(1.0)
        assert np.all(pmf >= 0)


def test_survivor_wage_ordering(reference_post_eq):
    wages = summarize(reference_post_eq).mean_wage
    lo, hi = reference_post_eq.wages.stc[[0, -1]]
    for key in ("stc", "ltc", "formal"):
        assert lo <= wages[key] <= hi


def test_stc_tenure_matches_simulated_workers(reference_post_eq):
    pmf = tenure_distribution(reference_post_eq, "STC")
    settings = MicrosimSettings(block_size=20_000)
    panel = simulate_panel(reference_post_eq, reference_post_eq, reference_post_eq, n_workers=40_000,
                           seed=5, settings=settings)
    df = analysis_frame(panel)
    stc = df[df["formal_stc"] == 1]
    assert len(stc) > 1000
    assert stc["tenure_months"].mean() == pytest.approx(mean_tenure(pmf), abs=0.1)


def test_informal_cohorts_follow_the_renewal_formula(reference_post_eq):
    T = build_transition_matrix(reference_post_eq)
    stocks = stationary_stocks(T)
    s = continuation_prob(T, stocks, "INF")
    assert s == pytest.approx(reference_post_eq.rules.informal_stay.sum())
    frame = tenure_frame(reference_post_eq, T, stocks)
    assert list(frame.index) == list(range(13))
    np.testing.assert_allclose(frame["inf_cohort"], frame["inf_renewal"], atol=1e-8)
    assert continuation_prob(T, stocks, "LTC") == pytest.approx(reference_post_eq.rules.ltc_stay.sum())
