"""Tests for the one-sample sampler: latent-time conditionals against
closed-form truncated laws, bookkeeping of the full fit, and a short
successive-conditional run."""

import numpy as np
import pytest
from scipy import stats

from csurv.distributions import CensWindow
from csurv.errors import ValidationError
from csurv.gibbs import McmcConfig
from csurv.univariate import (
    UniChainState,
    UniHyper,
    fit_univariate,
    impute_S_uni,
    prior_reproduction_univariate,
    update_lambda_mh,
)

from helpers import batch_means_se

WINDOW = CensWindow(0.0, 200.0)


def single_component_state(n, mu, sigma2, lam, window=WINDOW):
    """State whose every subject sits in component 0."""
    return UniChainState(
        S=np.zeros(n),
        r=np.zeros(n, dtype=np.int64),
        mu=np.array([mu, 0.0]),
        sigma2=np.array([sigma2, 1.0]),
        v=np.array([1.0, 1.0]),
        weights=np.array([1.0, 0.0]),
        M=1.0,
        lam=lam,
        mu0=0.0,
        kappa0=1.0,
        b_sigma=1.0,
        window=window,
    )


class TestImputeS:
    def test_status_constraints_hold(self):
        gen = np.random.default_rng(14)
        n = 4000
        state = single_component_state(n, mu=50.0, sigma2=400.0, lam=0.1)
        c = gen.uniform(1.0, 199.0, size=n)
        delta = gen.integers(0, 2, size=n)
        S = impute_S_uni(state, (c, delta), gen)
        assert np.all(S[delta == 1] <= c[delta == 1])
        assert np.all(S[delta == 0] >= c[delta == 0])

    def test_left_censored_is_tilted_truncated_normal(self):
        # for a left-censored subject the conditional is
        # N(mu + lam sigma^2, sigma^2) truncated to (-inf, C]
        gen = np.random.default_rng(7)
        n = 100_000
        mu, sigma2, lam, c = 45.0, 64.0, 0.15, 50.0
        state = single_component_state(n, mu, sigma2, lam)
        S = impute_S_uni(state, (np.full(n, c), np.ones(n, dtype=int)), gen)
        loc, sd = mu + lam * sigma2, np.sqrt(sigma2)
        ref = stats.truncnorm(-np.inf, (c - loc) / sd, loc=loc, scale=sd)
        assert stats.kstest(S, ref.cdf).statistic < 0.01

    def test_right_censored_is_plain_truncated_normal(self):
        gen = np.random.default_rng(8)
        n = 100_000
        mu, sigma2, lam, c = 60.0, 100.0, 0.3, 55.0
        state = single_component_state(n, mu, sigma2, lam)
        S = impute_S_uni(state, (np.full(n, c), np.zeros(n, dtype=int)), gen)
        sd = np.sqrt(sigma2)
        ref = stats.truncnorm((c - mu) / sd, np.inf, loc=mu, scale=sd)
        assert stats.kstest(S, ref.cdf).statistic < 0.01

    def test_naive_variant_drops_the_tilt(self):
        gen = np.random.default_rng(9)
        n = 100_000
        mu, sigma2, lam, c = 45.0, 64.0, 0.15, 50.0
        state = single_component_state(n, mu, sigma2, lam)
        S = impute_S_uni(state, (np.full(n, c), np.ones(n, dtype=int)), gen,
                         naive_conditionals=True)
        sd = np.sqrt(sigma2)
        ref = stats.truncnorm(-np.inf, (c - mu) / sd, loc=mu, scale=sd)
        assert stats.kstest(S, ref.cdf).statistic < 0.01


class TestUpdateLambdaMh:
    def test_prior_recovery_without_left_censoring(self):
        # all-right-censored data leaves the Ga(a, b) prior as the target
        gen = np.random.default_rng(31)
        n = 50
        state = single_component_state(n, mu=100.0, sigma2=100.0, lam=0.5)
        state.S = np.full(n, 150.0)
        data = (np.full(n, 50.0), np.zeros(n, dtype=int))
        chain = np.empty(20_000)
        for t in range(len(chain)):
            state.lam, _ = update_lambda_mh(state, data, 0.5, gen, a=10.0, b=20.0)
            chain[t] = state.lam
        se = batch_means_se(chain)
        assert chain.mean() == pytest.approx(0.5, abs=5 * se)


class TestFitUnivariate:
    def _toy(self, n=80, seed=5):
        gen = np.random.default_rng(seed)
        s = gen.normal(60.0, 15.0, size=n)
        visit = gen.uniform(0.0, 200.0, size=n)
        c = np.minimum(s + gen.exponential(5.0, size=n), visit)
        c = np.clip(c, 1e-3, 200.0 - 1e-3)
        return c, (s <= c).astype(int)

    def test_shapes_and_simplex(self):
        c, delta = self._toy()
        cfg = McmcConfig(n_iter=240, burn_in=40, thin=4)
        draws = fit_univariate((c, delta), WINDOW, cfg=cfg, rng=1)
        assert draws.n_draws == cfg.n_draws == 50
        assert draws.weights.shape == (50, 40)
        np.testing.assert_allclose(draws.weights.sum(axis=1), 1.0, atol=1e-10)
        assert np.all(draws.sigma2 > 0)
        assert np.all(draws.lam > 0)
        assert np.all(draws.M > 0)

    def test_same_seed_reproduces(self):
        c, delta = self._toy()
        cfg = McmcConfig(n_iter=120, burn_in=20, thin=2)
        a = fit_univariate((c, delta), WINDOW, cfg=cfg, rng=42)
        b = fit_univariate((c, delta), WINDOW, cfg=cfg, rng=42)
        np.testing.assert_array_equal(a.mu, b.mu)
        np.testing.assert_array_equal(a.lam, b.lam)
        c2 = fit_univariate((c, delta), WINDOW, cfg=cfg, rng=43)
        assert not np.array_equal(a.lam, c2.lam)

    def test_latents_respect_status(self):
        c, delta = self._toy()
        cfg = McmcConfig(n_iter=150, burn_in=30, thin=3, dump_latents=True)
        draws = fit_univariate((c, delta), WINDOW, cfg=cfg, rng=3)
        assert draws.latents.shape == (cfg.n_draws, len(c))
        left = delta == 1
        assert np.all(draws.latents[:, left] <= c[left])
        assert np.all(draws.latents[:, ~left] >= c[~left])

    def test_fix_lambda(self):
        c, delta = self._toy()
        cfg = McmcConfig(n_iter=100, burn_in=20, thin=2, fix_lambda=0.25)
        draws = fit_univariate((c, delta), WINDOW, cfg=cfg, rng=2)
        assert np.all(draws.lam == 0.25)
        assert np.isnan(draws.accept_rate)

    def test_rejects_out_of_window_times(self):
        with pytest.raises(ValidationError):
            fit_univariate((np.array([250.0]), np.array([1])), WINDOW)

    def test_accepts_row_format(self):
        rows = [(30.0, 1), (90.0, 0), (55.0, 1)]
        cfg = McmcConfig(n_iter=60, burn_in=10, thin=5)
        draws = fit_univariate(rows, WINDOW, cfg=cfg, rng=0)
        assert draws.n == 3

    def test_recovers_single_normal_survival(self):
        # events N(50, 10^2), lam = 0.2: posterior mean survival at the
        # true median should sit near one half
        gen = np.random.default_rng(17)
        n = 150
        s = gen.normal(50.0, 10.0, size=n)
        visit = gen.uniform(0.0, 200.0, size=n)
        c = np.minimum(s + gen.exponential(1 / 0.2, size=n), visit)
        delta = (s <= c).astype(int)
        cfg = McmcConfig(n_iter=2000, burn_in=500, thin=5)
        draws = fit_univariate((c, delta), WINDOW, cfg=cfg, rng=11)
        sd = np.sqrt(draws.sigma2)
        surv50 = np.mean(
            np.sum(draws.weights * stats.norm.sf((50.0 - draws.mu) / sd), axis=1)
        )
        assert abs(surv50 - 0.5) < 0.12


class TestPriorReproduction:
    def test_short_run_matches_prior_moments(self):
        chains = prior_reproduction_univariate(
            n=25, sweeps=3000, step=0.4, rng=19
        )
        # lam ~ Ga(10, 20), M ~ Ga(10, 1), kappa0 ~ Ga(1, 1)
        for name, mean in (("lam", 0.5), ("M", 10.0), ("kappa0", 1.0)):
            se = batch_means_se(chains[name])
            assert chains[name].mean() == pytest.approx(mean, abs=6 * se), name
