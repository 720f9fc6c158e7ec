"""Forward generators for ordered two-event current-status data (and the
three-normal univariate variant) under race-model monitoring."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import ndtr

from .bivariate import Observation
from .distributions import CensWindow, pemg
from .errors import ValidationError
from .rng import as_generator

__all__ = [
    "INFECTION_MIX",
    "OTHER_CAUSE_MIX",
    "MixtureSpec",
    "ScenarioConfig",
    "SimulatedDataset",
    "UnivariateDataset",
    "censoring_race",
    "pattern_counts",
    "scenario",
    "simulate",
    "simulate_univariate",
    "true_marginal_survival",
]


@dataclass(frozen=True)
class MixtureSpec:
    """Finite mixture of normal linear models over the design (1, x)."""

    weights: tuple
    coefs: tuple
    variances: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValidationError("mixture weights must form a simplex")
        if len(self.coefs) != w.size or len(self.variances) != w.size:
            raise ValidationError(
                "weights, coefs and variances must have one entry per component"
            )
        p = len(self.coefs[0])
        if any(len(c) != p for c in self.coefs):
            raise ValidationError("coefficient vectors have mixed lengths")
        if any(v <= 0 for v in self.variances):
            raise ValidationError("component variances must be positive")

    @property
    def n_covariates(self):
        return len(self.coefs[0]) - 1

    def draw(self, D, gen):
        """One response per design row."""
        w = np.asarray(self.weights, dtype=float)
        labels = gen.choice(w.size, size=len(D), p=w)
        m = np.asarray(self.coefs, dtype=float)
        sd = np.sqrt(np.asarray(self.variances, dtype=float))
        loc = np.einsum("ij,ij->i", D, m[labels])
        return loc + sd[labels] * gen.standard_normal(len(D))


INFECTION_MIX = MixtureSpec(
    weights=(0.6, 0.4),
    coefs=((40.0, -5.0, 0.0), (100.0, -10.0, -15.0)),
    variances=(100.0, 100.0),
)

OTHER_CAUSE_MIX = MixtureSpec(
    weights=(0.4, 0.6),
    coefs=((70.0, 0.0, 20.0), (110.0, -5.0, 0.0)),
    variances=(100.0, 400.0),
)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything the bivariate generator needs, including its seed."""

    n: int
    w: float
    lam: float
    lambdaL: float = 0.2
    window: CensWindow = CensWindow(0.0, 200.0)
    infection: MixtureSpec = INFECTION_MIX
    symptoms: MixtureSpec = OTHER_CAUSE_MIX
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("n must be at least 1")
        if not 0.0 <= self.w <= 1.0:
            raise ValidationError("w must lie in [0, 1]")
        if self.lam <= 0 or self.lambdaL <= 0:
            raise ValidationError("rates must be positive")
        if self.infection.n_covariates != self.symptoms.n_covariates:
            raise ValidationError(
                "infection and symptom mixtures disagree on covariate count"
            )


_SCENARIOS = {
    "I": {"lam": 1e-8, "w": 0.5},
    "II": {"lam": 0.2, "w": 1.0},
    "III": {"lam": 0.2, "w": 0.5},
}


def scenario(name, n=250, seed=0, **overrides):
    """Preset configs: "I" = near-independent monitoring with mixed symptom
    causes, "II" = dependent monitoring, symptoms always from other causes,
    "III" = both mechanisms active. Keyword overrides (say w=0.75) replace
    any field."""
    try:
        base = _SCENARIOS[str(name).upper()]
    except KeyError:
        raise ValidationError(
            f"unknown scenario {name!r}; choose I, II or III"
        ) from None
    kw = {"n": n, "seed": seed, **base}
    kw.update(overrides)
    return ScenarioConfig(**kw)


@dataclass(frozen=True)
class SimulatedDataset:
    """Observed current-status data plus the latent truth behind it."""

    C: np.ndarray
    delta_I: np.ndarray
    delta_S: np.ndarray
    X: np.ndarray
    I: np.ndarray
    S: np.ndarray
    rW: np.ndarray
    config: ScenarioConfig

    def __len__(self):
        return len(self.C)

    @cached_property
    def observations(self):
        return tuple(
            Observation(float(c), int(dI), int(dS), tuple(x))
            for c, dI, dS, x in zip(self.C, self.delta_I, self.delta_S, self.X)
        )

    def arrays(self):
        """(C, delta_I, delta_S, X) in the layout the fitters accept."""
        return self.C, self.delta_I, self.delta_S, self.X


@dataclass(frozen=True)
class UnivariateDataset:
    """Single-event current-status data with its latent event times."""

    C: np.ndarray
    delta: np.ndarray
    S: np.ndarray
    lam: float
    window: CensWindow

    def __len__(self):
        return len(self.C)

    def arrays(self):
        return self.C, self.delta


def censoring_race(S, lam, window, rng):
    """Monitoring times C = min(S + Exp(lam), Unif(A, B)), conditioned on
    landing inside the window.

    The uniform arm keeps C strictly below B on its own, and C > A fails
    only when the exponential arm fires at or before A, so {A < C < B} is
    exactly {S + Exp > A}. By memorylessness that conditional arm is
    max(S, A) plus a fresh Exp(lam) draw, giving the conditioned race in
    closed form with no rejection loop.
    """
    gen = as_generator(rng)
    S = np.asarray(S, dtype=float)
    n = len(S)
    exp_arm = np.maximum(S, window.A) + gen.exponential(1.0 / lam, size=n)
    visit = gen.uniform(window.A, window.B, size=n)
    return np.minimum(exp_arm, visit)


def simulate(cfg, rng=None):
    """Draw one dataset under ``cfg``.

    Covariates are one Bernoulli(1/2) column followed by standard normal
    columns (however many the coefficient vectors call for). Latents follow
    the two-path mechanism: infection times from their mixture, then with
    probability w a symptom time from the other-cause mixture, otherwise
    infection plus an Exp(lambda_L) latency. Monitoring times come from
    ``censoring_race``. When ``rng`` is omitted the config's seed is used,
    making the dataset a pure function of the config.

    Parameters
    ----------
    cfg : ScenarioConfig
    rng : seed, Generator or RngStream, optional

    Returns
    -------
    SimulatedDataset
    """
    gen = as_generator(cfg.seed if rng is None else rng)
    n, p = cfg.n, cfg.infection.n_covariates
    cols = []
    if p >= 1:
        cols.append(gen.integers(0, 2, size=n).astype(float))
    for _ in range(p - 1):
        cols.append(gen.standard_normal(n))
    X = np.column_stack(cols) if cols else np.zeros((n, 0))
    D = np.column_stack([np.ones(n), X])

    I = cfg.infection.draw(D, gen)
    rW = (gen.uniform(size=n) < cfg.w).astype(np.int64)
    S_other = cfg.symptoms.draw(D, gen)
    S = np.where(rW == 1, S_other,
                 I + gen.exponential(1.0 / cfg.lambdaL, size=n))
    C = censoring_race(S, cfg.lam, cfg.window, gen)
    return SimulatedDataset(
        C=C,
        delta_I=(I <= C).astype(np.int64),
        delta_S=(S <= C).astype(np.int64),
        X=X,
        I=I,
        S=S,
        rW=rW,
        config=cfg,
    )


def true_marginal_survival(config, outcome, x, grid):
    """Exact marginal survival curve implied by a scenario config.

    The infection marginal is the normal-mixture survival; the symptom
    marginal combines the other-cause mixture survival (probability w)
    with the exponentially modified Gaussian survival of the ordered
    branch (probability 1 - w). Used as the truth when scoring fitted
    curves.
    """
    grid = np.asarray(grid, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if len(x) != config.infection.n_covariates:
        raise ValidationError(
            f"expected {config.infection.n_covariates} covariates, got {len(x)}"
        )
    d = np.concatenate([[1.0], x])

    def mix_sf(spec):
        locs = np.asarray(spec.coefs, dtype=float) @ d
        sds = np.sqrt(np.asarray(spec.variances, dtype=float))
        w = np.asarray(spec.weights, dtype=float)
        z = (grid[:, None] - locs[None, :]) / sds[None, :]
        return np.sum(w * ndtr(-z), axis=1)

    if outcome == "I":
        return mix_sf(config.infection)
    if outcome != "S":
        raise ValidationError(f"outcome must be 'I' or 'S', got {outcome!r}")
    locs = np.asarray(config.infection.coefs, dtype=float) @ d
    sf_emg = np.sum(
        np.asarray(config.infection.weights, dtype=float)
        * pemg(grid[:, None], locs[None, :],
               np.asarray(config.infection.variances, dtype=float)[None, :],
               config.lambdaL, lower_tail=False),
        axis=1,
    )
    return config.w * mix_sf(config.symptoms) + (1.0 - config.w) * sf_emg


def pattern_counts(ds):
    """Counts of the four (delta_I, delta_S) patterns as (n00, n10, n01, n11)."""
    dI = np.asarray(ds.delta_I)
    dS = np.asarray(ds.delta_S)
    return (
        int(np.sum((dI == 0) & (dS == 0))),
        int(np.sum((dI == 1) & (dS == 0))),
        int(np.sum((dI == 0) & (dS == 1))),
        int(np.sum((dI == 1) & (dS == 1))),
    )


def simulate_univariate(n=200, weights=(0.4, 0.2, 0.4),
                        locs=(20.0, 40.0, 60.0), sigma2=25.0, lam=0.2,
                        window=None, rng=0):
    """Three-normal mixture event times monitored by the same race.

    ``sigma2`` may be a scalar (shared variance) or one value per
    component. The default window ends just past the last component's
    location, so right-tail events are only ever seen right censored;
    together with the exponential arm hugging each event this makes naive
    estimators (which assume independent monitoring) pile probability mass
    against both ends of the observed range.
    """
    window = window or CensWindow(0.0, 62.0)
    gen = as_generator(rng)
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValidationError("mixture weights must form a simplex")
    mu = np.asarray(locs, dtype=float)
    s2 = np.broadcast_to(np.asarray(sigma2, dtype=float), mu.shape)
    if w.size != mu.size or np.any(s2 <= 0):
        raise ValidationError("component parameter lengths disagree")
    labels = gen.choice(w.size, size=n, p=w)
    S = mu[labels] + np.sqrt(s2[labels]) * gen.standard_normal(n)
    C = censoring_race(S, lam, window, gen)
    return UnivariateDataset(C=C, delta=(S <= C).astype(np.int64), S=S,
                             lam=lam, window=window)
