"""Shared blocked-Gibbs machinery: truncated stick-breaking updates, label
sampling, total-mass updates, the monitoring-rate Metropolis step, and
K-means initialization.

Both samplers (one event time, or an ordered pair) run on a truncated
stick-breaking representation with K_max components, so their label, stick,
and mass updates are identical and live here.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .distributions import _cens_loglik_terms, stick_break
from .rng import as_generator

__all__ = [
    "McmcConfig",
    "sample_labels",
    "update_sticks",
    "update_mass",
    "update_rate_mh",
    "adapt_step",
    "kmeans_init_labels",
]

ADAPT_WINDOW = 50

_V_CLAMP = 1.0 - 1e-12


@dataclass
class McmcConfig:
    """Chain schedule and sampler switches.

    The default schedule (35000 sweeps, 10000 burn-in, thinning 20) is the
    one used for all reported fits; scale it down for exploratory runs.

    `naive_conditionals` switches the latent-time full conditionals to the
    simpler forms that ignore the monitoring-rate tilt (and use the
    monitoring rate instead of the latency rate in the ordered infection
    tilt). The default includes the exact tilts; the naive variant is kept
    for comparison and is not exactly invariant under the stated model.

    `fix_lambda` / `fix_w` pin the monitoring dependence or the other-cause
    probability instead of sampling them; `fix_lambda` near zero with
    `fix_w = 1` gives the independent-marginals baseline fit.
    """

    n_iter: int = 35_000
    burn_in: int = 10_000
    thin: int = 20
    step_lambda: float = 0.3
    adapt_step: bool = True
    naive_conditionals: bool = False
    dump_latents: bool = False
    fix_lambda: float | None = None
    fix_w: float | None = None

    def __post_init__(self):
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if not 0 <= self.burn_in < self.n_iter:
            raise ValueError("need 0 <= burn_in < n_iter")
        if self.step_lambda <= 0:
            raise ValueError("step_lambda must be positive")
        if self.fix_lambda is not None and not self.fix_lambda > 0:
            raise ValueError("fix_lambda must be positive")
        if self.fix_w is not None and not 0 < self.fix_w <= 1:
            raise ValueError("fix_w must be in (0, 1]")

    @property
    def n_draws(self) -> int:
        return (self.n_iter - self.burn_in) // self.thin


def sample_labels(logw, rng):
    """Draw one categorical label per row of the unnormalized log-weight
    matrix `logw` (n, K)."""
    gen = as_generator(rng)
    logw = logw - logsumexp(logw, axis=1, keepdims=True)
    cum = np.cumsum(np.exp(logw), axis=1)
    u = gen.uniform(size=(logw.shape[0], 1)) * cum[:, -1:]
    return np.minimum((cum > u).argmax(axis=1), logw.shape[1] - 1)


def update_sticks(counts, M, rng):
    """Draw stick fractions v_k ~ Beta(1 + n_k, M + sum_{l>k} n_l) for a
    truncation with len(counts) components (the last fraction is 1), and
    return (v, weights)."""
    gen = as_generator(rng)
    counts = np.asarray(counts, dtype=float)
    K = len(counts)
    tail = np.concatenate([np.cumsum(counts[::-1])[::-1][1:], [0.0]])
    v = np.ones(K)
    if K > 1:
        v[:-1] = gen.beta(1.0 + counts[:-1], M + tail[:-1])
    return v, stick_break(v)


def update_mass(v, a_M, b_M, rng):
    """Draw the total mass M ~ Ga(a_M + K - 1, b_M - sum_{k<K} log(1 - v_k)).

    Stick fractions numerically equal to 1 below the truncation are clamped
    just under 1 so the rate stays finite.
    """
    gen = as_generator(rng)
    v = np.asarray(v, dtype=float)
    head = np.minimum(v[:-1], _V_CLAMP)
    rate = b_M - np.sum(np.log1p(-head))
    return gen.gamma(a_M + len(v) - 1.0, 1.0 / rate)


def update_rate_mh(lam, c_left, s_left, a, b, step, window, rng):
    """One random-walk Metropolis step on log(lambda) for the monitoring
    rate, targeting the Ga(a, b) prior times the monitoring-time density of
    the left-censored subjects (the right-censored ones contribute a
    constant). Returns (new_lambda, accepted).
    """
    gen = as_generator(rng)
    A, B = window.A, window.B

    def loglik(rate):
        return float(np.sum(_cens_loglik_terms(c_left, s_left, rate, A, B)))

    prop = lam * np.exp(step * gen.standard_normal())
    # Ga prior plus the log-scale Jacobian: a*log(lam) - b*lam
    log_ratio = (
        loglik(prop) - loglik(lam)
        + a * (np.log(prop) - np.log(lam)) - b * (prop - lam)
    )
    if np.log(gen.uniform()) < log_ratio:
        return prop, True
    return lam, False


def adapt_step(step, accepted, window=ADAPT_WINDOW):
    """Rescale a Metropolis step size from the acceptance count over the
    last `window` proposals (call once per window, during burn-in only)."""
    rate = accepted / window
    if rate < 0.15:
        return step * 0.8
    if rate > 0.40:
        return step * 1.2
    return step


def kmeans_init_labels(x, k, rng):
    """K-means labels of a 1-d array, seeded from the chain's stream; used
    only to initialize cluster assignments."""
    from scipy.cluster.vq import kmeans2

    gen = as_generator(rng)
    x = np.asarray(x, dtype=float)
    k = int(min(k, len(np.unique(x))))
    if k < 2:
        return np.zeros(len(x), dtype=np.int64)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, labels = kmeans2(
            x.reshape(-1, 1), k, minit="++",
            seed=int(gen.integers(2**31 - 1)),
        )
    return labels.astype(np.int64)


def mle_by_cluster(y, labels, K, floor=1e-2):
    """Within-cluster mean/variance pairs for initialization; clusters with
    fewer than two members fall back to the global statistics."""
    y = np.asarray(y, dtype=float)
    gmean, gvar = float(y.mean()), float(max(y.var(), floor))
    means = np.full(K, gmean)
    variances = np.full(K, gvar)
    for k in range(K):
        members = y[labels == k]
        if len(members) >= 2:
            means[k] = members.mean()
            variances[k] = max(members.var(), floor)
        elif len(members) == 1:
            means[k] = members[0]
    return means, variances
