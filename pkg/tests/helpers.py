"""Independent oracles used by the test suite.

Everything here is deliberately derived through a different route than the
library code under test: quadrature instead of closed forms, construction
instead of derived densities, generic constrained optimization instead of EM.
"""

import numpy as np
from scipy import integrate, optimize, stats


def emg_pdf_quad(x, mu, sigma2, lam):
    """EMG density by direct quadrature of the normal-exponential convolution."""
    sd = np.sqrt(sigma2)

    def integrand(u):
        return stats.norm.pdf(x - u, loc=mu, scale=sd) * lam * np.exp(-lam * u)

    val, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-12, epsrel=1e-10)
    return val


def emg_sf_quad(q, mu, sigma2, lam):
    """EMG survival P(N + E > q) by quadrature over the exponential arm."""
    sd = np.sqrt(sigma2)

    def integrand(u):
        return stats.norm.sf(q - u, loc=mu, scale=sd) * lam * np.exp(-lam * u)

    val, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-12, epsrel=1e-10)
    return val


def cens_density_construction(c, s, lam, A, B):
    """Density of C = min(s + W, U), W ~ Exp(lam), U ~ Unif(A, B), at c in (A, B).

    Derived from the race construction itself (not from the reduced two-branch
    form): f(c) = f_{s+W}(c) P(U > c) + f_U(c) P(s + W > c).
    """
    exp_arm = lam * np.exp(-lam * (c - s)) * (B - c) / (B - A) if c > s else 0.0
    surv_w = np.exp(-lam * (c - s)) if c > s else 1.0
    unif_arm = surv_w / (B - A)
    return exp_arm + unif_arm


def cens_density_integral(s, lam, A, B):
    """Quadrature of the censoring density over its support (A, B)."""
    from csurv import dens_cens_given_s

    f = lambda c: dens_cens_given_s(c, s, lam, (A, B))
    if A < s < B:  # split at the density's jump point
        lower, _ = integrate.quad(f, A, s, epsabs=1e-10, limit=200)
        upper, _ = integrate.quad(f, s, B, epsabs=1e-10, limit=200)
        return lower + upper
    total, _ = integrate.quad(f, A, B, epsabs=1e-10, limit=200)
    return total


def truncexp_cdf(x, rate, lo, hi):
    """CDF of the density proportional to e^{-rate t} on [lo, hi]."""
    x = np.clip(np.asarray(x, dtype=float), lo, hi)
    if rate == 0.0:
        return (x - lo) / (hi - lo)
    if np.isneginf(lo):  # needs rate < 0; anchor at the finite bound
        return np.exp(-rate * (x - hi))
    num = np.expm1(-rate * (x - lo))
    den = np.expm1(-rate * (hi - lo)) if np.isfinite(hi) else -1.0
    return num / den


def tilted_truncnorm_cdf_quad(x, mu, sigma2, tilt, lo, hi):
    """CDF of the density proportional to e^{tilt*s} N(s | mu, sigma2) on
    [lo, hi], by quadrature (no completing-the-square shortcut)."""
    sd = np.sqrt(sigma2)

    def f(s):
        # stabilized: factor out the maximum exponent over the interval
        return np.exp(tilt * (s - ref)) * stats.norm.pdf(s, loc=mu, scale=sd)

    ref = np.clip(mu + tilt * sigma2, lo if np.isfinite(lo) else mu - 20 * sd,
                  hi if np.isfinite(hi) else mu + 20 * sd)
    a = lo if np.isfinite(lo) else mu + min(tilt * sigma2, 0.0) - 14 * sd
    b = hi if np.isfinite(hi) else mu + max(tilt * sigma2, 0.0) + 14 * sd
    total, _ = integrate.quad(f, a, b, epsabs=1e-13, limit=400)
    part, _ = integrate.quad(f, a, min(max(x, a), b), epsabs=1e-13, limit=400)
    return part / total


def grid_ks_distance(draws, cdf_on_grid, grid):
    """Sup distance between the empirical CDF of `draws` and a reference CDF
    evaluated on `grid` (fine-grid approximation of the KS statistic)."""
    ecdf = np.searchsorted(np.sort(draws), grid, side="right") / len(draws)
    return float(np.max(np.abs(ecdf - cdf_on_grid)))


def npmle_loglik(p, l_runs, r_runs):
    """Current-status log-likelihood of atom masses p (length J+1)."""
    p = np.asarray(p, dtype=float)
    F = np.cumsum(p)[: len(l_runs)]
    F = np.clip(F, 1e-300, 1.0)
    Fbar = np.clip(1.0 - F, 1e-300, 1.0)
    return float(np.sum(l_runs * np.log(F) + r_runs * np.log(Fbar)))


def npmle_oracle(l_runs, r_runs, seed=0, n_restarts=12):
    """Maximize the run-count log-likelihood over the simplex with a generic
    constrained optimizer and random restarts (oracle for the EM fit)."""
    l_runs = np.asarray(l_runs, dtype=float)
    r_runs = np.asarray(r_runs, dtype=float)
    dim = len(l_runs) + 1
    rng = np.random.default_rng(seed)

    def neg(p):
        return -npmle_loglik(p, l_runs, r_runs)

    starts = [np.full(dim, 1.0 / dim)]
    starts += [rng.dirichlet(np.ones(dim)) for _ in range(n_restarts - 1)]
    best, best_val = None, np.inf
    for x0 in starts:
        res = optimize.minimize(
            neg, x0, method="SLSQP",
            bounds=[(0.0, 1.0)] * dim,
            constraints=[{"type": "eq", "fun": lambda p: np.sum(p) - 1.0}],
            options={"ftol": 1e-14, "maxiter": 1000},
        )
        if res.fun < best_val:
            best_val, best = res.fun, res.x
    p = np.clip(best, 0.0, 1.0)
    return p / p.sum()


def batch_means_se(x):
    """Monte Carlo standard error of the mean of a (possibly autocorrelated)
    sequence, by batch means with ~sqrt(n) batches."""
    x = np.asarray(x, dtype=float)
    nb = max(int(np.sqrt(len(x))), 2)
    bs = len(x) // nb
    means = x[: nb * bs].reshape(nb, bs).mean(axis=1)
    return float(np.std(means, ddof=1) / np.sqrt(nb))
