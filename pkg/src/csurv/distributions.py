"""Distributional kernels shared by the samplers.

Densities are evaluated in log space wherever exponential tilts or mixture
weights are involved: factors like exp(lambda**2 * sigma**2 / 2) overflow in
linear space long before the parameters become unreasonable.

All samplers take the random source first and are deterministic functions of
it; see :mod:`csurv.rng`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri_exp

from .rng import as_generator

__all__ = [
    "CensWindow",
    "TruncBounds",
    "dnorm",
    "dens_cens_given_s",
    "demg",
    "pemg",
    "rtruncnorm",
    "rtruncexp",
    "stick_break",
    "conj_update_linear",
    "conj_update_invgamma",
]

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class CensWindow:
    """Observation window (A, B); all censoring times must fall inside it."""

    A: float
    B: float

    def __post_init__(self):
        if not (np.isfinite(self.A) and np.isfinite(self.B)):
            raise ValueError("window bounds must be finite")
        if not self.A < self.B:
            raise ValueError(f"need A < B, got ({self.A}, {self.B})")

    @property
    def width(self) -> float:
        return self.B - self.A


@dataclass(frozen=True)
class TruncBounds:
    """Truncation interval [lo, hi]; either side may be infinite."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got ({self.lo}, {self.hi})")

    def __iter__(self):
        return iter((self.lo, self.hi))


def _unpack_window(window) -> tuple[float, float]:
    if isinstance(window, CensWindow):
        return window.A, window.B
    A, B = window
    if not A < B:
        raise ValueError(f"need A < B, got ({A}, {B})")
    return float(A), float(B)


def _unpack_bounds(bounds):
    if isinstance(bounds, TruncBounds):
        return bounds.lo, bounds.hi
    lo, hi = bounds
    return lo, hi


def dnorm(x, mean=0.0, sd=1.0, log=False):
    """Normal density, vectorized; R-style `log` switch."""
    x, mean, sd = np.broadcast_arrays(x, mean, sd)
    z = (np.asarray(x, float) - mean) / sd
    logp = -0.5 * z * z - np.log(sd) - 0.5 * _LOG_2PI
    return logp if log else np.exp(logp)


def dens_cens_given_s(c, s, lam, window, log=False):
    """Conditional density of the censoring time given the latent time.

    The monitoring time is the minimum of a symptom-triggered exponential
    delay, C = s + Exp(lam), and a protocol visit Unif(A, B). Conditional on
    the latent time s the density of C on (A, B) is piecewise::

        f(c | s) = 1/(B-A)                                    if c <= s
        f(c | s) = e^{-lam (c-s)} (1 + lam (B-c)) / (B-A)     if c >  s

    with a jump of size lam*(B-c)/(B-A) at c = s. It integrates to one over
    (A, B) for any s >= A; for s < A the race can resolve before the window
    opens, and the mass e^{-lam (A-s)} remaining on (A, B) is less than one.

    Parameters
    ----------
    c : array_like
        Censoring times, all strictly inside (A, B).
    s : array_like
        Latent event times (any real value; broadcast against `c`).
    lam : float
        Dependent-censoring rate, > 0.
    window : CensWindow or (A, B) pair
    log : bool, optional
        Return the log density.
    """
    A, B = _unpack_window(window)
    c = np.asarray(c, dtype=float)
    if np.any(c <= A) or np.any(c >= B):
        raise ValueError("censoring times must lie strictly inside (A, B)")
    if not lam > 0:
        raise ValueError(f"need lam > 0, got {lam}")
    c, s = np.broadcast_arrays(c, np.asarray(s, dtype=float))
    logp = np.where(
        c > s,
        -lam * (c - s) + np.log1p(lam * (B - c)),
        0.0,
    ) - np.log(B - A)
    if logp.ndim == 0:
        logp = float(logp)
    return logp if log else np.exp(logp)


def _cens_loglik_terms(c, s, lam, A, B):
    """Log density of C = min(s + Exp(lam), Unif(A, B)) without the (A, B)
    domain restriction of `dens_cens_given_s`.

    Needed internally by the rate update: for c <= A only the exponential
    arm can have won the race, so the density is lam * e^{-lam (c-s)} there.
    Impossible combinations (c >= B, or c <= A with c <= s) return -inf.
    """
    c, s = np.broadcast_arrays(np.asarray(c, float), np.asarray(s, float))
    with np.errstate(invalid="ignore"):
        logp = np.where(
            c > A,
            np.where(c > s, -lam * (c - s) + np.log1p(lam * np.maximum(B - c, 0.0)), 0.0)
            - np.log(B - A),
            np.where(c > s, np.log(lam) - lam * (c - s), -np.inf),
        )
    return np.where(c < B, logp, -np.inf)


def demg(x, mu, sigma2, lam, log=False):
    """Density of the exponentially modified Gaussian N(mu, sigma2) + Exp(lam).

    Evaluated in log space: the closed form contains exp(lam^2 sigma^2 / 2),
    which overflows quickly, but pairing it with the far-tail normal CDF in
    log space keeps every regime finite.

    Parameters
    ----------
    x : array_like
    mu, sigma2, lam : array_like
        Gaussian location/variance and exponential rate; sigma2, lam > 0.
    log : bool, optional
    """
    sigma2 = np.asarray(sigma2, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(sigma2 <= 0):
        raise ValueError("sigma2 must be positive")
    if np.any(lam <= 0):
        raise ValueError("lam must be positive")
    x, mu, sigma2, lam = np.broadcast_arrays(np.asarray(x, float), mu, sigma2, lam)
    sigma = np.sqrt(sigma2)
    logp = (
        np.log(lam)
        + 0.5 * lam * (lam * sigma2 + 2.0 * mu - 2.0 * x)
        + log_ndtr((x - mu - lam * sigma2) / sigma)
    )
    if logp.ndim == 0:
        logp = float(logp)
    return logp if log else np.exp(logp)


def pemg(q, mu, sigma2, lam, lower_tail=True):
    """CDF (or survival, `lower_tail=False`) of N(mu, sigma2) + Exp(lam).

    Uses the survival form S(q) = Phi(-u) + exp(-lam (q-mu) + lam^2 sigma^2/2
    + log Phi(u - lam sigma)) with u = (q-mu)/sigma; the exponent is a sum of
    a linear and a dominating quadratic term, so it never overflows.
    """
    sigma2 = np.asarray(sigma2, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(sigma2 <= 0):
        raise ValueError("sigma2 must be positive")
    if np.any(lam <= 0):
        raise ValueError("lam must be positive")
    q, mu, sigma2, lam = np.broadcast_arrays(np.asarray(q, float), mu, sigma2, lam)
    sigma = np.sqrt(sigma2)
    u = (q - mu) / sigma
    sf = ndtr(-u) + np.exp(
        -lam * (q - mu) + 0.5 * lam * lam * sigma2 + log_ndtr(u - lam * sigma)
    )
    sf = np.clip(sf, 0.0, 1.0)
    if sf.ndim == 0:
        sf = float(sf)
    return 1.0 - sf if lower_tail else sf


def _log1mexp(z):
    """log(1 - e^z) for z <= 0, stable near both ends."""
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(
            z > -np.log(2.0),
            np.log(-np.expm1(z)),
            np.log1p(-np.exp(z)),
        )
    return out


def _trunc_std_lower(a, b, u):
    """Inverse-CDF draw of a standard normal truncated to [a, b], where the
    interval midpoint is <= 0 (left side), in log-CDF coordinates."""
    u = np.maximum(u, np.nextafter(0.0, 1.0))  # keep log(u) finite
    log_pb = log_ndtr(b)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_pa = log_ndtr(a)
        # log(p_b - p_a), then log(p_a + u (p_b - p_a))
        log_diff = log_pb + _log1mexp(np.minimum(log_pa - log_pb, 0.0))
        log_p = np.logaddexp(log_pa, np.log(u) + log_diff)
    return ndtri_exp(np.minimum(log_p, 0.0))


def _robert_tail(a, rng):
    """Rejection sampler for a standard normal truncated to [a, inf), a > 0,
    with a shifted-exponential proposal; acceptance is at worst ~0.76."""
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    todo = np.ones(a.shape, dtype=bool)
    alpha = 0.5 * (a + np.sqrt(a * a + 4.0))
    while todo.any():
        k = int(todo.sum())
        z = a[todo] + rng.exponential(size=k) / alpha[todo]
        log_acc = -0.5 * (z - alpha[todo]) ** 2
        ok = np.log(rng.uniform(size=k)) < log_acc
        idx = np.flatnonzero(todo)[ok]
        out.flat[idx] = z[ok]
        todo.flat[idx] = False
    return out


def rtruncnorm(rng, mu, sigma, bounds, size=None):
    """Exact draws from N(mu, sigma^2) truncated to [lo, hi].

    One-sided far tails (standardized bound beyond 0.5) use rejection with a
    shifted-exponential proposal; everything else is inverse-CDF in log-CDF
    coordinates on whichever side of the mean is better conditioned. Both
    paths are exact, so mixing them costs nothing but keeps the tail case
    cheap.

    Parameters
    ----------
    rng : RngStream, numpy Generator, or int seed
    mu, sigma : array_like
    bounds : TruncBounds or (lo, hi) pair of array_like
    size : tuple, optional
        Output shape; defaults to the broadcast shape of the parameters.
    """
    gen = as_generator(rng)
    lo, hi = _unpack_bounds(bounds)
    mu, sigma, lo, hi = np.broadcast_arrays(
        np.asarray(mu, float), np.asarray(sigma, float), lo, hi
    )
    if size is not None:
        mu, sigma, lo, hi = (np.broadcast_to(v, size) for v in (mu, sigma, lo, hi))
    scalar = mu.ndim == 0
    mu, sigma, lo, hi = (np.atleast_1d(v).astype(float) for v in (mu, sigma, lo, hi))
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    if np.any(lo >= hi):
        raise ValueError("need lo < hi elementwise")

    a = (lo - mu) / sigma
    b = (hi - mu) / sigma
    z = np.empty(a.shape)

    right_tail = np.isposinf(b) & (a > 0.5)
    left_tail = np.isneginf(a) & (b < -0.5)
    rest = ~(right_tail | left_tail)

    if right_tail.any():
        z[right_tail] = _robert_tail(a[right_tail], gen)
    if left_tail.any():
        z[left_tail] = -_robert_tail(-b[left_tail], gen)
    if rest.any():
        ar, br = a[rest], b[rest]
        with np.errstate(invalid="ignore"):
            mid_right = np.where(np.isnan(ar + br), False, ar + br > 0)
        af = np.where(mid_right, -br, ar)
        bf = np.where(mid_right, -ar, br)
        u = gen.uniform(size=af.shape)
        zf = _trunc_std_lower(af, bf, u)
        z[rest] = np.where(mid_right, -zf, zf)

    out = np.clip(mu + sigma * np.clip(z, a, b), lo, hi)
    return float(out[0]) if scalar else out


def rtruncexp(rng, rate, bounds, size=None):
    """Exact inverse-CDF draws from the density proportional to e^{-rate*x}
    on [lo, hi].

    Any real rate is allowed on a bounded interval; rate = 0 degenerates to
    the uniform distribution. The normalizability conditions are checked:
    a positive rate needs lo > -inf, a negative rate needs hi < +inf.

    Parameters
    ----------
    rng : RngStream, numpy Generator, or int seed
    rate : array_like
    bounds : TruncBounds or (lo, hi) pair of array_like
    size : tuple, optional
    """
    gen = as_generator(rng)
    lo, hi = _unpack_bounds(bounds)
    rate, lo, hi = np.broadcast_arrays(np.asarray(rate, float), lo, hi)
    if size is not None:
        rate, lo, hi = (np.broadcast_to(v, size) for v in (rate, lo, hi))
    scalar = rate.ndim == 0
    rate, lo, hi = (np.atleast_1d(v).astype(float) for v in (rate, lo, hi))
    if np.any(lo >= hi):
        raise ValueError("need lo < hi elementwise")
    if np.any((rate >= 0) & np.isneginf(lo)) or np.any((rate <= 0) & np.isposinf(hi)):
        raise ValueError("density not normalizable: check the sign of rate "
                         "against the unbounded side of the support")

    L = hi - lo
    u = gen.uniform(size=rate.shape)
    out = np.empty(rate.shape)

    pos = rate > 0
    neg = rate < 0
    zero = ~pos & ~neg
    if pos.any():
        r, ell = rate[pos], L[pos]
        out[pos] = lo[pos] - np.log1p(u[pos] * np.expm1(-r * ell)) / r
    if neg.any():
        # mirror: hi - x has rate -rate > 0 on [0, L]
        r, ell = -rate[neg], L[neg]
        out[neg] = hi[neg] + np.log1p(u[neg] * np.expm1(-r * ell)) / r
    if zero.any():
        out[zero] = lo[zero] + u[zero] * L[zero]

    out = np.clip(out, lo, hi)
    return float(out[0]) if scalar else out


def stick_break(v):
    """Stick-breaking weights w_k = v_k * prod_{l<k} (1 - v_l).

    Under truncation the last entry of `v` is 1, which makes the weights sum
    to one exactly; entries after a v_k = 1 receive zero weight, so appending
    to a terminated stick is a no-op.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if np.any(v < 0) or np.any(v > 1):
        raise ValueError("stick fractions must lie in [0, 1]")
    stick_left = np.concatenate(([1.0], np.cumprod(1.0 - v[:-1])))
    return v * stick_left


def conj_update_linear(y, D, sigma2, prior_mean, prior_cov, rng):
    """Draw regression coefficients from their Gaussian full conditional.

    Model: y_i ~ N(d_i' m, sigma2), prior m ~ N(prior_mean, prior_cov).
    With no observations this is a plain prior draw. A singular posterior
    precision surfaces as `numpy.linalg.LinAlgError`.

    Parameters
    ----------
    y : (n,) responses (n may be 0)
    D : (n, p) design rows
    sigma2 : float
    prior_mean : (p,) vector
    prior_cov : (p, p) matrix or (p,) diagonal
    rng : RngStream, numpy Generator, or int seed
    """
    gen = as_generator(rng)
    y = np.asarray(y, dtype=float)
    D = np.asarray(D, dtype=float)
    prior_mean = np.asarray(prior_mean, dtype=float)
    prior_cov = np.asarray(prior_cov, dtype=float)
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    p = prior_mean.shape[0]
    if prior_cov.ndim == 1:
        prior_prec = np.diag(1.0 / prior_cov)
    else:
        prior_prec = np.linalg.inv(prior_cov)
    prec = prior_prec + D.T @ D / sigma2
    L = np.linalg.cholesky(prec)
    rhs = prior_prec @ prior_mean + D.T @ y / sigma2
    mean = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
    z = gen.standard_normal(p)
    return mean + np.linalg.solve(L.T, z)


def conj_update_invgamma(residual_ss, n, a, b, rng):
    """Draw a variance from IG(a + n/2, b + residual_ss/2).

    Vectorized over `residual_ss` / `n`, so a truncation's worth of
    component variances can be refreshed in one call.
    """
    residual_ss = np.asarray(residual_ss, dtype=float)
    if np.any(residual_ss < 0):
        raise ValueError("residual sum of squares cannot be negative")
    if not (np.all(np.asarray(a) > 0) and np.all(np.asarray(b) > 0)):
        raise ValueError("inverse-gamma parameters must be positive")
    gen = as_generator(rng)
    draw = 1.0 / gen.gamma(a + 0.5 * np.asarray(n), 1.0 / (b + 0.5 * residual_ss))
    return float(draw) if np.ndim(draw) == 0 else draw
