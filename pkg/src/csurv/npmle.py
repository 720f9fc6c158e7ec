"""Unconstrained nonparametric MLE for univariate current status data.

Each subject contributes only a monitoring time C and an indicator of
whether the event had already occurred. The NPMLE of the event-time
distribution is a discrete measure supported on a small set of observed
monitoring times: the first left-censored time plus every left-censored
time that immediately follows a right-censored one (in time order), with a
final atom floating past the last right-censored observation. The fit
reduces to run counts between consecutive support points and is computed
by EM self-consistency.

Under monitoring that chases the event (the race model), this estimator
piles mass onto the extremes of the observed range; the mixture samplers
in this package exist because of that failure mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "UniObservation",
    "SupportSet",
    "NpmleFit",
    "extract_support",
    "em_fit",
    "cs_loglik",
    "fit_npmle",
]

_F_FLOOR = 1e-300


@dataclass(frozen=True)
class UniObservation:
    """One subject: monitoring time C, delta = 1 if the event preceded C."""

    C: float
    delta: int

    def __post_init__(self):
        if not (np.isfinite(self.C) and self.C > 0):
            raise ValueError(f"C must be finite and positive, got {self.C}")
        if self.delta not in (0, 1):
            raise ValueError(f"delta must be 0 or 1, got {self.delta}")

    def __iter__(self):
        return iter((self.C, self.delta))


def _as_uni_arrays(data) -> tuple[np.ndarray, np.ndarray]:
    if (isinstance(data, tuple) and len(data) == 2
            and np.ndim(data[0]) == 1 and np.ndim(data[1]) == 1):
        c = np.asarray(data[0], dtype=float)
        delta = np.asarray(data[1], dtype=float)
    else:
        arr = np.asarray([tuple(row) for row in data], dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("expected rows of (C, delta)")
        c, delta = arr[:, 0], arr[:, 1]
    if not np.all(np.isfinite(c)):
        raise ValueError("monitoring times must be finite")
    if not np.all((delta == 0) | (delta == 1)):
        raise ValueError("delta must be 0 or 1")
    return c, delta.astype(np.int64)


@dataclass
class SupportSet:
    """Support points and run counts extracted from the data.

    `Cstar` holds the J support times and `sentinel` the location of the
    floating final atom (just past the largest monitoring time). `l_runs`
    and `r_runs` count left/right censored observations per run
    [C*_j, C*_{j+1}); right-censored observations before the first support
    point contribute nothing to the likelihood and are only tallied in
    `n_uninformative`.
    """

    Cstar: np.ndarray
    sentinel: float
    l_runs: np.ndarray
    r_runs: np.ndarray
    n_uninformative: int = 0
    degenerate: bool = False

    @property
    def J(self) -> int:
        return len(self.Cstar)

    @property
    def n(self) -> int:
        return int(self.l_runs.sum() + self.r_runs.sum()) + self.n_uninformative

    @property
    def atoms(self) -> np.ndarray:
        """All J+1 atom locations including the sentinel."""
        return np.concatenate([self.Cstar, [self.sentinel]])


@dataclass
class NpmleFit:
    """EM result: atom masses p (length J+1) and their cumulative sums."""

    p: np.ndarray
    F: np.ndarray
    loglik_trace: np.ndarray
    iterations: int
    converged: bool
    support: SupportSet

    @property
    def atoms(self) -> np.ndarray:
        return self.support.atoms


def extract_support(data) -> SupportSet:
    """Reduce data to support points and run counts.

    Observations are sorted by monitoring time with left-censored ones
    first at ties (keeping them eligible as support points). Raises if no
    observation is left censored, since then no event mass is identifiable
    below any monitoring time. All observations left censored is allowed
    but flagged degenerate: the likelihood is maximized by piling all mass
    on the smallest monitoring time.
    """
    c, delta = _as_uni_arrays(data)
    if not np.any(delta == 1):
        raise ValueError("no event mass identifiable: every observation is right censored")
    order = np.lexsort((1 - delta, c))
    cs, ds = c[order], delta[order]

    # the first left-censored time is either at index 0 or follows a 0,
    # so one rule covers both clauses of the support definition
    is_support = (ds == 1) & np.concatenate([[True], ds[:-1] == 0])
    Cstar = cs[is_support]

    sentinel = float(cs[-1]) + 1.0
    edges = np.concatenate([Cstar, [sentinel]])
    run = np.searchsorted(edges, cs, side="right") - 1
    informative = run >= 0
    J = len(Cstar)
    l_runs = np.bincount(run[informative & (ds == 1)], minlength=J)
    r_runs = np.bincount(run[informative & (ds == 0)], minlength=J)
    n_uninf = int(np.count_nonzero(~informative))
    if np.any(~informative & (ds == 1)):
        raise AssertionError("left-censored observation below the first support point")
    return SupportSet(
        Cstar=Cstar,
        sentinel=sentinel,
        l_runs=l_runs,
        r_runs=r_runs,
        n_uninformative=n_uninf,
        degenerate=not np.any(delta == 0),
    )


def cs_loglik(p, support: SupportSet) -> float:
    """Log-likelihood of atom masses p under the run counts.

    Returns -inf when a run demands mass where p allows none (F_j = 0 with
    left-censored observations, or F_j = 1 with right-censored ones).
    """
    p = np.asarray(p, dtype=float)
    if len(p) != support.J + 1:
        raise ValueError(f"expected {support.J + 1} atom masses, got {len(p)}")
    if np.any(p < -1e-9) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("atom masses must lie on the simplex")
    F = np.cumsum(p)[: support.J]
    Fbar = 1.0 - F
    l, r = support.l_runs, support.r_runs
    if np.any((l > 0) & (F <= 0)) or np.any((r > 0) & (Fbar <= 0)):
        return -np.inf
    with np.errstate(divide="ignore"):
        terms = np.where(l > 0, l * np.log(np.maximum(F, _F_FLOOR)), 0.0) + np.where(
            r > 0, r * np.log(np.maximum(Fbar, _F_FLOOR)), 0.0
        )
    return float(terms.sum())


def em_fit(support: SupportSet, tol: float = 1e-8, max_iter: int = 10_000) -> NpmleFit:
    """Self-consistency EM for the atom masses, from a uniform start.

    E-step: each left-censored run h spreads its count over the atoms at or
    below it with weights p_j / F_h, and each right-censored run h spreads
    its count over the atoms strictly above it with weights p_j / (1-F_h).
    M-step: normalize the expected counts. The log-likelihood is
    nondecreasing along the way; convergence is max |p_new - p| < tol.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    J = support.J
    l, r = support.l_runs.astype(float), support.r_runs.astype(float)
    n_eff = l.sum() + r.sum()
    p = np.full(J + 1, 1.0 / (J + 1))
    # every run below the sentinel holds a left-censored observation, so F
    # stays strictly interior along the EM path and the run-count
    # log-likelihood reduces to two dot products against the floored F
    F = np.maximum(np.cumsum(p[:J]), _F_FLOOR)
    Fbar = np.maximum(1.0 - F, _F_FLOOR)
    trace = np.empty(max_iter + 1)
    trace[0] = l @ np.log(F) + r @ np.log(Fbar)
    coef = np.empty(J + 1)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        # coef_j = sum_{h >= j} l_h/F_h + sum_{h < j} r_h/(1-F_h), j = 1..J+1
        coef[:J] = np.cumsum((l / F)[::-1])[::-1]
        coef[J] = 0.0
        coef[1:] += np.cumsum(r / Fbar)
        p_new = p * coef
        p_new /= n_eff
        delta = np.max(np.abs(p_new - p))
        p = p_new
        F = np.maximum(np.cumsum(p[:J]), _F_FLOOR)
        Fbar = np.maximum(1.0 - F, _F_FLOOR)
        trace[iterations] = l @ np.log(F) + r @ np.log(Fbar)
        if delta < tol:
            converged = True
            break
    F_full = np.cumsum(p)
    F_full[-1] = 1.0
    return NpmleFit(
        p=p,
        F=F_full,
        loglik_trace=trace[: iterations + 1].copy(),
        iterations=iterations,
        converged=converged,
        support=support,
    )


def fit_npmle(data, tol: float = 1e-8, max_iter: int = 10_000) -> NpmleFit:
    """Convenience wrapper: extract the support, then run EM."""
    return em_fit(extract_support(data), tol=tol, max_iter=max_iter)
