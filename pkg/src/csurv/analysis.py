"""Posterior summaries, diagnostics and evaluation metrics.

Everything here consumes retained draws (`UniDraws`, `BivDraws`) or plain
scalar chains and produces grid data ready for tabulation or plotting;
no rendering is done. The main entry points are

- ``geweke_z`` / ``chain_summary`` for convergence checks,
- ``density_grids`` for the joint and marginal event-time densities,
- ``survival_curves`` for posterior survival bands,
- ``effect_density`` for regression-effect distributions,
- ``mise`` for simulation-study evaluation.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import gaussian_kde

from .bivariate import BivDraws, _design_vector, joint_latent_density, \
    marginal_densities, marginal_effect_draws
from .distributions import dnorm, pemg
from .errors import NumericalError, ValidationError
from .univariate import UniDraws

__all__ = [
    "ChainSummary",
    "DensityGrid",
    "EffectDensity",
    "MiseResult",
    "SurvivalBand",
    "chain_summary",
    "density_grids",
    "effect_density",
    "geweke_z",
    "mise",
    "scalar_chains",
    "survival_curves",
]


# ---------------------------------------------------------------------------
# convergence diagnostics


def _batch_means_var(x):
    """Squared Monte Carlo standard error of mean(x) by batch means."""
    n = len(x)
    b = max(1, int(np.sqrt(n)))
    k = n // b
    means = x[: k * b].reshape(k, b).mean(axis=1)
    if k < 2:
        return 0.0
    return means.var(ddof=1) / k


def geweke_z(chain, frac_early=0.1, frac_late=0.5):
    """Stationarity z-score comparing early and late chain segments.

    The statistic is (mean_early - mean_late) / sqrt(v_early + v_late)
    where each segment variance is the batch-means estimate of the
    squared standard error of that segment's mean (batch length
    floor(sqrt(segment length))). Under stationarity z is asymptotically
    standard normal.

    Parameters
    ----------
    chain : array_like
        Scalar chain, at least 100 draws.
    frac_early, frac_late : float, optional
        Fractions of the chain forming the leading and trailing
        segments; they must not overlap.

    Returns
    -------
    float
        Signed infinity when both segment variances vanish but the
        means differ (an extreme level shift).

    Raises
    ------
    ValidationError
        On a too-short chain or overlapping fractions.
    NumericalError
        On a constant chain ("zero variance").
    """
    x = np.asarray(chain, dtype=float).ravel()
    n = len(x)
    if n < 100:
        raise ValidationError(f"chain has {n} draws, need at least 100")
    if not (0.0 < frac_early and 0.0 < frac_late
            and frac_early + frac_late <= 1.0):
        raise ValidationError(
            "segment fractions must be positive and sum to at most 1"
        )
    if np.ptp(x) == 0.0:
        raise NumericalError("chain has zero variance")
    early = x[: max(2, int(frac_early * n))]
    late = x[n - max(2, int(frac_late * n)):]
    diff = early.mean() - late.mean()
    denom = np.sqrt(_batch_means_var(early) + _batch_means_var(late))
    if denom == 0.0:
        return 0.0 if diff == 0.0 else np.sign(diff) * np.inf
    return float(diff / denom)


def scalar_chains(draws):
    """Named scalar chains of a draws object, for summaries."""
    if isinstance(draws, UniDraws):
        return {
            "lambda": draws.lam,
            "M": draws.M,
            "mu0": draws.mu0,
            "kappa0": draws.kappa0,
            "b_sigma": draws.b_sigma,
        }
    if isinstance(draws, BivDraws):
        return {
            "lambda": draws.lam,
            "lambda_L": draws.lambdaL,
            "w": draws.w,
            "M_I": draws.M_I,
            "M_S": draws.M_S,
        }
    raise ValidationError(f"cannot extract chains from {type(draws).__name__}")


@dataclass(frozen=True)
class ChainSummary:
    """Per-parameter posterior summary table.

    `quantiles` has one row per parameter in the order of `q_levels`;
    `running_mean` holds one cumulative-mean trace per parameter.
    Geweke entries are NaN where the diagnostic is undefined (constant
    or very short chains).
    """

    names: tuple
    mean: np.ndarray
    sd: np.ndarray
    q_levels: tuple
    quantiles: np.ndarray
    geweke: np.ndarray
    running_mean: tuple

    def __post_init__(self):
        if np.any(np.diff(self.quantiles, axis=1) < 0):
            raise ValidationError("quantiles are not monotone")

    def table(self):
        """Rows as plain dicts, handy for JSON output."""
        rows = []
        for i, name in enumerate(self.names):
            row = {
                "parameter": name,
                "mean": float(self.mean[i]),
                "sd": float(self.sd[i]),
                "geweke_z": float(self.geweke[i]),
            }
            for q, v in zip(self.q_levels, self.quantiles[i]):
                row[f"q{q:g}"] = float(v)
            rows.append(row)
        return rows


def chain_summary(chains, q_levels=(2.5, 50.0, 97.5)):
    """Summarize scalar chains: moments, quantiles, Geweke z, traces.

    `chains` is a mapping of name to 1-d chain, or a draws object (its
    scalar chains are extracted). Chains that are constant or shorter
    than the Geweke minimum get a NaN z rather than an error, so fits
    run with fixed parameters still summarize cleanly.
    """
    if not isinstance(chains, dict):
        chains = scalar_chains(chains)
    if not chains:
        raise ValidationError("no chains to summarize")
    arrs = [np.asarray(v, dtype=float).ravel() for v in chains.values()]
    if any(len(a) == 0 for a in arrs):
        raise ValidationError("empty chain")
    zs = []
    for a in arrs:
        try:
            zs.append(geweke_z(a))
        except (ValidationError, NumericalError):
            zs.append(np.nan)
    return ChainSummary(
        names=tuple(chains),
        mean=np.array([a.mean() for a in arrs]),
        sd=np.array([a.std(ddof=1) if len(a) > 1 else 0.0 for a in arrs]),
        q_levels=tuple(q_levels),
        quantiles=np.array([np.percentile(a, q_levels) for a in arrs]),
        geweke=np.array(zs),
        running_mean=tuple(
            np.cumsum(a) / np.arange(1, len(a) + 1) for a in arrs
        ),
    )


# ---------------------------------------------------------------------------
# density and survival grids


@dataclass(frozen=True)
class DensityGrid:
    """Posterior-mean event-time densities on a product grid.

    `fstar` is the other-cause (independent) joint branch, `fprime` the
    ordered branch with the exponential latency, and `ftot` their
    per-draw probability-weighted combination, each averaged over draws
    with infection time on the first axis. `marginal_I` and
    `marginal_S` are the posterior-mean marginals on the two axes.
    """

    i_grid: np.ndarray
    s_grid: np.ndarray
    fstar: np.ndarray
    fprime: np.ndarray
    ftot: np.ndarray
    marginal_I: np.ndarray
    marginal_S: np.ndarray

    def __post_init__(self):
        for name in ("fstar", "fprime", "ftot", "marginal_I", "marginal_S"):
            if np.any(getattr(self, name) < 0):
                raise ValidationError(f"{name} has negative entries")


def density_grids(draws, x, i_grid, s_grid):
    """Posterior-mean joint and marginal densities at covariates x.

    Per draw, the other-cause branch is the product of the two normal
    mixtures, the ordered branch multiplies the infection density by the
    exponential gap density on S > I, and the joint is their mixture by
    the per-draw other-cause probability. Branches and joint are
    averaged over draws, and the averaged joint is cross-checked against
    the averaged combination of the branches.

    Parameters
    ----------
    draws : BivDraws
    x : array_like
        Covariates in natural units.
    i_grid, s_grid : array_like
        Evaluation grids for the infection and symptom axes.

    Returns
    -------
    DensityGrid
    """
    if not isinstance(draws, BivDraws):
        raise ValidationError("density_grids needs bivariate draws")
    if draws.n_draws == 0:
        raise ValidationError("no draws")
    i_grid = np.asarray(i_grid, dtype=float)
    s_grid = np.asarray(s_grid, dtype=float)
    gap = s_grid[None, :] - i_grid[:, None]

    shape = (len(i_grid), len(s_grid))
    fstar = np.zeros(shape)
    fprime = np.zeros(shape)
    ftot = np.zeros(shape)
    comb = np.zeros(shape)
    marg_i = np.zeros(len(i_grid))
    marg_s = np.zeros(len(s_grid))
    for j in range(draws.n_draws):
        state = draws.state(j)
        f_i, _ = marginal_densities(state, x, i_grid)
        d = _design_vector(state, x)
        locS = state.measureS.m @ d
        f_other = np.sum(
            state.measureS.weights
            * dnorm(s_grid[:, None], locS[None, :],
                    np.sqrt(state.measureS.sigma2)[None, :]),
            axis=1,
        )
        latency = np.where(
            gap > 0.0,
            state.lambdaL * np.exp(-state.lambdaL * np.maximum(gap, 0.0)),
            0.0,
        )
        fstar_j = f_i[:, None] * f_other[None, :]
        fprime_j = f_i[:, None] * latency
        fstar += fstar_j
        fprime += fprime_j
        comb += state.w * fstar_j + (1.0 - state.w) * fprime_j
        ftot += joint_latent_density(state, x, i_grid, s_grid)
        marg_i += f_i
        marg_s += marginal_densities(state, x, s_grid)[1]

    D = draws.n_draws
    fstar /= D
    fprime /= D
    ftot /= D
    comb /= D
    marg_i /= D
    marg_s /= D
    # The joint comes from the log-space evaluator while `comb` assembles
    # the same mixture directly from the branches; agreement guards both
    # code paths at once.
    if not np.allclose(ftot, comb, rtol=1e-8, atol=1e-12):
        raise NumericalError("joint density decomposition failed")

    return DensityGrid(
        i_grid=i_grid, s_grid=s_grid,
        fstar=np.maximum(fstar, 0.0),
        fprime=np.maximum(fprime, 0.0),
        ftot=np.maximum(ftot, 0.0),
        marginal_I=np.maximum(marg_i, 0.0),
        marginal_S=np.maximum(marg_s, 0.0),
    )


@dataclass(frozen=True)
class SurvivalBand:
    """Posterior survival curve with a pointwise 95% band.

    `curves` keeps the per-draw survival matrix (draws by grid) so
    callers can form other functionals without re-evaluating.
    """

    grid: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    curves: np.ndarray


def survival_curves(draws, x, grid, outcome="I"):
    """Posterior survival function at covariates x on a time grid.

    Per draw the survival is one minus the marginal CDF: a normal
    mixture survival for the infection outcome (and for univariate
    draws, where `x` must be None), and for the symptom outcome the
    probability-weighted combination of the other-cause mixture
    survival and the exponentially modified Gaussian survival of the
    ordered branch. The band is the pointwise 2.5/97.5 percentile range
    across draws.

    Parameters
    ----------
    draws : UniDraws or BivDraws
    x : array_like or None
        Covariates in natural units; None for univariate draws.
    grid : array_like
        Strictly increasing evaluation times.
    outcome : {"I", "S"}, optional
        Which marginal, for bivariate draws.

    Returns
    -------
    SurvivalBand
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise ValidationError("grid must be strictly increasing")
    if isinstance(draws, UniDraws):
        if x is not None and np.size(x) > 0:
            raise ValidationError("univariate draws take no covariates")
        sd = np.sqrt(draws.sigma2)
        z = (grid[None, None, :] - draws.mu[:, :, None]) / sd[:, :, None]
        curves = np.einsum("dk,dkt->dt", draws.weights, ndtr(-z))
    elif isinstance(draws, BivDraws):
        if outcome not in ("I", "S"):
            raise ValidationError(
                f"outcome must be 'I' or 'S', got {outcome!r}"
            )
        d = _design_vector(draws, x)
        locI = draws.m_I @ d
        sdI = np.sqrt(draws.sigma2_I)
        zI = (grid[None, None, :] - locI[:, :, None]) / sdI[:, :, None]
        sf_inf = np.einsum("dk,dkt->dt", draws.weights_I, ndtr(-zI))
        if outcome == "I":
            curves = sf_inf
        else:
            locS = draws.m_S @ d
            sdS = np.sqrt(draws.sigma2_S)
            zS = (grid[None, None, :] - locS[:, :, None]) / sdS[:, :, None]
            sf_other = np.einsum("dk,dkt->dt", draws.weights_S, ndtr(-zS))
            sf_emg = np.einsum(
                "dk,dkt->dt",
                draws.weights_I,
                pemg(grid[None, None, :], locI[:, :, None],
                     draws.sigma2_I[:, :, None],
                     draws.lambdaL[:, None, None], lower_tail=False),
            )
            w = draws.w[:, None]
            curves = w * sf_other + (1.0 - w) * sf_emg
    else:
        raise ValidationError(
            f"cannot build survival curves from {type(draws).__name__}"
        )
    lower, upper = np.percentile(curves, [2.5, 97.5], axis=0)
    return SurvivalBand(grid=grid, mean=curves.mean(axis=0),
                        lower=lower, upper=upper, curves=curves)


# ---------------------------------------------------------------------------
# regression-effect densities


@dataclass(frozen=True)
class EffectDensity:
    """Smoothed posterior distribution of one regression effect.

    `mass_negative` and `mass_positive` are exact posterior
    probabilities computed from the atoms, not from the smoothed curve.
    """

    grid: np.ndarray
    density: np.ndarray
    mass_negative: float
    mass_positive: float


def effect_density(draws, outcome, coeff, grid, natural=True):
    """Pooled, kernel-smoothed density of a regression-effect measure.

    Pools the per-draw weighted atom sets of the named coefficient
    across all draws and smooths them with a weighted Gaussian kernel
    estimate. When the pooled atoms are (numerically) a point mass the
    smoothed curve degenerates to a narrow spike at that point.

    Parameters
    ----------
    draws : BivDraws
    outcome : {"I", "S"}
    coeff : str
        Design column name.
    grid : array_like
        Coefficient grid; should cover the pooled atom range.
    natural : bool, optional
        Report effects per natural covariate unit.

    Returns
    -------
    EffectDensity
    """
    weights, atoms = marginal_effect_draws(draws, outcome, coeff,
                                           natural=natural)
    grid = np.asarray(grid, dtype=float)
    w = weights.ravel() / weights.shape[0]
    a = atoms.ravel()
    w = w / w.sum()
    center = float(w @ a)
    spread = float(np.sqrt(w @ (a - center) ** 2))
    if spread <= 1e-8 * (1.0 + abs(center)):
        dens = dnorm(grid, center, 1e-3 * (1.0 + abs(center)))
    else:
        dens = gaussian_kde(a, weights=w)(grid)
    return EffectDensity(
        grid=grid,
        density=dens,
        mass_negative=float(w[a < 0].sum()),
        mass_positive=float(w[a > 0].sum()),
    )


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class MiseResult:
    """Integrated squared errors across simulated datasets.

    `estimate` is the across-dataset mean (the Monte Carlo MISE);
    `median`, `lower` and `upper` are the 50/2.5/97.5 percentiles of the
    per-dataset integrated squared errors.
    """

    per_dataset: np.ndarray
    estimate: float
    median: float
    lower: float
    upper: float


def mise(truth, fitted_per_dataset, grid):
    """Riemann-sum integrated squared error, averaged over datasets.

    For each dataset the integrated squared error is
    sum_i (t_i - t_{i-1}) (f(t_i) - fhat(t_i))^2 over the grid from the
    second point on (the first point carries no weight).

    Parameters
    ----------
    truth : callable or array_like
        True function on the grid, or a callable evaluated on it.
    fitted_per_dataset : sequence of array_like
        One fitted grid per dataset.
    grid : array_like
        Strictly increasing evaluation points.

    Returns
    -------
    MiseResult
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise ValidationError("grid must be strictly increasing")
    f = np.asarray(truth(grid) if callable(truth) else truth, dtype=float)
    if f.shape != grid.shape:
        raise ValidationError(
            f"truth has length {f.size}, grid has {grid.size}"
        )
    if len(fitted_per_dataset) == 0:
        raise ValidationError("no fitted curves")
    dt = np.diff(grid)
    ises = []
    for d, fhat in enumerate(fitted_per_dataset):
        fhat = np.asarray(fhat, dtype=float)
        if fhat.shape != grid.shape:
            raise ValidationError(
                f"fitted curve {d} has length {fhat.size}, grid has {grid.size}"
            )
        ises.append(float(np.sum(dt * (f[1:] - fhat[1:]) ** 2)))
    ises = np.asarray(ises)
    return MiseResult(
        per_dataset=ises,
        estimate=float(ises.mean()),
        median=float(np.median(ises)),
        lower=float(np.percentile(ises, 2.5)),
        upper=float(np.percentile(ises, 97.5)),
    )
