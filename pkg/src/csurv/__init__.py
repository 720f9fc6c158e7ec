"""Survival analysis for current status data.

Current status observations record, for each subject, only a single
monitoring time and whether the event had already happened by then. This
package provides the estimation toolkit for that setting:

- the unconstrained nonparametric MLE via support-point reduction and EM
  (and the boundary pathology it exhibits under dependent monitoring),
- Bayesian nonparametric mixture models for one event time, or for an
  ordered pair of event times (infection preceding infection-caused
  symptoms), with covariate-dependent atoms and a race-model for the
  monitoring times,
- a simulator, posterior summaries, convergence diagnostics, and an
  integrated-squared-error evaluation harness.
"""

from .analysis import (
    ChainSummary,
    DensityGrid,
    EffectDensity,
    MiseResult,
    SurvivalBand,
    chain_summary,
    density_grids,
    effect_density,
    geweke_z,
    mise,
    scalar_chains,
    survival_curves,
)
from .bivariate import (
    BivDraws,
    GlobalHyper,
    Observation,
    fit_bivariate,
    joint_latent_density,
    marginal_densities,
    marginal_effect_draws,
    prior_reproduction_bivariate,
    standardize_covariates,
)
from .distributions import (
    CensWindow,
    TruncBounds,
    dens_cens_given_s,
    demg,
    dnorm,
    pemg,
    rtruncnorm,
    rtruncexp,
    stick_break,
    conj_update_linear,
    conj_update_invgamma,
)
from .errors import NumericalError, ValidationError
from .gibbs import McmcConfig
from .npmle import NpmleFit, fit_npmle
from .rng import RngStream, as_generator
from .simulate import (
    INFECTION_MIX,
    OTHER_CAUSE_MIX,
    MixtureSpec,
    ScenarioConfig,
    SimulatedDataset,
    UnivariateDataset,
    censoring_race,
    pattern_counts,
    scenario,
    simulate,
    simulate_univariate,
    true_marginal_survival,
)
from .univariate import (
    UniDraws,
    UniHyper,
    fit_univariate,
    prior_reproduction_univariate,
)

__version__ = "0.1.0"

__all__ = [
    "BivDraws",
    "CensWindow",
    "ChainSummary",
    "DensityGrid",
    "EffectDensity",
    "GlobalHyper",
    "INFECTION_MIX",
    "McmcConfig",
    "MiseResult",
    "MixtureSpec",
    "NpmleFit",
    "NumericalError",
    "OTHER_CAUSE_MIX",
    "Observation",
    "RngStream",
    "ScenarioConfig",
    "SimulatedDataset",
    "SurvivalBand",
    "TruncBounds",
    "UniDraws",
    "UniHyper",
    "UnivariateDataset",
    "ValidationError",
    "__version__",
    "as_generator",
    "censoring_race",
    "chain_summary",
    "conj_update_invgamma",
    "conj_update_linear",
    "dens_cens_given_s",
    "density_grids",
    "demg",
    "dnorm",
    "effect_density",
    "fit_bivariate",
    "fit_npmle",
    "fit_univariate",
    "geweke_z",
    "joint_latent_density",
    "marginal_densities",
    "marginal_effect_draws",
    "mise",
    "pattern_counts",
    "pemg",
    "prior_reproduction_bivariate",
    "prior_reproduction_univariate",
    "rtruncexp",
    "rtruncnorm",
    "scalar_chains",
    "scenario",
    "simulate",
    "simulate_univariate",
    "standardize_covariates",
    "stick_break",
    "survival_curves",
    "true_marginal_survival",
]
