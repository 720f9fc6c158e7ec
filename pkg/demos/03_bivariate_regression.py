"""Ordered two-event regression: infection, then infection-caused symptoms.

Each subject carries two event times (infection I and symptom onset S),
both observed only as yes/no at a single monitoring time, with S either
following I by an exponential latency or coming from an unrelated cause.
The model regresses both event-time distributions on covariates through
mixtures of linear models, so every posterior summary is available at any
covariate profile. This script fits scenario III data (dependent
monitoring, mixed symptom causes) and walks through the regression
output: global parameters, covariate-specific survival curves, and the
posterior distribution of each covariate's effect.

Run with: python3 demos/03_bivariate_regression.py   (about two minutes)
"""

import numpy as np

from csurv import (
    McmcConfig,
    chain_summary,
    effect_density,
    fit_bivariate,
    scenario,
    simulate,
    survival_curves,
    true_marginal_survival,
)

cfg = scenario("III", n=600, seed=11)
ds = simulate(cfg)
print(f"scenario III: n={cfg.n}, monitoring rate {cfg.lam}, "
      f"latency rate {cfg.lambdaL}, other-cause share {cfg.w}")
print(f"status patterns (neither, I only, S only, both): "
      f"{np.bincount(2 * ds.delta_S + ds.delta_I, minlength=4).tolist()}")

draws = fit_bivariate(ds.arrays(), (0.0, 200.0),
                      cfg=McmcConfig(8_000, 2_000, 10), rng=11)

# --- global parameters -----------------------------------------------
truth = {"lambda": cfg.lam, "lambda_L": cfg.lambdaL, "w": cfg.w}
print("\nglobal parameters:")
for row in chain_summary(draws).table():
    line = (f"  {row['parameter']:9s} mean {row['mean']:7.3f}  "
            f"95% [{row['q2.5']:7.3f}, {row['q97.5']:7.3f}]")
    if row["parameter"] in truth:
        line += f"   true {truth[row['parameter']]}"
    print(line)
print("(the race parameters are posterior-correlated: later symptoms can "
      "be\nexplained by a slower latency or by more other-cause "
      "attribution, so an\nindividual interval can sit off its generating "
      "value; the curves below\nare what the data pin down)")

# --- survival by covariate profile ------------------------------------
# the first covariate shifts infection earlier in both mixture branches,
# so the fitted curves at x1 = +/-1 should straddle the x1 = 0 curve
grid = np.linspace(0.0, 120.0, 61)
print("\ninfection survival at t=40 by covariate profile:")
for x in ((-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)):
    band = survival_curves(draws, x, grid, outcome="I")
    s_true = true_marginal_survival(cfg, "I", x, grid)
    i = int(np.argmin(np.abs(grid - 40.0)))
    print(f"  x = ({x[0]:+.0f}, {x[1]:+.0f}): fitted {band.mean[i]:.3f} "
          f"[{band.lower[i]:.3f}, {band.upper[i]:.3f}], "
          f"true {s_true[i]:.3f}")

# --- covariate effects ------------------------------------------------
# posterior distribution of the mixture-averaged regression effect; the
# sign masses answer "does this covariate accelerate the event?"
print("\ncovariate effect posteriors:")
egrid = np.linspace(-40.0, 40.0, 401)
for outcome in ("I", "S"):
    for coeff in ("x1", "x2"):
        eff = effect_density(draws, outcome, coeff, egrid)
        mode = eff.grid[np.argmax(eff.density)]
        print(f"  {outcome} ~ {coeff}: mode {mode:+6.1f}, "
              f"P(effect < 0) = {eff.mass_negative:.2f}")
print("generating slopes: on I, x1 mixes -5/-10 and x2 mixes 0/-15; on "
      "the\nother-cause symptom branch, x1 mixes 0/-5 and x2 mixes +20/0. "
      "The symptom\nslopes are informed only by subjects whose symptoms "
      "came from the other\ncause, so their posteriors sharpen later than "
      "the infection slopes.")
