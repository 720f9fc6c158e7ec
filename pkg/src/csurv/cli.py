"""Command line surface.

Subcommands
-----------
simulate
    Draw a scenario dataset; writes the observable CSV and a latent
    truth CSV.
npmle
    Nonparametric MLE of a univariate dataset, as JSON.
fit
    Gibbs fit (univariate or bivariate); writes a JSON-lines draw
    archive and a chain summary JSON.
diagnose
    Geweke/summary table for an existing draw archive.
summarize
    Survival, density and effect grids at chosen covariates.
mise
    Integrated squared error of fitted curves against a known truth.

Every option can also come from a ``key=value`` config file via
``--config``; a flag given on the command line wins over the file, which
wins over the built-in default. Artifacts embed the resolved
configuration, so re-running a command from an artifact's header
reproduces it byte for byte.

Exit codes: 0 success, 2 usage, 3 data validation, 4 numerical failure.
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    chain_summary,
    density_grids,
    effect_density,
    mise,
    survival_curves,
)
from .bivariate import BivDraws, fit_bivariate, marginal_densities, \
    marginal_effect_draws
from .distributions import CensWindow
from .errors import NumericalError, ValidationError
from .gibbs import McmcConfig
from .io import (
    load_dataset,
    read_config,
    read_draws,
    read_grid_csv,
    write_dataset,
    write_draws,
    write_grid_csv,
    write_json,
    write_truth,
)
from .npmle import fit_npmle
from .rng import RngStream
from .simulate import scenario, simulate, true_marginal_survival
from .univariate import fit_univariate

__all__ = ["main"]

_SCHEDULE_DEFAULTS = {"n_iter": 35_000, "burn_in": 10_000, "thin": 20}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="csurv",
        description="Survival analysis for current status data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file")

    p = sub.add_parser("simulate", parents=[common],
                       help="draw a scenario dataset")
    p.add_argument("--scenario", help="scenario name: I, II or III")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--w", type=float,
                   help="other-cause probability override")
    p.add_argument("--lam", type=float,
                   help="monitoring dependence rate override")
    p.add_argument("--lambda-L", dest="lambdaL", type=float,
                   help="latency rate override")
    p.add_argument("--window", nargs=2, type=float, metavar=("A", "B"))
    p.add_argument("--out", help="dataset CSV path")
    p.add_argument("--truth-out", help="latent truth CSV path")

    p = sub.add_parser("npmle", parents=[common],
                       help="nonparametric MLE of a univariate dataset")
    p.add_argument("--data", help="univariate dataset CSV")
    p.add_argument("--window", nargs=2, type=float, metavar=("A", "B"))
    p.add_argument("--out", help="fit JSON path")

    p = sub.add_parser("fit", parents=[common], help="run the Gibbs sampler")
    p.add_argument("--model", choices=("uni", "biv"))
    p.add_argument("--data", help="dataset CSV")
    p.add_argument("--window", nargs=2, type=float, metavar=("A", "B"))
    p.add_argument("--n-iter", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--step", type=float, help="initial M-H step size")
    p.add_argument("--seed", type=int)
    p.add_argument("--chains", type=int)
    p.add_argument("--fix-lambda", type=float)
    p.add_argument("--fix-w", type=float)
    p.add_argument("--naive-conditionals",
                   action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--independent-marginals",
                   action=argparse.BooleanOptionalAction, default=None,
                   help="pin the monitoring rate near zero and the "
                        "other-cause probability at one")
    p.add_argument("--dump-latents",
                   action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--out", help="draw archive path (JSON lines)")
    p.add_argument("--summary-out", help="chain summary JSON path")

    p = sub.add_parser("diagnose", parents=[common],
                       help="chain summary table of a draw archive")
    p.add_argument("--draws", help="draw archive path")
    p.add_argument("--out", help="JSON path (stdout when omitted)")

    p = sub.add_parser("summarize", parents=[common],
                       help="survival/density/effect grids")
    p.add_argument("--draws", help="draw archive path")
    p.add_argument("--x", help="comma-separated covariates, e.g. 0,0")
    p.add_argument("--grid", nargs=3, type=float,
                   metavar=("START", "STOP", "NUM"),
                   help="time grid for curves and densities")
    p.add_argument("--out-dir", help="directory for the emitted CSVs")

    p = sub.add_parser("mise", parents=[common],
                       help="integrated squared error report")
    p.add_argument("--fitted", nargs="+",
                   help="fitted grid CSVs (from summarize)")
    p.add_argument("--column", help="value column of the fitted CSVs")
    p.add_argument("--truth-csv",
                   help="truth grid CSV with the same column layout")
    p.add_argument("--scenario",
                   help="compute the truth from this scenario instead")
    p.add_argument("--outcome", choices=("I", "S"))
    p.add_argument("--x", help="comma-separated covariates for the truth")
    p.add_argument("--w", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--lambda-L", dest="lambdaL", type=float)
    p.add_argument("--out", help="JSON path (stdout when omitted)")

    return parser


class _Resolver:
    """CLI flag > config file > default, recording every resolved value."""

    def __init__(self, args):
        self.args = args
        self.file = read_config(args.config) if args.config else {}
        self.resolved = {"command": args.command}

    def get(self, key, default=None, required=False):
        value = getattr(self.args, key, None)
        if value is None:
            value = self.file.get(key, default)
        if value is None and required:
            raise ValidationError(f"missing required option --{key.replace('_', '-')}")
        self.resolved[key] = value
        return value


def _parse_x(raw):
    if raw is None or raw == "" or raw == []:
        return ()
    if isinstance(raw, (list, tuple)):
        return tuple(float(v) for v in raw)
    return tuple(float(v) for v in str(raw).split(","))


def _window(res, default=(0.0, 200.0)):
    pair = res.get("window", list(default))
    try:
        win = CensWindow(float(pair[0]), float(pair[1]))
    except (TypeError, ValueError, IndexError) as exc:
        raise ValidationError(f"bad window {pair!r}: {exc}") from None
    res.resolved["window"] = [win.A, win.B]
    return win


def _merge_draws(parts):
    """Concatenate per-chain draws in stream order."""
    if len(parts) == 1:
        return parts[0]
    fields = {}
    for f in dataclasses.fields(parts[0]):
        vals = [getattr(p, f.name) for p in parts]
        if f.name in ("window", "n", "coef_names", "center", "scale", "kept"):
            fields[f.name] = vals[0]
        elif f.name in ("accept_rate", "step_final"):
            fields[f.name] = float(np.mean(vals))
        elif vals[0] is None:
            fields[f.name] = None
        else:
            fields[f.name] = np.concatenate(vals, axis=0)
    return type(parts[0])(**fields)


def _cmd_simulate(args):
    res = _Resolver(args)
    name = res.get("scenario", required=True)
    n = int(res.get("n", 250))
    seed = int(res.get("seed", 0))
    overrides = {}
    for key in ("w", "lam", "lambdaL"):
        v = res.get(key)
        if v is not None:
            overrides[key] = float(v)
    raw_window = res.get("window")
    if raw_window is not None:
        overrides["window"] = CensWindow(float(raw_window[0]),
                                         float(raw_window[1]))
    cfg = scenario(name, n=n, seed=seed, **overrides)
    out = res.get("out", required=True)
    truth_out = res.get("truth_out", str(Path(out).with_suffix(".truth.csv")))
    # embed the effective generating values, not just the overrides
    res.resolved.update(
        w=cfg.w, lam=cfg.lam, lambdaL=cfg.lambdaL,
        window=[cfg.window.A, cfg.window.B],
    )
    ds = simulate(cfg)
    write_dataset(out, ds, meta=res.resolved)
    write_truth(truth_out, ds, meta=res.resolved)
    print(f"wrote {out} and {truth_out} ({n} subjects)")
    return 0


def _cmd_npmle(args):
    res = _Resolver(args)
    data = res.get("data", required=True)
    window = res.get("window")
    out = res.get("out", required=True)
    ds = load_dataset(data, window=window)
    if not ds.is_univariate:
        raise ValidationError("npmle needs a univariate dataset (id,C,delta)")
    fit = fit_npmle(ds.arrays())
    write_json(out, {
        "config": res.resolved,
        "support": fit.support.Cstar.tolist(),
        "support_size": int(len(fit.support.Cstar)),
        "sentinel": float(fit.support.sentinel),
        "atoms": fit.atoms.tolist(),
        "p": fit.p.tolist(),
        "F": fit.F.tolist(),
        "loglik": float(fit.loglik_trace[-1]),
        "loglik_trace": [float(v) for v in fit.loglik_trace],
        "iterations": int(fit.iterations),
        "converged": bool(fit.converged),
    })
    print(f"wrote {out} (support size {len(fit.support.Cstar)})")
    return 0


def _cmd_fit(args):
    res = _Resolver(args)
    model = res.get("model", required=True)
    if model not in ("uni", "biv"):
        raise ValidationError(f"model must be 'uni' or 'biv', got {model!r}")
    data_path = res.get("data", required=True)
    window = _window(res)
    n_iter = int(res.get("n_iter", _SCHEDULE_DEFAULTS["n_iter"]))
    burn_in = int(res.get("burn_in", _SCHEDULE_DEFAULTS["burn_in"]))
    thin = int(res.get("thin", _SCHEDULE_DEFAULTS["thin"]))
    step = float(res.get("step", 0.3))
    seed = int(res.get("seed", 0))
    chains = int(res.get("chains", 1))
    fix_lambda = res.get("fix_lambda")
    fix_w = res.get("fix_w")
    naive = bool(res.get("naive_conditionals", False))
    independent = bool(res.get("independent_marginals", False))
    dump = bool(res.get("dump_latents", False))
    out = res.get("out", required=True)
    summary_out = res.get(
        "summary_out", str(Path(out).with_suffix(".summary.json"))
    )
    if chains < 1:
        raise ValidationError("chains must be at least 1")
    if independent:
        fix_lambda = 1e-8 if fix_lambda is None else fix_lambda
        fix_w = 1.0 if fix_w is None else fix_w
        res.resolved["fix_lambda"] = fix_lambda
        res.resolved["fix_w"] = fix_w
    try:
        cfg = McmcConfig(
            n_iter=n_iter, burn_in=burn_in, thin=thin, step_lambda=step,
            naive_conditionals=naive, dump_latents=dump,
            fix_lambda=None if fix_lambda is None else float(fix_lambda),
            fix_w=None if fix_w is None else float(fix_w),
        )
    except ValueError as exc:
        raise ValidationError(f"bad schedule: {exc}") from None

    ds = load_dataset(data_path, window=window)
    parts = []
    for stream in range(chains):
        rng = RngStream(seed, stream)
        if model == "uni":
            if not ds.is_univariate:
                raise ValidationError(
                    "model 'uni' needs a univariate dataset (id,C,delta)"
                )
            parts.append(fit_univariate(ds.arrays(), window, cfg=cfg, rng=rng))
        else:
            if ds.is_univariate:
                raise ValidationError(
                    "model 'biv' needs a bivariate dataset "
                    "(id,C,delta_I,delta_S,x1,...)"
                )
            parts.append(fit_bivariate(
                ds.arrays(), window, cfg=cfg, rng=rng,
                coef_names=ds.covariate_names or None,
            ))
    draws = _merge_draws(parts)
    write_draws(out, draws, meta=res.resolved)
    write_json(summary_out, {
        "config": res.resolved,
        "accept_rate": float(draws.accept_rate),
        "n_draws": int(draws.n_draws),
        "parameters": chain_summary(draws).table(),
    })
    print(f"wrote {out} and {summary_out} ({draws.n_draws} draws)")
    return 0


def _cmd_diagnose(args):
    res = _Resolver(args)
    path = res.get("draws", required=True)
    out = res.get("out")
    draws, header = read_draws(path)
    payload = {
        "config": res.resolved,
        "fit_config": header.get("config", {}),
        "parameters": chain_summary(draws).table(),
    }
    if out:
        write_json(out, payload)
        print(f"wrote {out}")
    else:
        print(json.dumps(payload, sort_keys=True, indent=2))
    return 0


def _effect_grid(draws, outcome, coeff):
    _, atoms = marginal_effect_draws(draws, outcome, coeff)
    lo, hi = float(atoms.min()), float(atoms.max())
    pad = 0.05 * (hi - lo) + 1e-6
    return np.linspace(lo - pad, hi + pad, 401)


def _cmd_summarize(args):
    res = _Resolver(args)
    path = res.get("draws", required=True)
    x = _parse_x(res.get("x"))
    res.resolved["x"] = list(x)
    grid_spec = res.get("grid", [0.0, 200.0, 101])
    res.resolved["grid"] = [float(grid_spec[0]), float(grid_spec[1]),
                            int(grid_spec[2])]
    out_dir = Path(res.get("out_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    draws, _ = read_draws(path)
    grid = np.linspace(float(grid_spec[0]), float(grid_spec[1]),
                       int(grid_spec[2]))
    written = []

    def emit(name, columns):
        target = out_dir / name
        write_grid_csv(target, columns, meta=res.resolved)
        written.append(str(target))

    if isinstance(draws, BivDraws):
        for outcome in ("I", "S"):
            band = survival_curves(draws, x, grid, outcome)
            emit(f"survival_{outcome}.csv",
                 {"t": grid, "mean": band.mean, "lower": band.lower,
                  "upper": band.upper})
        dg = density_grids(draws, x, grid, grid)
        ii, ss = np.meshgrid(dg.i_grid, dg.s_grid, indexing="ij")
        emit("density.csv", {
            "I": ii.ravel(), "S": ss.ravel(),
            "f_other_cause": dg.fstar.ravel(),
            "f_ordered": dg.fprime.ravel(),
            "f_joint": dg.ftot.ravel(),
        })
        emit("marginal_I.csv", {"t": dg.i_grid, "density": dg.marginal_I})
        emit("marginal_S.csv", {"t": dg.s_grid, "density": dg.marginal_S})
        for outcome in ("I", "S"):
            for coeff in draws.coef_names:
                egrid = _effect_grid(draws, outcome, coeff)
                eff = effect_density(draws, outcome, coeff, egrid)
                emit(f"effect_{outcome}_{coeff}.csv", {
                    "value": egrid, "density": eff.density,
                    "mass_negative": np.full_like(egrid, eff.mass_negative),
                    "mass_positive": np.full_like(egrid, eff.mass_positive),
                })
    else:
        if x:
            raise ValidationError("univariate draws take no covariates")
        band = survival_curves(draws, None, grid)
        emit("survival.csv",
             {"t": grid, "mean": band.mean, "lower": band.lower,
              "upper": band.upper})
        dens = np.zeros_like(grid)
        for j in range(draws.n_draws):
            sd = np.sqrt(draws.sigma2[j])
            dens += np.sum(
                draws.weights[j]
                * np.exp(-0.5 * ((grid[:, None] - draws.mu[j]) / sd) ** 2)
                / (sd * np.sqrt(2 * np.pi)),
                axis=1,
            )
        emit("density.csv", {"t": grid, "density": dens / draws.n_draws})

    write_json(out_dir / "summary.json", {
        "config": res.resolved,
        "parameters": chain_summary(draws).table(),
    })
    written.append(str(out_dir / "summary.json"))
    print("wrote " + ", ".join(written))
    return 0


def _cmd_mise(args):
    res = _Resolver(args)
    fitted_paths = res.get("fitted", required=True)
    if isinstance(fitted_paths, str):
        fitted_paths = [fitted_paths]
    column = res.get("column", "mean")
    out = res.get("out")

    grids = []
    curves = []
    for p in fitted_paths:
        cols, _ = read_grid_csv(p)
        if "t" not in cols or column not in cols:
            raise ValidationError(f"{p}: needs columns 't' and {column!r}")
        grids.append(cols["t"])
        curves.append(cols[column])
    grid = grids[0]
    for p, g in zip(fitted_paths[1:], grids[1:]):
        if g.shape != grid.shape or not np.array_equal(g, grid):
            raise ValidationError(f"{p}: grid differs from {fitted_paths[0]}")

    truth_csv = res.get("truth_csv")
    if truth_csv:
        cols, _ = read_grid_csv(truth_csv)
        if "t" not in cols or column not in cols:
            raise ValidationError(
                f"{truth_csv}: needs columns 't' and {column!r}"
            )
        if not np.array_equal(cols["t"], grid):
            raise ValidationError(f"{truth_csv}: grid differs from the fits")
        truth = cols[column]
    else:
        name = res.get("scenario")
        outcome = res.get("outcome")
        if not (name and outcome):
            raise ValidationError(
                "need either --truth-csv or --scenario with --outcome"
            )
        x = _parse_x(res.get("x"))
        res.resolved["x"] = list(x)
        overrides = {}
        for key in ("w", "lam", "lambdaL"):
            v = res.get(key)
            if v is not None:
                overrides[key] = float(v)
        truth = true_marginal_survival(
            scenario(name, **overrides), outcome, x, grid
        )

    result = mise(truth, curves, grid)
    payload = {
        "config": res.resolved,
        "per_dataset": result.per_dataset.tolist(),
        "estimate": result.estimate,
        "median": result.median,
        "lower": result.lower,
        "upper": result.upper,
    }
    if out:
        write_json(out, payload)
        print(f"wrote {out}")
    else:
        print(json.dumps(payload, sort_keys=True, indent=2))
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "npmle": _cmd_npmle,
    "fit": _cmd_fit,
    "diagnose": _cmd_diagnose,
    "summarize": _cmd_summarize,
    "mise": _cmd_mise,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValidationError, NumericalError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 4 if isinstance(exc, NumericalError) else 3


if __name__ == "__main__":
    sys.exit(main())
