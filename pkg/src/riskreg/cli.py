"""Command-line entry point: ``riskreg {fit,cv,boot,diagnose,simulate}``.

Exit status is 0 on success, 2 for invalid input or configuration and 3 for
numerical failure; on error a JSON error block goes to stderr (and to the
report path, when one is configured).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bootstrap import BootstrapConfig, BootstrapResult, bootstrap_pipeline
from .config import RunConfig, merge, parse_predictors, read_config_file
from .data import DesignMatrix, encode
from .diagnostics import diagnose
from .errors import RiskRegError, ValidationError
from .families import get_family
from .io import load_csv, plan_for
from .pipeline import ModelFit, fit_model
from .report import AnalysisReport, TermResult, emit_forest_data, error_document, jsonable
from .simulate import CohortModel, SimPredictor, simulate_cohort


def _provenance(cfg: RunConfig) -> dict:
    return {"software": "riskreg", "version": __version__, "numpy": np.__version__, "seed": cfg.seed}


def _load(cfg: RunConfig) -> tuple[DesignMatrix, int]:
    if not cfg.input:
        raise ValidationError("no input file configured", module="cli_reporting")
    if not cfg.predictors:
        raise ValidationError("no predictors configured", module="cli_reporting")
    table = load_csv(cfg.input, cfg)
    return encode(table, plan_for(table, cfg)), table.n_dropped


def _convergence(fit: ModelFit) -> dict:
    if fit.quasi is not None:
        return {"converged": bool(fit.quasi.converged), "iterations": int(fit.quasi.n_iter)}
    path = fit.tuned.path
    return {"converged": bool(np.all(path.converged)), "path_points": int(len(path.lambdas))}


def _cv_block(fit: ModelFit, cfg: RunConfig) -> dict | None:
    cv = fit.tuned.cv if fit.tuned is not None else None
    if cv is None:
        return None
    out = {
        "folds": cv.folds.k if cv.folds is not None else cfg.folds,
        "stratified": cfg.stratify,
        "rule": cfg.rule,
        "lambda_min": cv.lambda_min,
        "lambda_1se": cv.lambda_1se,
        "failed_folds": list(cv.failed_folds),
        "lambdas": cv.lambdas,
        "mean_loss": cv.mean_loss,
        "se_loss": cv.se_loss,
    }
    if cv.alpha_grid is not None:
        out["alpha_grid"] = cv.alpha_grid
        out["alpha_losses"] = cv.alpha_losses
    return out


def build_report(command: str, cfg: RunConfig, dm: DesignMatrix, n_dropped: int, fit: ModelFit,
                 boot: BootstrapResult | None = None) -> AnalysisReport:
    fam = fit.family
    with np.errstate(over="ignore"):
        mu = fit.quasi.mu if fit.quasi is not None else fam.mean(fit.linear_predictor(dm.X))
    se = fit.quasi.se if fit.quasi is not None else None
    terms = []
    for j, name in enumerate(fit.names[1:], start=1):
        t = TermResult(name, float(fit.coef[j]), float(fam.effect(fit.coef[j])),
                       se=None if se is None else float(se[j]))
        if boot is not None:
            t.coef_lower, t.coef_upper = map(float, boot.ci[j])
            t.lower, t.upper = map(float, boot.ci_effect[j])
        terms.append(t)
    boot_block = None
    if boot is not None:
        boot_block = {"n_boot": boot.n_boot, "level": boot.level, "n_failed": boot.n_failed,
                      "failures": boot.failures, "reselect_lambda": fit.penalty.lam == "cv", "reselect_alpha": cfg.reselect_alpha,
                      "intercept_ci": boot.ci[0], "digest": boot.digest()}
    return AnalysisReport(
        command=command,
        family=fam.name,
        measure=fam.measure,
        measure_label=fam.measure_label,
        method=fit.method,
        n=dm.n,
        n_dropped=n_dropped,
        intercept=float(fit.coef[0]),
        terms=terms,
        lam=fit.lam,
        alpha=fit.alpha,
        convergence=_convergence(fit),
        cv=_cv_block(fit, cfg),
        bootstrap=boot_block,
        diagnostics=diagnose(dm, mu, fam).to_dict(),
        config=cfg.to_dict(),
        provenance=_provenance(cfg),
    )


def run_fit_command(cfg: RunConfig, command: str = "fit") -> AnalysisReport:
    """Load, encode, fit (CV-tuned when penalized), optionally bootstrap, and report.

    ``command`` is ``"fit"``, ``"cv"`` (requires a penalty) or ``"boot"``.
    """
    pen = cfg.penalty_spec()
    if command == "cv" and not pen.penalized:
        raise ValidationError("the cv command needs a penalty (ridge, lasso or elastic-net)", module="cli_reporting")
    dm, n_dropped = _load(cfg)
    fam = get_family(cfg.family)
    fit = fit_model(dm, fam, pen, k=cfg.folds, seed=cfg.seed, stratify=cfg.stratify, rule=cfg.rule,
                    drop_constant=cfg.drop_constant)
    boot = None
    if command == "boot":
        bcfg = BootstrapConfig(n_boot=cfg.n_boot, level=cfg.level, seed=cfg.seed, reselect_alpha=cfg.reselect_alpha,
                               folds=cfg.folds, stratify=cfg.stratify, rule=cfg.rule,
                               drop_constant=cfg.drop_constant)
        boot = bootstrap_pipeline(dm, None, fam, pen, bcfg, full_fit=fit)
    return build_report(command, cfg, dm, n_dropped, fit, boot)


def run_diagnose_command(cfg: RunConfig) -> dict:
    dm, n_dropped = _load(cfg)
    return {"command": "diagnose", "n_dropped": n_dropped, "terms": dm.names,
            "diagnostics": diagnose(dm).to_dict(), "config": cfg.to_dict(), "provenance": _provenance(cfg)}


def parse_sim_predictor(text: str) -> SimPredictor:
    """``name:bernoulli:coef[:prob]`` or ``name:normal:coef[:mean[:sd]]``."""
    parts = text.split(":")
    try:
        if len(parts) >= 3 and parts[1] == "bernoulli" and len(parts) <= 4:
            return SimPredictor(parts[0], float(parts[2]), "bernoulli",
                                prob=float(parts[3]) if len(parts) == 4 else 0.5)
        if len(parts) >= 3 and parts[1] == "normal" and len(parts) <= 5:
            return SimPredictor(parts[0], float(parts[2]), "normal",
                                mean=float(parts[3]) if len(parts) >= 4 else 0.0,
                                sd=float(parts[4]) if len(parts) == 5 else 1.0)
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad number in predictor {text!r}", module="cli_reporting") from exc
    raise ValidationError(f"bad predictor {text!r}; expected name:bernoulli:coef[:prob] or "
                          "name:normal:coef[:mean[:sd]]", module="cli_reporting")


def write_table_csv(table, path) -> None:
    names = table.names
    cols = [table.columns[c] for c in names]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(table.n):
            w.writerow([str(int(c[i])) if table.kinds[n] == "binary" else repr(float(c[i]))
                        for n, c in zip(names, cols)])


# ---------------------------------------------------------------------------
# argument parsing

def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file with RunConfig keys; flags override it")
    p.add_argument("--input", help="CSV file (UTF-8, header row)")
    p.add_argument("--outcome", help="0/1 outcome column")
    p.add_argument("--predictors", type=parse_predictors,
                   help="comma-separated name[:kind[:reference]], kind in continuous/binary/categorical")
    p.add_argument("--family", help="poisson-log (RR, default), gaussian-identity (RD) or binomial-logit (OR)")
    p.add_argument("--penalty", help="none (default), ridge, lasso or elastic-net")
    p.add_argument("--alpha", help="elastic-net mixing weight in [0, 1] or 'cv'")
    p.add_argument("--lambda", dest="lam", help="penalty strength >= 0 or 'cv'")
    p.add_argument("--folds", type=int, help="CV folds (default 10)")
    p.add_argument("--stratify", action=argparse.BooleanOptionalAction, default=None,
                   help="stratify CV folds by outcome")
    p.add_argument("--rule", choices=("min", "1se"), help="lambda choice from the CV curve (default min)")
    p.add_argument("--n-boot", type=int, help="bootstrap replicates (default 1000)")
    p.add_argument("--level", type=float, help="confidence level (default 0.95)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--reselect-alpha", action=argparse.BooleanOptionalAction, default=None,
                   help="re-run the alpha search in every bootstrap replicate")
    p.add_argument("--drop-constant", action=argparse.BooleanOptionalAction, default=None,
                   help="give columns constant in a CV split or replicate a zero coefficient instead of failing")
    p.add_argument("--report", help="write the JSON report here (default stdout)")
    p.add_argument("--forest", help="write forest-plot TSV here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riskreg", description="Risk-ratio and risk-difference regression "
                                     "for binary outcomes with ridge, lasso and elastic-net shrinkage.")
    parser.add_argument("--version", action="version", version=f"riskreg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("fit", "fit the model and report estimates"),
                       ("cv", "cross-validate the penalty and report the CV curve"),
                       ("boot", "fit plus bootstrap percentile intervals"),
                       ("diagnose", "EPV, VIF and separation checks")):
        _add_run_args(sub.add_parser(name, help=text, description=text))
    sim = sub.add_parser("simulate", help="write a synthetic cohort CSV", description="write a synthetic cohort CSV")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--family", default="poisson-log")
    sim.add_argument("--intercept", type=float, required=True, help="intercept on the link scale")
    sim.add_argument("--predictor", action="append", default=[], type=parse_sim_predictor,
                     help="name:bernoulli:coef[:prob] or name:normal:coef[:mean[:sd]] (repeatable)")
    sim.add_argument("--outcome", default="y")
    sim.add_argument("--output", required=True, help="CSV path")
    return parser


_RUN_KEYS = ("input", "outcome", "predictors", "family", "penalty", "alpha", "lam", "folds", "stratify", "rule",
             "n_boot", "level", "seed", "reselect_alpha", "drop_constant", "report", "forest")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base = read_config_file(args.config) if args.config else {}
    flags = {k: getattr(args, k) for k in _RUN_KEYS}
    for k in ("alpha", "lam"):
        if flags[k] is not None and flags[k].lower() != "cv":
            try:
                flags[k] = float(flags[k])
            except ValueError:
                raise ValidationError(f"--{'lambda' if k == 'lam' else k} must be a number or 'cv'",
                                      module="cli_reporting") from None
        elif flags[k] is not None:
            flags[k] = "cv"
    return merge(base, flags)


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc.strerror}", module="cli_reporting") from exc


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    report_path = getattr(args, "report", None)
    try:
        if args.command == "simulate":
            model = CohortModel(args.family, args.intercept, tuple(args.predictor), args.outcome)
            write_table_csv(simulate_cohort(args.n, model, args.seed), args.output)
            return 0
        cfg = config_from_args(args)
        report_path = cfg.report
        if args.command == "diagnose":
            _write(json.dumps(jsonable(run_diagnose_command(cfg)), indent=2, allow_nan=False) + "\n", cfg.report)
            return 0
        report = run_fit_command(cfg, args.command)
        _write(report.to_json(), cfg.report)
        if cfg.forest:
            emit_forest_data(report, cfg.forest)
        return 0
    except (RiskRegError, OSError) as exc:
        doc = json.dumps(error_document(exc), indent=2) + "\n"
        sys.stderr.write(doc)
        if report_path:
            try:
                Path(report_path).write_text(doc, encoding="utf-8")
            except OSError:
                pass
        return exc.exit_code if isinstance(exc, RiskRegError) else 2


if __name__ == "__main__":
    sys.exit(main())
