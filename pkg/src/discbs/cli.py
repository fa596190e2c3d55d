"""Command-line front end.

    discbs dist pmf|cdf|reliability|quantile|mean|var|mode|hazard --alpha A --beta B [--s S | --p P] [--r R]
    discbs sample --alpha A --beta B --n N --seed K
    discbs fit --data FILE [--response COL] [--seed K] [--json PATH]
    discbs regress --data FILE --response COL --covariates C1,C2 [--no-intercept]
    discbs diagnose --data FILE --response COL [--covariates ...] --residuals rq|gcs
                    --envelope B --level 0.95 --seed K --csv PATH
    discbs mc --config FILE.json --out PREFIX

Exit codes: 0 success, 2 input error, 3 non-convergence, 4 numerical failure.
"""

import argparse
import csv
import datetime as dt
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import core, montecarlo
from .errors import ConvergenceError, DomainError, TailExhaustedError, TruncationError
from .mle import fit
from .regression import RegressionDataset, envelope, reg_fit

SCHEMA_VERSION = "1"
EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED, EXIT_NUMERIC = 0, 2, 3, 4


class InputError(Exception):
    pass


@dataclass
class InputTable:
    columns: list
    rows: np.ndarray
    response: int

    @property
    def responses(self):
        return self.rows[:, self.response].astype(np.int64)

    def column(self, name):
        return self.rows[:, _resolve(self.columns, name)]


def _resolve(columns, key):
    if key in columns:
        return columns.index(key)
    try:
        idx = int(key)
    except (TypeError, ValueError):
        raise InputError(f"unknown column {key!r}; have {columns}") from None
    if not 0 <= idx < len(columns):
        raise InputError(f"column index {idx} out of range")
    return idx


def read_table(path, header=True, delimiter=",", response=None):
    """Parse a numeric CSV; the response column must hold nonnegative integers."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            raw = [r for r in csv.reader(fh, delimiter=delimiter) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not raw:
        raise InputError(f"{path} is empty")
    offset = 1
    if header:
        columns = [c.strip() for c in raw[0]]
        raw = raw[1:]
        offset = 2
    else:
        columns = [str(j) for j in range(len(raw[0]))]
    if not raw:
        raise InputError(f"{path} has no data rows")
    rows = []
    for i, r in enumerate(raw):
        if len(r) != len(columns):
            raise InputError(f"row {i + offset}: expected {len(columns)} fields, got {len(r)}")
        vals = []
        for j, cell in enumerate(r):
            try:
                vals.append(float(cell))
            except ValueError:
                raise InputError(f"row {i + offset}, column {columns[j]!r}: cannot parse {cell!r}") from None
        rows.append(vals)
    rows = np.array(rows, dtype=float)
    ri = _resolve(columns, response if response is not None else columns[0])
    y = rows[:, ri]
    bad = np.nonzero(~np.isfinite(y) | (y < 0) | (y != np.floor(y)))[0]
    if bad.size:
        listed = ", ".join(str(b + offset) for b in bad[:10])
        raise InputError(f"response {columns[ri]!r} must be a nonnegative integer; offending rows: {listed}")
    return InputTable(columns=columns, rows=rows, response=ri)


def ingest_csv(path, header=True, delimiter=",", response=None, covariates=None, intercept=True, regression=True):
    """Read ``path`` into an :class:`InputTable`, or a :class:`RegressionDataset` when ``regression``.

    Without explicit ``covariates`` every non-response column is used.  An
    intercept column is prepended unless ``intercept=False``.
    """
    table = read_table(path, header, delimiter, response)
    if not regression:
        return table
    if covariates is None:
        cov_idx = [j for j in range(len(table.columns)) if j != table.response]
    else:
        cov_idx = [_resolve(table.columns, c) for c in covariates]
    cols = [table.rows[:, j] for j in cov_idx]
    if intercept:
        cols.insert(0, np.ones(table.rows.shape[0]))
    if not cols:
        raise InputError("design matrix has no columns")
    try:
        return RegressionDataset(table.responses, np.column_stack(cols))
    except DomainError as exc:
        raise InputError(str(exc)) from exc


def coef_names(table, covariates, intercept):
    if covariates is None:
        names = [c for j, c in enumerate(table.columns) if j != table.response]
    else:
        names = [table.columns[_resolve(table.columns, c)] for c in covariates]
    return (["intercept"] if intercept else []) + names


# --- reporting -------------------------------------------------------------

def make_report(argv, seed, results, warnings=()):
    return {
        "schema_version": SCHEMA_VERSION,
        "command": list(argv),
        "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(),
        "seed": seed,
        "results": results,
        "warnings": list(warnings),
    }


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, default=float)


def _print_estimates(names, est, se):
    print(f"{'parameter':<14}{'estimate':>16}{'std.err':>14}")
    for j, nm in enumerate(names):
        s = "" if se is None else f"{se[j]:>14.4f}"
        print(f"{nm:<14}{est[j]:>16.4f}{s}")


# --- commands ----------------------------------------------------------------

def cmd_dist(args):
    p = core.DistParams(args.alpha, args.beta)
    q = args.quantity
    need_s = q in ("pmf", "cdf", "reliability", "hazard")
    if need_s and args.s is None:
        raise InputError(f"'{q}' needs --s")
    if q == "quantile" and args.p is None:
        raise InputError("'quantile' needs --p")
    if q == "pmf":
        val = core.pmf(int(args.s), p)
    elif q == "cdf":
        val = core.cdf(args.s, p)
    elif q == "reliability":
        val = core.reliability(args.s, p)
    elif q == "hazard":
        val = core.hazard(int(args.s), p)
    elif q == "quantile":
        val = core.quantile(args.p, p)
    elif q == "mean":
        val = core.raw_moment(args.r, p)
    elif q == "var":
        val = core.variance(p)
    else:
        val = core.mode(p)
    print(repr(val.item() if isinstance(val, np.generic) else val))
    return EXIT_OK


def cmd_sample(args):
    x = core.sample(args.n, core.DistParams(args.alpha, args.beta), args.seed)
    sys.stdout.write("\n".join(str(v) for v in x) + "\n")
    return EXIT_OK


def cmd_fit(args, argv):
    table = read_table(args.data, not args.no_header, args.delimiter, args.response)
    try:
        res = fit(table.responses)
    except DomainError as exc:
        raise InputError(str(exc)) from exc
    _print_estimates(["alpha", "beta"], [res.params.alpha, res.params.beta], res.std_errors)
    print(f"loglik = {res.loglik:.4f}   AIC = {res.aic:.4f}   BIC = {res.bic:.4f}   n = {res.n}")
    report = make_report(argv, args.seed, {"fit": res.as_dict()}, res.warnings)
    if args.json:
        write_json(args.json, report)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["parameter", "estimate", "std_error"])
            se = res.std_errors if res.std_errors is not None else [float("nan")] * 2
            w.writerow(["alpha", res.params.alpha, se[0]])
            w.writerow(["beta", res.params.beta, se[1]])
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def _load_regression(args):
    covs = None if args.covariates is None else [c for c in args.covariates.split(",") if c]
    table = read_table(args.data, not args.no_header, args.delimiter, args.response)
    data = ingest_csv(args.data, not args.no_header, args.delimiter, args.response, covs, not args.no_intercept)
    return data, coef_names(table, covs, not args.no_intercept)


def cmd_regress(args, argv):
    data, names = _load_regression(args)
    res = reg_fit(data)
    _print_estimates(["alpha", *names], res.params.vector(), res.std_errors)
    print(f"loglik = {res.loglik:.4f}   AIC = {res.aic:.4f}   BIC = {res.bic:.4f}   n = {res.n}")
    report = make_report(argv, args.seed, {"regression": res.as_dict(names)}, res.warnings)
    if args.json:
        write_json(args.json, report)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["parameter", "estimate", "std_error"])
            se = res.std_errors if res.std_errors is not None else [float("nan")] * (len(names) + 1)
            for nm, v, e in zip(["alpha", *names], res.params.vector(), se):
                w.writerow([nm, v, e])
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def cmd_diagnose(args, argv):
    data, names = _load_regression(args)
    res = reg_fit(data)
    if not res.converged:
        print("fit did not converge; diagnostics skipped", file=sys.stderr)
        return EXIT_NONCONVERGED
    rep = envelope(res, data, args.envelope, args.level, args.seed, args.residuals, refit=not args.fixed_params)
    cov = rep.coverage()
    print(f"{rep.residual_kind.value} residuals, {rep.replications} replicates "
          f"({rep.dropped} dropped), level {rep.level}: {100 * cov:.1f}% of points inside the envelope")
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=["position", "observed", "lower", "median", "upper", "theoretical"])
            w.writeheader()
            w.writerows(rep.rows())
    if args.json:
        payload = {
            "regression": res.as_dict(names),
            "diagnostics": {
                "residual_kind": rep.residual_kind.value,
                "level": rep.level,
                "replications": rep.replications,
                "dropped": rep.dropped,
                "refit": rep.refit,
                "coverage": cov,
                "bands": list(rep.rows()),
            },
        }
        write_json(args.json, make_report(argv, args.seed, payload, res.warnings))
    return EXIT_OK


def cmd_mc(args, argv):
    try:
        config = montecarlo.StudyConfig.from_json(args.config)
    except (OSError, ValueError, TypeError) as exc:
        raise InputError(f"bad config {args.config}: {exc}") from exc
    if args.workers is not None:
        config.workers = args.workers

    def progress(cell):
        print(f"  n={cell.n:<5d} alpha={cell.alpha:<5g} converged {cell.converged}/{config.replications}",
              file=sys.stderr)

    result = montecarlo.run_study(config, progress)
    print(result.format_table())
    result.write_csv(f"{args.out}.csv")
    report = make_report(argv, config.master_seed, result.to_dict(),
                         [f"cell n={c.n} alpha={c.alpha} flagged" for c in result.cells if c.flagged])
    write_json(f"{args.out}.json", report)
    return EXIT_OK


# --- parser --------------------------------------------------------------------

def _data_args(p, response_required=False):
    p.add_argument("--data", required=True, help="CSV file")
    p.add_argument("--response", required=response_required, help="response column (name or 0-based index)")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--json", help="write a JSON report here")
    p.add_argument("--csv", help="write a CSV table here")


def build_parser():
    ap = argparse.ArgumentParser(prog="discbs", description="Discrete Birnbaum-Saunders toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dist", help="evaluate distribution quantities")
    d.add_argument("quantity", choices=["pmf", "cdf", "reliability", "quantile", "mean", "var", "mode", "hazard"])
    d.add_argument("--alpha", type=float, required=True)
    d.add_argument("--beta", type=float, required=True)
    g = d.add_mutually_exclusive_group()
    g.add_argument("--s", type=float)
    g.add_argument("--p", type=float)
    d.add_argument("--r", type=int, default=1, help="moment order for 'mean'")

    s = sub.add_parser("sample", help="draw a random sample")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)

    f = sub.add_parser("fit", help="maximum-likelihood fit of (alpha, beta)")
    _data_args(f)

    r = sub.add_parser("regress", help="fit the log-link regression model")
    _data_args(r, response_required=True)
    r.add_argument("--covariates", required=True, help="comma-separated column names")
    r.add_argument("--no-intercept", action="store_true")

    g = sub.add_parser("diagnose", help="residuals with simulated QQ envelope")
    _data_args(g, response_required=True)
    g.add_argument("--covariates", help="comma-separated column names (default: all other columns)")
    g.add_argument("--no-intercept", action="store_true")
    g.add_argument("--residuals", choices=["rq", "gcs"], default="rq")
    g.add_argument("--envelope", type=int, default=100, help="bootstrap replicates")
    g.add_argument("--level", type=float, default=0.95)
    g.add_argument("--fixed-params", action="store_true", help="simulate without refitting each replicate")

    m = sub.add_parser("mc", help="Monte Carlo bias/MSE study")
    m.add_argument("--config", required=True)
    m.add_argument("--out", required=True, help="output prefix for .csv and .json")
    m.add_argument("--workers", type=int)
    return ap


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        if args.command == "dist":
            return cmd_dist(args)
        if args.command == "sample":
            return cmd_sample(args)
        handler = {"fit": cmd_fit, "regress": cmd_regress, "diagnose": cmd_diagnose, "mc": cmd_mc}[args.command]
        return handler(args, ["discbs", *argv])
    except (InputError, DomainError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (TailExhaustedError, TruncationError, FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
