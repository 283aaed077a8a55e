"""Command-line front end.

Subcommands ``corr``, ``matrix``, ``fit`` and ``simulate`` print one report
each, either as an aligned table or as a single JSON document.

Exit codes:

    0  success
    2  input error (unreadable file, bad CSV, unknown column, bad config)
    3  numerical failure (degenerate margin, infeasible or non-converged fit)
"""
import argparse
import configparser
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import regression, simulate
from ._validation import DegenerateMarginError
from .estimator import kappa_estimate
from .inference import (DEFAULT_C, VarianceModel, boundary_result, lr_test,
                        quasi_loglik_moment_term, quasi_lr_test, standard_error,
                        wald_test)
from .multivariate import kappa_matrix, matrix_tests

logger = logging.getLogger("kappaql")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


class InputError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


# -- ingestion ---------------------------------------------------------------

@dataclass
class Dataset:
    columns: dict = field(default_factory=dict)
    source: str = ""

    @property
    def n(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    @property
    def p(self):
        return len(self.columns)

    def column(self, name):
        try:
            return self.columns[name]
        except KeyError:
            raise InputError(f"unknown column {name!r}; available: {', '.join(self.columns)}") from None


def _parse_cell(text):
    t = text.strip()
    if not t:
        return None
    try:
        v = float(t)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_csv(path, delimiter=",", has_header=True, na_policy="reject"):
    """Read a numeric CSV file into a :class:`Dataset`.

    Parameters
    ----------
    path : str
    delimiter : str, default ","
    has_header : bool, default True
        Without a header the columns are named ``col1 .. colP``.
    na_policy : {"reject", "drop-row"}
        ``reject`` fails on the first empty or non-numeric cell;
        ``drop-row`` silently drops such rows.

    Raises
    ------
    InputError
        Unreadable file, ragged row (reported with its line number),
        duplicate header names or a rejected cell.
    """
    if na_policy not in ("reject", "drop-row"):
        raise InputError(f"unknown NA policy {na_policy!r}")
    try:
        with open(path, newline="") as fh:
            rows = list(enumerate(csv.reader(fh, delimiter=delimiter), start=1))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except csv.Error as exc:
        raise InputError(f"{path}: {exc}") from None
    rows = [(ln, r) for ln, r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path}: no data")
    if has_header:
        names = [h.strip() for h in rows[0][1]]
        rows = rows[1:]
        if len(set(names)) != len(names):
            raise InputError(f"{path}: duplicate column names in header")
    else:
        names = [f"col{j + 1}" for j in range(len(rows[0][1]))]
    p = len(names)
    data = []
    for ln, r in rows:
        if len(r) != p:
            raise InputError(f"{path}:{ln}: expected {p} fields, found {len(r)}")
        vals = [_parse_cell(c) for c in r]
        if any(v is None for v in vals):
            if na_policy == "reject":
                j = vals.index(None)
                raise InputError(f"{path}:{ln}: non-numeric or missing value {r[j]!r} "
                                 f"in column {names[j]!r}")
            logger.debug("dropping line %d", ln)
            continue
        data.append(vals)
    arr = np.array(data, dtype=np.float64).reshape(len(data), p)
    return Dataset({name: arr[:, j] for j, name in enumerate(names)}, str(path))


# -- commands ----------------------------------------------------------------

def _test_dict(t):
    return {"statistic": t.statistic, "df": t.df, "p_value": t.p_value, "boundary": t.boundary}


def _tests_for(tau, n, vm):
    if abs(tau) >= 1.0:
        return boundary_result("wald", tau, n), boundary_result("lrt", tau, n)
    return wald_test(tau, n, vm), lr_test(tau, n)


def _numerical(fn, *args):
    try:
        return fn(*args)
    except DegenerateMarginError as exc:
        raise NumericalFailure(str(exc)) from None
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_corr(ds, col_x, col_y, vm):
    x, y = ds.column(col_x), ds.column(col_y)
    est = _numerical(kappa_estimate, x, y)
    n = est.n
    wald, lrt = _tests_for(est.tau_corr, n, vm)
    return {
        "command": "corr",
        "x": col_x,
        "y": col_y,
        "n": n,
        "tau_corr": est.tau_corr,
        "tau_cov": est.tau_cov,
        "se": standard_error(est.tau_corr, n, vm) if n >= 3 else None,
        "se_null": standard_error(0.0, n, vm) if n >= 3 else None,
        "c": vm.c,
        "variance_denominator": vm.denominator.value,
        "wald": _test_dict(wald),
        "lrt": _test_dict(lrt),
        "quasi_lr": (_test_dict(quasi_lr_test(est.tau_corr, n, vm))
                     if abs(est.tau_corr) < 1.0 else None),
        "gamma3": est.gamma3,
        "gamma4": est.gamma4,
        "moment_term": quasi_loglik_moment_term(est.gamma3, est.gamma4, n),
    }


def cmd_matrix(ds, vm, columns=None):
    names = list(ds.columns) if not columns else columns
    if len(names) < 2:
        raise InputError("matrix needs at least 2 columns")
    cols = [ds.column(c) for c in names]
    if ds.n < 2:
        raise InputError(f"need at least 2 rows, got {ds.n}")
    try:
        m = kappa_matrix(cols, names=names)
    except DegenerateMarginError as exc:
        raise NumericalFailure(str(exc)) from None
    tests = [{"a": names[a], "b": names[b], "tau_corr": float(m.entries[a, b]),
              "wald": _test_dict(w), "lrt": _test_dict(lr)}
             for (a, b), w, lr in matrix_tests(m, vm=vm)]
    return {
        "command": "matrix",
        "names": names,
        "n": m.n,
        "c": vm.c,
        "variance_denominator": vm.denominator.value,
        "correlation": m.entries.tolist(),
        "covariance": m.covariance.tolist(),
        "psd": m.is_psd(),
        "tests": tests,
    }


def cmd_fit(ds, response, predictors, tol=1e-8, max_iter=100, response_scale=1.0):
    if not predictors:
        raise InputError("at least one predictor is required")
    y = ds.column(response)
    X = np.column_stack([ds.column(p) for p in predictors])
    d = _numerical(regression.build_design, X, y, None, response_scale)
    try:
        res = regression.fit(d, tol=tol, max_iter=max_iter)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"linear algebra failure: {exc}") from None
    report = {
        "command": "fit",
        "response": response,
        "predictors": list(predictors),
        "n": d.n,
        "theta": res.theta.tolist(),
        "converged": res.converged,
        "iterations": res.iterations,
        "objective": res.objective,
        "gradient_norm": res.gradient_norm,
        "residual": res.residual.tolist(),
        "hessian": res.hessian.tolist(),
        "feasibility_margin": res.feasibility_margin,
        "full_rank": res.full_rank,
        "trace": [{"objective": f, "gradient_norm": g, "step": a} for f, g, a in res.trace],
    }
    if not res.converged:
        raise NumericalFailure(
            f"solver did not converge after {res.iterations} iterations "
            f"(gradient norm {res.gradient_norm:.3g})", report)
    return report


_CONFIG_KEYS = {
    "generator": str,
    "n_grid": lambda s: tuple(int(v) for v in s.split(",")),
    "replicates": int,
    "seed": int,
    "alpha": float,
    "k": int,
    "rho": float,
    "rhos": lambda s: tuple(float(v) for v in s.split(",") if v.strip()),
    "studies": lambda s: tuple(v.strip() for v in s.split(",") if v.strip()),
    "c": float,
    "variance_denominator": str,
}
_STUDIES = ("calibrate", "size", "concentration")


def read_sim_config(path):
    """Parse a flat ``key = value`` file into ``(SimConfig, studies, c, denominator)``.

    Recognised keys: generator, n_grid, replicates, seed, alpha, k, rho, rhos
    (comma-separated), studies (subset of calibrate, size, concentration),
    c and variance_denominator.  Unknown keys are rejected.
    """
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    try:
        cp.read_string("[simulate]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise InputError(f"{path}: {exc}") from None
    raw = dict(cp["simulate"])
    unknown = sorted(set(raw) - set(_CONFIG_KEYS))
    if unknown:
        raise InputError(f"{path}: unknown config keys: {', '.join(unknown)}")
    vals = {}
    for k, v in raw.items():
        try:
            vals[k] = _CONFIG_KEYS[k](v)
        except ValueError:
            raise InputError(f"{path}: bad value for {k!r}: {v!r}") from None
    studies = vals.pop("studies", ("calibrate",))
    bad = [s for s in studies if s not in _STUDIES]
    if bad:
        raise InputError(f"{path}: unknown studies {bad}; expected {_STUDIES}")
    c = vals.pop("c", None)
    denom = vals.pop("variance_denominator", "n")
    try:
        cfg = simulate.SimConfig(**vals)
        VarianceModel(DEFAULT_C if c is None else c, denom)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    return cfg, studies, c, denom


def cmd_simulate(config_path, seed=None, c=None, denominator=None):
    """Run the studies listed in the config.

    The size study uses ``c`` when given (command line, then config file),
    otherwise the constant calibrated at each ``n``, falling back to the default.
    """
    cfg, studies, c_cfg, denom = read_sim_config(config_path)
    c = c_cfg if c is None else c
    denom = denominator or denom
    vm = None if c is None else VarianceModel(c, denom)
    if seed is not None:
        cfg = simulate.SimConfig(**{**cfg.__dict__, "seed": seed})
    report = simulate.CalibrationReport(cfg.generator, cfg.n_grid, cfg.replicates, cfg.seed)
    if "calibrate" in studies:
        report = simulate.calibrate_c(cfg)
        logger.info("c_hat = %.6g (se %.2g)", report.c_hat, report.c_hat_stderr)
    if "size" in studies:
        if vm is None:
            vm = {n: VarianceModel(report.c_by_n.get(n, DEFAULT_C), denom) for n in cfg.n_grid}
        simulate.size_power_study(cfg, vm, report)
    if "concentration" in studies:
        table = simulate.concentration_check(cfg)
        report.concentration_table = {
            eps: {"rows": [r.__dict__ for r in v["rows"]], "decreasing": v["decreasing"],
                  "log_slope": v["log_slope"]}
            for eps, v in table.items()}
    out = report.to_dict()
    out["command"] = "simulate"
    out["studies"] = list(studies)
    return out


# -- output ------------------------------------------------------------------

def to_json(report):
    """Deterministic JSON; floats use ``repr`` and so re-parse to identical values."""
    return json.dumps(report, indent=2, allow_nan=True)


def _flatten(prefix, v, out):
    if isinstance(v, dict):
        for k, x in v.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), x, out)
    elif isinstance(v, list) and v and isinstance(v[0], (dict, list)):
        for i, x in enumerate(v):
            _flatten(f"{prefix}[{i}]", x, out)
    else:
        out.append((prefix, v))


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def to_table(report):
    rows = []
    _flatten("", report, rows)
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {_fmt(v)}" for k, v in rows)


# -- entry point -------------------------------------------------------------

def _u64(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text):
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError("must be a positive number")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "json"), default="table")
    common.add_argument("--c", type=_positive, default=None,
                        help=f"variance constant (default {DEFAULT_C})")
    common.add_argument("--variance-denominator", choices=("n", "n-2"), default=None)
    common.add_argument("--seed", type=_u64, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("csv", help="input CSV file")
    data.add_argument("--delimiter", default=",")
    data.add_argument("--no-header", action="store_true", help="name columns col1..colP")
    data.add_argument("--na-policy", choices=("reject", "drop-row"), default="reject")

    parser = argparse.ArgumentParser(prog="kappaql", description="Kappa correlation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corr", parents=[common, data], help="kappa correlation of two columns")
    p.add_argument("--col-x", required=True)
    p.add_argument("--col-y", required=True)

    p = sub.add_parser("matrix", parents=[common, data], help="kappa correlation matrix")
    p.add_argument("--columns", help="comma-separated subset (default: all)")

    p = sub.add_parser("fit", parents=[common, data], help="kappa regression")
    p.add_argument("--response", required=True)
    p.add_argument("--predictors", required=True, help="comma-separated column names")
    p.add_argument("--tol", type=_positive, default=1e-8)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--response-scale", type=_positive, default=1.0)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo calibration")
    p.add_argument("config", help="flat key = value config file")
    return parser


def _split(text):
    return [s.strip() for s in text.split(",") if s.strip()]


def run(args):
    if args.command == "simulate":
        return cmd_simulate(args.config, args.seed, args.c, args.variance_denominator)
    vm = VarianceModel(args.c or DEFAULT_C, args.variance_denominator or "n")
    ds = load_csv(args.csv, args.delimiter, not args.no_header, args.na_policy)
    if args.command == "corr":
        return cmd_corr(ds, args.col_x, args.col_y, vm)
    if args.command == "matrix":
        return cmd_matrix(ds, vm, _split(args.columns) if args.columns else None)
    return cmd_fit(ds, args.response, _split(args.predictors), args.tol, args.max_iter,
                   args.response_scale)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    render = to_json if args.format == "json" else to_table
    try:
        report = run(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalFailure as exc:
        if exc.report is not None:
            print(render(exc.report))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(render(report))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
