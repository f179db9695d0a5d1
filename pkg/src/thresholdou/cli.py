"""Command-line interface.

Exit codes: 0 on success, 1 on domain or I/O errors, 2 on usage errors.
Output files go to ``--out`` or, when that is omitted, into the directory
named by ``THRESHOLDOU_OUTPUT_DIR`` (default: the working directory).
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .analysis import analyze_rates, format_table, rerun
from .errors import ModelError, MonteCarloError, ThresholdOUError
from .estimators import plugin_inference
from .ingest import atomic_write_text, dumps, ingest_csv, write_path_csv, write_rows_csv
from .model import ThresholdOUModel
from .montecarlo import (ESTIMATORS, MonteCarloSummary, ScenarioConfig, normality_diagnostics,
                         preset, run_scenario, scenario_presets)
from .simulate import SimulationPlan, euler_simulate
from .stationary import asymptotic_covariance, invariant_density, regime_moments
from .thresholds import detect_thresholds, select_num_regimes

OUTPUT_DIR_ENV = "THRESHOLDOU_OUTPUT_DIR"
SAMPLE_NAME = "treasury10y_synthetic.csv"
_LIST_FLAGS = ("--thresholds", "--grid")
_NUMERIC = re.compile(r"^-[\d.]")


def bundled_sample() -> Path:
    """Location of the bundled synthetic daily 10-year rate sample."""
    return Path(str(resources.files("thresholdou") / "data" / SAMPLE_NAME))


def _output_path(value, default_name):
    if value:
        return Path(value)
    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / default_name


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _grid(text):
    """``start:stop:num`` or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("grid must be start:stop:num")
        try:
            start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad grid {text!r}")
        if num < 2:
            raise argparse.ArgumentTypeError("grid needs at least two points")
        return np.linspace(start, stop, num).tolist()
    return _float_list(text)


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _load_model(file) -> ThresholdOUModel:
    with open(file) as fh:
        doc = json.load(fh)
    return ThresholdOUModel.from_dict(doc.get("model", doc))


def _load_scenario(spec) -> ScenarioConfig:
    if spec in scenario_presets():
        return preset(spec)
    if not os.path.exists(spec):
        raise MonteCarloError(f"{spec!r} is neither a preset "
                              f"({', '.join(scenario_presets())}) nor a config file")
    with open(spec) as fh:
        doc = json.load(fh)
    doc.setdefault("reps", 1)
    return ScenarioConfig.from_dict(doc)


def _overrides(args, config: ScenarioConfig) -> ScenarioConfig:
    changes = {k: getattr(args, k) for k in ("n", "h", "reps", "seed", "x0", "burnin")
               if getattr(args, k, None) is not None}
    if getattr(args, "estimators", None):
        changes["estimators"] = tuple(args.estimators.split(","))
    return ScenarioConfig.from_dict({**config.to_dict(), **changes})


# --- subcommands -----------------------------------------------------------

def cmd_simulate(args):
    if (args.scenario is None) == (args.model is None):
        raise ModelError("give exactly one of --scenario and --model")
    if args.model:
        model = _load_model(args.model)
        n, h, x0 = args.n, args.h, args.x0 if args.x0 is not None else 0.0
        if n is None or h is None:
            raise ModelError("--model needs --n and --h")
        seed = args.seed if args.seed is not None else 0
    else:
        config = _overrides(args, _load_scenario(args.scenario))
        model, n, h, x0, seed = config.model, config.n, config.h, config.x0, config.seed
    path = euler_simulate(SimulationPlan(model, x0, n, h, seed, args.replication))
    out = _output_path(args.out, "path.csv")
    write_path_csv(path, out)
    print(out)


def cmd_estimate(args):
    if args.detect and args.thresholds is not None:
        raise ModelError("--detect and --thresholds are mutually exclusive")
    path = ingest_csv(args.input, h=args.h, column=args.column)
    if args.detect:
        if args.regimes is None:
            raise ModelError("--detect needs --regimes <m>")
        thresholds = detect_thresholds(path, args.regimes, min_frac=args.min_frac).thresholds
    else:
        thresholds = args.thresholds or []
    report = plugin_inference(path, thresholds, args.level, args.zero_intercept)
    sys.stdout.write(dumps(report.to_dict()))
    print(report.table(), file=sys.stderr)


def cmd_density(args):
    if (args.scenario is None) == (args.model is None):
        raise ModelError("give exactly one of --scenario and --model")
    model = _load_model(args.model) if args.model else _load_scenario(args.scenario).model
    density = invariant_density(model)
    x = np.asarray(args.grid, dtype=float)
    rows = list(zip(x.tolist(), density.pdf(x).tolist()))
    write_rows_csv(_output_path(args.out, "density.csv"), ["x", "pi(x)"], rows)
    regimes = []
    for i in range(1, model.m + 1):
        mom = regime_moments(density, i)
        entry = {"regime": i, "k": density.k[i - 1], "P": mom.P, "K": mom.K, "R": mom.R,
                 "M": mom.M}
        try:
            cov = asymptotic_covariance(density, i)
            entry["covariance"] = cov.matrix.tolist()
            entry["zero_intercept_variance"] = cov.zero_intercept_variance
        except ThresholdOUError as exc:
            entry["covariance"] = None
            entry["note"] = str(exc)
        regimes.append(entry)
    sys.stdout.write(dumps({"model": model.to_dict(), "k": list(density.k), "regimes": regimes}))


def cmd_detect(args):
    path = ingest_csv(args.input, h=args.h, column=args.column)
    if args.regimes is not None:
        result = detect_thresholds(path, args.regimes, min_frac=args.min_frac)
    else:
        result = select_num_regimes(path, args.max_regimes, min_frac=args.min_frac)
    sys.stdout.write(dumps(result.to_dict()))


def _write_mc(summary: MonteCarloSummary, out: Path):
    names = list(summary.params)
    by_rep = {r: k for k, r in enumerate(summary.replications)}
    rows = []
    for r in range(summary.config.reps):
        if r in by_rep:
            k = by_rep[r]
            rows.append([r, "ok"] + [float(summary.params[p].estimates[k]) for p in names])
        else:
            rows.append([r, "degenerate"] + [""] * len(names))
    write_rows_csv(out / "estimates.csv", ["replication", "status"] + names, rows)

    doc = summary.to_dict()
    qq = {}
    for name, par in summary.params.items():
        if par.z is None:
            continue
        try:
            diag = normality_diagnostics(summary, name)
        except ThresholdOUError as exc:
            qq[name] = {"file": None, "reason": str(exc)}
            continue
        file = f"qq_{name}.csv"
        write_rows_csv(out / file, ["theoretical", "empirical"], diag.qq_rows())
        qq[name] = {"file": file, "ks": diag.ks, "standardization": diag.standardization}
    doc["qq"] = qq
    atomic_write_text(out / "summary.json", dumps(doc))


def cmd_mc(args):
    config = _overrides(args, _load_scenario(args.scenario))
    summary = run_scenario(config, workers=args.workers)
    out = _output_path(args.out, "mc")
    out.mkdir(parents=True, exist_ok=True)
    _write_mc(summary, out)
    lines = [f"{'param':<14}{'truth':>10}{'bias':>12}{'std':>12}{'ks':>10}"]
    for p in summary.params.values():
        ks = "" if p.ks is None else f"{p.ks:.4f}"
        lines.append(f"{p.name:<14}{p.truth:>10.4g}{p.bias:>12.5f}{p.std:>12.5f}{ks:>10}")
    print("\n".join(lines), file=sys.stderr)
    print(out)


def cmd_analyze(args):
    if args.from_report:
        with open(args.from_report) as fh:
            report = rerun(json.load(fh)["provenance"])
    else:
        source = args.input or bundled_sample()
        report = analyze_rates(source, h=args.h, regimes=args.regimes,
                               max_regimes=args.max_regimes, min_frac=args.min_frac,
                               level=args.level, density=args.density, column=args.column)
    text = dumps(report.to_dict())
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    print(format_table(report.estimate), file=sys.stderr)


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thresholdou",
        description="Simulation and estimation for threshold Ornstein-Uhlenbeck processes.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    parser.commands = sub.choices

    def scenario_flags(p, reps=False):
        p.add_argument("--scenario", help="preset name (scenario1..3) or config JSON file")
        p.add_argument("--n", type=_positive_int, help="number of increments")
        p.add_argument("--h", type=float, help="mesh size")
        p.add_argument("--seed", type=int, help="unsigned 64-bit seed")
        p.add_argument("--x0", type=float, help="initial value")
        if reps:
            p.add_argument("--reps", type=_positive_int, help="number of replications")

    p = sub.add_parser("simulate", help="simulate one Euler path to CSV")
    scenario_flags(p)
    p.add_argument("--model", help="model JSON file (keys m, thresholds, alpha, beta, sigma)")
    p.add_argument("--replication", type=int, default=0, help="replication index (default 0)")
    p.add_argument("--out", help="output CSV (t,x)")
    p.set_defaults(func=cmd_simulate)

    def input_flags(p, h_default=None):
        p.add_argument("--input", required=True, help="CSV with t,x or date,x or x rows")
        p.add_argument("--h", type=float, default=h_default, help="mesh size")
        p.add_argument("--column", help="value column name (default: last column)")
        p.add_argument("--min-frac", type=float, default=0.02,
                       help="minimum fraction of observations per regime (default 0.02)")

    p = sub.add_parser("estimate", help="drift LSE, MQVE and plug-in intervals")
    input_flags(p)
    p.add_argument("--thresholds", type=_float_list, help="comma-separated thresholds")
    p.add_argument("--detect", action="store_true", help="detect thresholds first")
    p.add_argument("--regimes", type=_positive_int, help="regime count for --detect")
    p.add_argument("--level", type=float, default=0.95, help="confidence level (default 0.95)")
    p.add_argument("--zero-intercept", action="store_true", help="assume beta = 0 in every regime")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("density", help="invariant density on a grid plus regime moments")
    p.add_argument("--model", help="model JSON file (common sigma)")
    p.add_argument("--scenario", help="preset name or config JSON file")
    p.add_argument("--grid", type=_grid, required=True, help="start:stop:num or comma list")
    p.add_argument("--out", help="output CSV (x,pi(x))")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("detect", help="threshold detection")
    input_flags(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--regimes", type=_positive_int, help="fixed regime count")
    group.add_argument("--max-regimes", type=_positive_int, default=3,
                       help="choose 1..M regimes by BIC (default 3)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("mc", help="Monte Carlo study")
    scenario_flags(p, reps=True)
    p.add_argument("--burnin", type=int, help="steps discarded before estimation")
    p.add_argument("--estimators", help=f"comma list from {', '.join(ESTIMATORS)}")
    p.add_argument("--workers", type=_positive_int, default=1, help="worker processes")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("analyze", help="detect, estimate and report a rate series")
    p.add_argument("--input", help="rate CSV (default: bundled synthetic sample)")
    p.add_argument("--h", type=float, default=0.046,
                   help="mesh per row (default 0.046, one business day in months)")
    p.add_argument("--column", help="value column name")
    p.add_argument("--regimes", type=_positive_int, help="fixed regime count")
    p.add_argument("--max-regimes", type=_positive_int, default=3,
                   help="BIC search bound when --regimes is not given (default 3)")
    p.add_argument("--min-frac", type=float, default=0.02, help="minimum regime fraction")
    p.add_argument("--level", type=float, default=0.95, help="confidence level")
    p.add_argument("--density", action="store_true", help="add a common-sigma density summary")
    p.add_argument("--from-report", help="re-run from the provenance block of a report")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_analyze)
    return parser


def _join_negative_lists(argv):
    # "--thresholds -0.5,0.5" would otherwise be read as an unknown option
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _LIST_FLAGS and i + 1 < len(argv) and _NUMERIC.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(_join_negative_lists(argv))
        if extra:
            parser.commands[args.command].error(f"unrecognized arguments: {' '.join(extra)}")
    except SystemExit as exc:  # --help exits 0, usage errors 2
        return int(exc.code or 0)
    try:
        args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        if isinstance(exc, KeyError):
            exc = f"missing key {exc}"
        print(f"thresholdou {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
