"""Command-line interface.

Subcommands::

    helars path --input data.csv --response Y --out results/
    helars fit --input data.csv --response Y --out results/
    helars simulate --n 1000 --d 3 --seed 1 --out sim.csv

Exit status is 0 on success, 1 on a numerical failure and 2 on bad input
or usage; failures also write a JSON object to stderr.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .coordinates import DesignBlock
from .datasets import ingest, simulate, standardize, theta_to_raw, write_table
from .errors import InputError, NumericalError
from .estimation import MleOptions, mle_full, mle_null
from .models import MODELS, make_model
from .selection import SelectionConfig, run_helars
from .transport import TransportOptions


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="helars", description="Covariate ranking for exponential-family GLMs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_common(p):
        p.add_argument("--input", required=True, help="comma- or whitespace-delimited table with header")
        p.add_argument("--response", default=None, help="response column (default: last column)")
        p.add_argument("--model", default="truncnorm", choices=sorted(MODELS))
        p.add_argument("--no-scale", action="store_true", help="skip standardization")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--rtol", type=float, default=TransportOptions.rel_tol)
        p.add_argument("--atol", type=float, default=TransportOptions.abs_tol)
        p.add_argument("--checkpoints", type=int, default=TransportOptions.checkpoints)
        p.add_argument("--raw-scale", action="store_true", help="report theta in raw data units")
        p.add_argument("--oracle", action="store_true", help="use the closed-form L instead of transport")

    p_path = sub.add_parser("path", help="compute the ranking path")
    add_common(p_path)
    p_path.add_argument("--bisection-tol", type=float, default=SelectionConfig.bisection_tol)

    p_fit = sub.add_parser("fit", help="maximum likelihood only")
    add_common(p_fit)

    p_sim = sub.add_parser("simulate", help="write a simulated dataset")
    p_sim.add_argument("--n", type=int, default=1000)
    p_sim.add_argument("--d", type=int, default=3)
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--correlated", action="store_true")
    p_sim.add_argument("--out", required=True, help="output CSV file")
    return parser


def _prepare(args):
    dataset = ingest(args.input, args.response, args.model)
    if not args.no_scale:
        dataset = standardize(dataset, center_response=(args.model == "normal"))
    design = DesignBlock(dataset.X)
    model = make_model(args.model, dataset.n)
    try:
        transport = TransportOptions(
            rel_tol=args.rtol, abs_tol=args.atol, checkpoints=args.checkpoints, oracle=args.oracle
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return dataset, design, model, transport


def _report_theta(theta, dataset, raw):
    if raw and dataset.scaling is not None:
        return theta_to_raw(theta, dataset.scaling)
    return np.asarray(theta, dtype=float)


def _mle_summary(res):
    return {
        "loglike": res.loglike,
        "grad_norm": res.grad_norm,
        "iterations": res.iterations,
    }


def _theta_names(d):
    return [f"theta_{j}" for j in range(d + 2)]


def run_path(args):
    dataset, design, model, transport = _prepare(args)
    try:
        config = SelectionConfig(
            bisection_tol=args.bisection_tol, transport=transport, mle=MleOptions(transport=transport)
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    start = time.perf_counter()
    path = run_helars(dataset, design, model, config)
    elapsed = time.perf_counter() - start

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    thetas = [_report_theta(s.theta, dataset, args.raw_scale) for s in path.steps]
    with open(out / "path.csv", "w", encoding="utf-8") as fh:
        fh.write(",".join(["step", "div_ratio"] + _theta_names(design.d)) + "\n")
        for s, th in zip(path.steps, thetas):
            fh.write(",".join([str(s.k), f"{s.divergence_ratio:.17g}"] + [f"{v:.17g}" for v in th]) + "\n")
    with open(out / "plot.csv", "w", encoding="utf-8") as fh:
        fh.write(",".join(["div_ratio"] + list(dataset.names)) + "\n")
        for s, th in zip(path.steps, thetas):
            fh.write(",".join([f"{s.divergence_ratio:.17g}"] + [f"{v:.17g}" for v in th[1 : design.d + 1]]) + "\n")
    summary = {
        "model": model.name,
        "n": dataset.n,
        "d": dataset.d,
        "removal_order": path.removal_order,
        "removal_order_names": [dataset.names[j - 1] for j in path.removal_order],
        "divergence_ratios": path.ratios.tolist(),
        "t_star": [s.t_star for s in path.steps[1:]],
        "mle_full": _mle_summary(path.mle),
        "mle_null": _mle_summary(path.null),
        "config": {
            "scaled": not args.no_scale,
            "raw_scale": args.raw_scale,
            "bisection_tol": config.bisection_tol,
            "bisection_max": config.bisection_max,
            "rtol": transport.rel_tol,
            "atol": transport.abs_tol,
            "checkpoints": transport.checkpoints,
            "oracle": transport.oracle,
        },
        "seconds": elapsed,
    }
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    return summary


def run_fit(args):
    dataset, design, model, transport = _prepare(args)
    opts = MleOptions(transport=transport)
    full = mle_full(dataset, design, model, opts)
    null = mle_null(dataset, design, model, opts)
    result = {
        "model": model.name,
        "n": dataset.n,
        "d": dataset.d,
        "names": list(dataset.names),
    }
    for key, res in (("full", full), ("null", null)):
        entry = {"theta": res.theta_hat.tolist(), **_mle_summary(res)}
        if dataset.scaling is not None:
            entry["theta_raw"] = theta_to_raw(res.theta_hat, dataset.scaling).tolist()
        result[key] = entry
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "fit.json", "w", encoding="utf-8") as fh:
        json.dump(result, fh, indent=2)
    return result


def run_simulate(args):
    if args.n < 2 or args.d < 1 or args.seed < 0:
        raise UsageError("need n >= 2, d >= 1 and a non-negative seed")
    try:
        dataset = simulate(args.n, args.d, args.seed, correlated=args.correlated)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_table(dataset, args.out)
    return {"n": dataset.n, "d": dataset.d, "out": args.out}


COMMANDS = {"path": run_path, "fit": run_fit, "simulate": run_simulate}


def _fail(kind, exc, code):
    json.dump({"error": kind, "type": type(exc).__name__, "message": str(exc)}, sys.stderr)
    sys.stderr.write("\n")
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("usage", exc, 2)
    except (InputError, OSError) as exc:
        return _fail("input", exc, 2)
    except NumericalError as exc:
        return _fail("numerical", exc, 1)
    return 0


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
