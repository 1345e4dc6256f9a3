"""Command-line entry point.

Exit codes: 0 success, 2 precondition or configuration error, 3 numeric
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from dataclasses import asdict

from lssbounds import harness, mimo, mmse
from lssbounds.concentration import confidence_interval
from lssbounds.ensembles import EnsembleConfig, MeasureSpec
from lssbounds.errors import NumericError, PreconditionError

EXIT_OK, EXIT_PRECONDITION, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

MEASURE_CHOICES = ("gaussian", "rademacher", "uniform", "subexp", "powerlaw")


def measure_from_name(name: str, lam: float = 4.0) -> MeasureSpec:
    if name == "gaussian":
        return MeasureSpec.log_sobolev(1.0)
    if name == "rademacher":
        return MeasureSpec.bounded(1.0, "rademacher")
    if name == "uniform":
        return MeasureSpec.bounded(math.sqrt(3.0), "uniform")
    if name == "subexp":
        return MeasureSpec.sub_exponential()
    if name == "powerlaw":
        return MeasureSpec.power_law(lam)
    raise PreconditionError(f"unknown measure {name!r}")


def parse_params(text: str) -> dict:
    out = {}
    for item in filter(None, (t.strip() for t in text.split(","))):
        key, sep, val = item.partition("=")
        if not sep:
            raise PreconditionError(f"expected key=value, got {item!r}")
        out[key.strip()] = float(val)
    if "kappa" in out:
        out["kappa"] = int(out["kappa"])
    return out


def _emit(record: dict, fmt: str, out=None):
    out = out or sys.stdout
    if fmt == "json":
        out.write(json.dumps(record, indent=2) + "\n")
    else:
        out.write(",".join(record) + "\n")
        out.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in record.values()) + "\n")


def cmd_rfunc(args):
    log_r = mimo.r_function(args.eps, args.n, args.m)
    r = math.exp(log_r) if log_r < 709 else math.inf
    _emit({"eps": args.eps, "n": args.n, "m": args.m, "log_r": log_r, "r": r}, args.format)


def cmd_bound_mi(args):
    n_r = args.nr
    n_t = max(int(round(args.alpha * n_r)), 1)
    iv = harness.mi_band(measure_from_name(args.measure, args.lam), n_t, n_r, args.snr,
                         args.alpha0, args.beta, args.high_snr)
    rec = {"n_t": n_t, "n_r": n_r, **asdict(iv)}
    _emit(rec, args.format)


def cmd_bound_mmse(args):
    measure = measure_from_name(args.measure, args.lam)
    if args.measure == "gaussian":
        beta = args.beta if args.beta is not None else harness.default_beta("mmse_lsi", args.alpha0)
        iv = mmse.corollary2_interval(args.n, args.p, args.snr, beta)
    else:
        iv = harness.nmmse_band(measure, args.n, args.p, args.snr, args.alpha0, args.beta,
                                trials=args.trials, seed=args.seed or 0)
    _emit(asdict(iv), args.format)


def cmd_ci(args):
    params = parse_params(args.params)
    if args.n is not None:
        n = args.n
    elif "n" in params:
        n = int(params.pop("n"))
    else:
        raise PreconditionError("ci needs n (via --n or n= in --params)")
    m = args.m if args.m is not None else (int(params.pop("m")) if "m" in params else None)
    if "lambda" in params:
        params["lam"] = params.pop("lambda")
    res = confidence_interval(args.f0, args.measure, params, args.alpha0, n, m)
    _emit(asdict(res), args.format)


def load_experiment(path: str, seed=None) -> harness.ExperimentConfig:
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    if "experiment" not in cp or "ensemble" not in cp:
        raise PreconditionError("config needs [experiment] and [ensemble] sections")
    ex = cp["experiment"]
    ens = EnsembleConfig.from_mapping(cp["ensemble"])
    beta = ex.get("beta")
    return harness.ExperimentConfig(
        metric=ex.get("metric", "mutual_info"), ensemble=ens, trials=ex.getint("trials", 1000),
        snr=ex.getfloat("snr", 1.0), eps=ex.getfloat("eps", 1.0), alpha0=ex.getfloat("alpha0", 0.05),
        beta=None if beta in (None, "", "auto") else float(beta),
        seed=seed if seed is not None else ex.getint("seed", ens.seed),
        output_path=ex.get("output_path"))


def cmd_simulate(args):
    cfg = load_experiment(args.config, args.seed)
    out = args.out or cfg.output_path
    rep = harness.simulate(cfg, jobs=args.jobs)
    if out:
        harness.emit_report(rep, out, args.format)
    else:
        sys.stdout.write(harness.format_report(rep, args.format))


def cmd_fig1(args):
    nr = [int(x) for x in args.nr.split(",")] if args.nr else [8, 16, 32, 64]
    rows = harness.reproduce_fig1(args.case, nr, args.trials, seed=args.seed or 0,
                                  center=args.center, jobs=args.jobs)
    if args.out:
        harness.emit_report(rows, args.out, args.format)
    else:
        sys.stdout.write(harness.format_report(rows, args.format))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="lssbounds", parents=[common],
                                description="Confidence intervals for linear spectral statistics.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("rfunc", parents=[common], help="log of the determinant expectation R(eps, n, m)")
    r.add_argument("--eps", type=float, required=True)
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--m", type=int, required=True)
    r.set_defaults(func=cmd_rfunc)

    b = sub.add_parser("bound", help="theoretical intervals")
    bsub = b.add_subparsers(dest="target", required=True)
    mi = bsub.add_parser("mi", parents=[common], help="mutual information per receive antenna")
    mi.add_argument("--alpha", type=float, required=True)
    mi.add_argument("--snr", type=float, required=True)
    mi.add_argument("--nr", type=int, required=True)
    mi.add_argument("--measure", choices=MEASURE_CHOICES, default="gaussian")
    mi.add_argument("--lam", type=float, default=4.0, help="power-law exponent")
    mi.add_argument("--alpha0", type=float, default=0.05)
    mi.add_argument("--beta", type=float)
    mi.add_argument("--high-snr", action="store_true")
    mi.set_defaults(func=cmd_bound_mi)
    mm = bsub.add_parser("mmse", parents=[common], help="normalised MMSE")
    mm.add_argument("--n", type=int, required=True)
    mm.add_argument("--p", type=int, required=True)
    mm.add_argument("--snr", type=float, required=True)
    mm.add_argument("--measure", choices=MEASURE_CHOICES, default="gaussian")
    mm.add_argument("--lam", type=float, default=4.0)
    mm.add_argument("--alpha0", type=float, default=0.05)
    mm.add_argument("--beta", type=float)
    mm.add_argument("--trials", type=int, default=200)
    mm.set_defaults(func=cmd_bound_mmse)

    c = sub.add_parser("ci", parents=[common], help="confidence interval around one observation")
    c.add_argument("--f0", type=float, required=True)
    c.add_argument("--measure", choices=("bounded", "lsi", "subexp", "powerlaw"), required=True)
    c.add_argument("--params", default="", help="comma-separated key=value, e.g. D=1,kappa=1")
    c.add_argument("--alpha0", type=float, default=0.05)
    c.add_argument("--n", type=int)
    c.add_argument("--m", type=int)
    c.set_defaults(func=cmd_ci)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo coverage run from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fig1", parents=[common], help="reproduce the Gaussian mutual-information figure")
    f.add_argument("--case", choices=sorted(harness.FIG1_CASES), required=True)
    f.add_argument("--trials", type=int, default=3000)
    f.add_argument("--out")
    f.add_argument("--nr", help="comma-separated receive-antenna counts")
    f.add_argument("--center", choices=("empirical", "theorem"), default="empirical")
    f.set_defaults(func=cmd_fig1)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for key, default in (("seed", None), ("format", "csv"), ("jobs", 1)):
        if not hasattr(args, key):
            setattr(args, key, default)
    try:
        args.func(args)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (NumericError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
