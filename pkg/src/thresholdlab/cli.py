"""Command line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
import argparse
import sys

import numpy as np

from .config import MODEL_KINDS, load_config
from .errors import ConfigError, NumericalFailureError, QuadratureAccuracyError, ThresholdLabError
from .transverse import build_oscillator_spectrum, build_strip_spectrum, group_thresholds

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _eps_list(text):
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def build_parser():
    ap = argparse.ArgumentParser(prog="thresholdlab", description="Eigenvalues and resonances "
                                 "emerging from waveguide thresholds under small perturbations.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
    run.add_argument("--only", choices=("asymptotics", "direct"))
    run.add_argument("--eps-override", metavar="LIST", type=_eps_list,
                     help="comma-separated epsilon values replacing the sweep")
    modes = sub.add_parser("modes", help="print the transverse spectrum of a model")
    modes.add_argument("model", choices=[k for k in MODEL_KINDS if k != "manufactured"])
    modes.add_argument("-m", type=int, default=8, help="number of modes")
    chk = sub.add_parser("check", help="validate a config without running it")
    chk.add_argument("config")
    return ap


def _cmd_modes(args):
    if args.m < 1:
        print("error: -m must be positive", file=sys.stderr)
        return EXIT_CONFIG
    sp = (build_strip_spectrum if args.model == "strip" else build_oscillator_spectrum)(args.m)
    print("index  eigenvalue  group")
    for g in group_thresholds(sp):
        for j in g.indices:
            print(f"{j:5d}  {sp.eigenvalue(j):10.6g}  {g.start}")
    return EXIT_OK


def _cmd_check(args):
    cfg = load_config(args.config)
    g = cfg.group
    print(f"{args.config}: ok ({cfg.model}, threshold {g.value:g} of multiplicity "
          f"{g.multiplicity}, {len(cfg.eps)} eps values)")
    return EXIT_OK


def _cmd_run(args):
    from .report import emit_outputs, run_experiment

    cfg = load_config(args.config)
    if args.eps_override is not None:
        cfg = cfg.with_eps(args.eps_override)
    if args.only == "asymptotics":
        cfg = cfg.with_pipelines(True, False)
    elif args.only == "direct":
        cfg = cfg.with_pipelines(False, True)
    if args.out:
        cfg = cfg.with_out_dir(args.out)
    with np.errstate(all="ignore"):
        result = run_experiment(cfg)
    try:
        paths = emit_outputs(result, cfg)
    except OSError as exc:
        print(f"error: cannot write {exc.filename or cfg.out_dir}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    for p in paths:
        print(p)
    for r in result.rows:
        if r.failed:
            print(f"eps={r.eps!r} tau={r.tau:+d}: direct solve failed: {r.message}", file=sys.stderr)
    return EXIT_NUMERICAL if result.failures else EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "modes": _cmd_modes, "check": _cmd_check}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailureError, QuadratureAccuracyError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ThresholdLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
