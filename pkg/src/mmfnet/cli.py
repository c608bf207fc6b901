"""Command line front end: one subcommand per experiment.

Exit status is 0 on success and the failing error class's ``exit_code``
otherwise (see :mod:`mmfnet.errors`).
"""

import argparse
import json
import sys

from .errors import ConfigError, MmfnetError
from .experiments import EXPERIMENTS, ExperimentConfig, run


def build_parser():
    parser = argparse.ArgumentParser(prog="mmfnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON config file; its 'experiment' field is optional")
        p.add_argument("--seed-override", type=int, help="replace the config's master seed")
        p.add_argument("--out", help="output directory (default: config 'out' or ./runs/<experiment>)")
        p.add_argument("--oracle-medium", action="store_true",
                       help="design against the true medium instead of the fitted one")
    return parser


def config_from_args(args):
    d = {}
    if args.config:
        try:
            with open(args.config) as fh:
                d = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {args.config} not found") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        if d.get("experiment", args.experiment) != args.experiment:
            raise ConfigError(f"config is for {d['experiment']!r}, not {args.experiment!r}")
    d["experiment"] = args.experiment
    d.setdefault("out", f"runs/{args.experiment}")
    if args.seed_override is not None:
        d["seed"] = args.seed_override
    if args.out:
        d["out"] = args.out
    if args.oracle_medium:
        d["oracle_medium"] = True
    return ExperimentConfig.from_dict(d)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        manifest = run(cfg)
    except MmfnetError as exc:
        print(f"mmfnet: error: {exc}", file=sys.stderr)
        return exc.exit_code
    for rec in manifest.records:
        err = "" if rec["F_err"] is None else f" +/- {rec['F_err']:.4f}"
        extra = "" if rec["theta"] is None else f"  theta={rec['theta']:.4f}"
        print(f"{rec['gate']:>10} ch{rec['channel']} {rec['users']:>5}  F={rec['F']:.4f}{err}{extra}")
    print(f"results in {cfg.out} (config {manifest.config_hash})")
    return 0
