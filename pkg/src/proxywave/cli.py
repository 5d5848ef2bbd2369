"""Command line: ``proxywave run``, ``proxywave sweep`` and ``proxywave config``."""

import argparse
import json
import logging
import sys

import numpy as np

from . import experiment
from .analytic import SingularModeError
from .evaluator import METHODS
from .skeleton import SCHEMES, VARIANTS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _add_overrides(p):
    p.add_argument("--config", required=True, help="INI experiment file")
    p.add_argument("--method", action="append", choices=METHODS,
                   help="method to run; repeat the flag for several (default: all in the file)")
    p.add_argument("--n-elements", type=int)
    p.add_argument("--x-tol", type=float)
    p.add_argument("--y-tol", type=float, help="applies to every fast_uv method")
    p.add_argument("--variant", choices=VARIANTS, help="applies to every fast_uv method")
    p.add_argument("--scheme", choices=SCHEMES, help="applies to every fast_uv method")
    p.add_argument("--out-dir")
    p.add_argument("--threads", type=int)
    p.add_argument("--repeat", type=int, help="report the minimum time over this many runs")
    p.add_argument("--cache-dir", help="reuse skeletons stored here")


def build_parser():
    parser = argparse.ArgumentParser(prog="proxywave",
                                     description="Proxy-skeleton acceleration of boundary-integral field evaluation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the benchmark and write reports")
    _add_overrides(run)

    sweep = sub.add_parser("sweep", help="rerun over a parameter list")
    _add_overrides(sweep)
    sweep.add_argument("--param", required=True, choices=experiment.SWEEP_PARAMS)
    sweep.add_argument("--values", required=True, help="comma-separated, strictly monotone")
    sweep.add_argument("--output", help="CSV file for the sweep table")

    sub.add_parser("config", help="print the default benchmark configuration")
    return parser


def _config(args):
    cfg = experiment.load_config(args.config)
    return experiment.apply_overrides(cfg, methods=args.method, n_elements=args.n_elements,
                                      x_tol=args.x_tol, y_tol=args.y_tol, variant=args.variant,
                                      scheme=args.scheme, out_dir=args.out_dir, threads=args.threads,
                                      repeat=args.repeat, cache_dir=args.cache_dir)


def _print_summary(summary):
    prob = summary["problem"]
    print(f"N={prob['N']} cells={prob['p_x']} points/cell={prob['m']} series order={prob['series_order']}")
    print(f"{'method':<20}{'eval [s]':>12}{'setup [s]':>12}{'t/t_conv':>10}{'max cell err':>14}"
          f"{'s_x':>6}{'sum s_y':>9}")
    for name, e in summary["methods"].items():
        norm = e["normalized_time_vs_conv"]
        norm = "-" if norm is None else f"{norm:.4f}"
        print(f"{name:<20}{e['elapsed']:>12.4f}{e['setup_elapsed']:>12.4f}{norm:>10}"
              f"{e['max_l2_cell_error']:>14.3e}{e.get('s_x', '-'):>6}{e.get('s_y_total', '-'):>9}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "config":
            sys.stdout.write(experiment.format_config(experiment.ExperimentConfig()))
            return EXIT_OK
        cfg = _config(args)
        if args.command == "run":
            summary, _, _ = experiment.run_experiment(cfg)
            _print_summary(summary)
            print(f"reports written to {cfg.out_dir}")
        else:
            try:
                values = [float(v) for v in args.values.split(",")]
            except ValueError:
                raise experiment.ConfigError(f"--values: cannot parse {args.values!r}") from None
            rows = experiment.convergence_sweep(cfg, args.param, values, args.output)
            print(json.dumps(rows, indent=1))
    except experiment.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularModeError, ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
