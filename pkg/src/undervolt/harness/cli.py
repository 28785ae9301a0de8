"""Command-line entry point.

    undervolt <command> [--config FILE] [--<dotted.field> VALUE ...]

Commands: golden, sweep, tune, select, variation, compare. Exit codes:
0 success, 1 configuration error, 2 data error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys

from undervolt.harness import experiments
from undervolt.harness.config import LEAVES, build_config
from undervolt.harness.errors import ConfigError, DataError, InvariantError

log = logging.getLogger("undervolt")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="undervolt", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in experiments.COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or name).strip().split("\n")[0])
        p.add_argument("--config", help="JSON config file")
        group = p.add_argument_group("config overrides")
        for key in LEAVES:
            group.add_argument(f"--{key}", dest=f"override:{key}", metavar="VALUE", default=None)
    return parser


def _summary(outcome) -> str:
    doc = outcome.report
    if outcome.command == "golden":
        return f"accuracy {doc['run']['aggregate']['accuracy']:.4f} (oracle {doc['oracle_accuracy']:.4f})"
    if outcome.command == "select":
        s = doc["selected"]
        return (
            f"p_total={s['p_total']:g} r*={s['r_star']} test accuracy {s['test_accuracy']:.4f} "
            f"(golden {s['test_golden_accuracy']:.4f}) savings {s['test_savings']:.4f}"
        )
    if outcome.command == "variation":
        s = doc["summary"]
        return f"mean savings {s['mean_savings']:.4f} over {s['chips']} chips (nominal {s['nominal_savings']:.4f})"
    if outcome.command == "compare":
        s = doc["summary"]
        return f"B over A {s['savings_B_over_A']:.4f}, D over C {s['savings_D_over_C']:.4f}"
    return f"{len(doc.get('runs', []))} runs"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {
        k.split(":", 1)[1]: v for k, v in vars(args).items() if k.startswith("override:") and v is not None
    }
    try:
        cfg = build_config(args.config, overrides)
        outcome = experiments.run_experiment(args.command, cfg)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return ConfigError.exit_code
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DataError.exit_code
    except InvariantError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return InvariantError.exit_code
    print(f"{args.command}: {_summary(outcome)} -> {cfg.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
