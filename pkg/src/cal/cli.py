"""Command-line front end.

    cal alpha|risk|rob|levy|pc|poison|verify --config FILE [--seed U64]
        [--out DIR] [--dry-run]

Exit codes: 0 success, 1 check failure, 2 usage or configuration error.
The CAL_OUT_DIR environment variable supplies the default output
directory when neither --out nor the config names one.
"""

from __future__ import annotations

import argparse
import sys

from .errors import CalError, ConfigError
from .harness import VERSION, load_config, resolve_config, run

_KIND_BY_COMMAND = {
    "alpha": "alpha",
    "risk": "evasion",
    "rob": "robustness",
    "levy": "levy",
    "pc": "pc",
    "poison": "poison",
    "verify": "verify",
}

_HELP = {
    "alpha": "concentration profiles over a radius grid",
    "risk": "adversarial risk curves for an error region",
    "rob": "target-coverage robustness values",
    "levy": "closed-form attack bounds for a concentration family",
    "pc": "prediction-change risk, robustness, and certificates",
    "poison": "training-set attacks, confidence, and chosen-instance error",
    "verify": "self-verification suites against exhaustive oracles",
}


def _u64(text: str) -> int:
    try:
        value = int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from e
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cal",
        description="concentration-of-measure robustness calculators",
    )
    parser.add_argument("--version", action="version", version=f"cal {VERSION}")
    commands = parser.add_subparsers(dest="command", required=True)
    for command, kind in _KIND_BY_COMMAND.items():
        sub = commands.add_parser(command, help=_HELP[command])
        sub.add_argument(
            "--config",
            required=command != "verify",
            help="JSON experiment configuration"
            + (" (optional: defaults to all suites)" if command == "verify" else ""),
        )
        sub.add_argument("--seed", type=_u64, default=None, help="64-bit stream seed")
        sub.add_argument("--out", default=None, help="output directory")
        sub.add_argument(
            "--dry-run",
            action="store_true",
            help="print the resolved plan without computing",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    kind = _KIND_BY_COMMAND[args.command]
    try:
        data = load_config(args.config) if args.config else {"kind": "verify"}
        if data.get("kind") != kind:
            raise ConfigError(
                f"the {args.command} command needs a config of kind {kind!r},"
                f" got {data.get('kind')!r}"
            )
        cfg = resolve_config(data, seed=args.seed, out_dir=args.out)
        report = run(cfg, dry_run=args.dry_run)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except CalError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    for line in report.summary:
        print(line)
    if not args.dry_run:
        print(f"wrote {len(report.files)} files to {report.out_dir}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
