"""Command line front door.

    shuffle-spectra <kind> [--config FILE] [--out DIR] [--seed U64]
                    [--threads K] [--check] [per-kind flags...]
    shuffle-spectra list

Per-kind flags override config-file values.  Exit codes: 0 success,
1 invalid config, 2 runtime failure, 3 check failure with --check.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import EXPERIMENTS, ConfigError, list_experiments, run_experiment

_FLAG_TYPES = {"int": int, "number": float, "string": str, "time": str}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shuffle-spectra",
        description="simulate and verify semi-random transposition shuffles")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="describe available experiment kinds")

    for name in sorted(EXPERIMENTS):
        kind = EXPERIMENTS[name]
        p = sub.add_parser(name, help=kind.description)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="master seed (u64)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--check", action="store_true",
                       help="fail (exit 3) if built-in checks do not pass")
        for f in kind.schema:
            flag = "--" + f.name.replace("_", "-")
            if f.type == "bool":
                p.add_argument(flag, action="store_true", default=None,
                               dest=f.name)
            elif f.type in ("times", "list"):
                p.add_argument(flag, nargs="+", default=None, dest=f.name)
            else:
                p.add_argument(flag, type=_FLAG_TYPES.get(f.type, str),
                               default=None, dest=f.name)
    return parser


def _coerce(value: str):
    """Best-effort numeric coercion for time-expression flags."""
    if isinstance(value, str):
        try:
            return int(value)
        except ValueError:
            try:
                return float(value)
            except ValueError:
                return value
    return value


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print(json.dumps(list_experiments(), indent=2, sort_keys=True))
        return 0

    config: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"cannot read config {args.config}: {exc}", file=sys.stderr)
            return 1
    config["experiment"] = args.command
    for f in EXPERIMENTS[args.command].schema:
        val = getattr(args, f.name, None)
        if val is not None:
            if f.type == "time":
                val = _coerce(val)
            elif f.type in ("times", "list"):
                val = [_coerce(v) for v in val]
            config[f.name] = val

    out_dir = args.out or f"out-{args.command}"
    try:
        manifest = run_experiment(config, out_dir, seed=args.seed,
                                  threads=args.threads, check=args.check)
    except ConfigError as exc:
        print("invalid config:", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2

    print(json.dumps({"out": str(out_dir),
                      "outputs": manifest["outputs"],
                      "config_hash": manifest["config_hash"]}, indent=2))
    if args.check and not manifest["check"]["passed"]:
        for failure in manifest["check"]["failures"]:
            print(f"check failed: {failure}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
