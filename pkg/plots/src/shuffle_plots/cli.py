"""Command line front door.

    shuffle-plots --spec figure.json
    shuffle-plots locus   --spectra spectra.json --out locus.png
    shuffle-plots decay   --moment moment.csv --out decay.png
    shuffle-plots curves  --lowerbound lb.csv [--tv tv.csv] [--n N] --out c.png
    shuffle-plots marking --epochs epochs.csv [--n N] --out m.png

Exit codes: 0 success, 1 schema/spec problem, 2 i/o or rendering failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .figures import FigureResult, FigureSpec, SchemaError, plot

_INPUT_FLAGS = {
    "locus": ["spectra"],
    "decay": ["moment"],
    "curves": ["lowerbound", "tv"],
    "marking": ["epochs"],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shuffle-plots",
        description="render figures from shuffle-spectra artifacts")
    parser.add_argument("--spec", help="JSON figure spec "
                        "{kind, inputs, output, options}")
    sub = parser.add_subparsers(dest="kind")
    for kind, inputs in _INPUT_FLAGS.items():
        p = sub.add_parser(kind)
        for name in inputs:
            p.add_argument(f"--{name}", help=f"{name} input file")
        p.add_argument("--out", required=True, help="output image (png/svg)")
        p.add_argument("--n", type=int, default=None,
                       help="deck size (axis scaling / guides)")
        p.add_argument("--title", default=None)
        if kind == "marking":
            p.add_argument("--max-runs", type=int, default=30)
        if kind == "decay":
            p.add_argument("--schema", choices=["moment", "lowerbound"],
                           default="moment")
    return parser


def _spec_from_args(args) -> FigureSpec:
    inputs = {name: getattr(args, name)
              for name in _INPUT_FLAGS[args.kind]
              if getattr(args, name, None)}
    options = {}
    for key in ("n", "title", "max_runs", "schema"):
        val = getattr(args, key, None)
        if val is not None:
            options[key] = val
    return FigureSpec(kind=args.kind, inputs=inputs, output=args.out,
                      options=options)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.spec:
            with open(args.spec) as fh:
                spec = FigureSpec.from_dict(json.load(fh))
        elif args.kind:
            spec = _spec_from_args(args)
        else:
            print("nothing to do: pass --spec or a figure kind",
                  file=sys.stderr)
            return 1
        result: FigureResult = plot(spec)
    except (SchemaError, json.JSONDecodeError) as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 2
    print(json.dumps({"output": result.output, "kind": result.kind,
                      "markers": result.markers, "series": result.series,
                      **result.notes}))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
