"""plotkit render --spec spec.json: render one figure from experiment CSVs."""

from __future__ import annotations

import argparse
import json
import sys

from .render import EmptyInputError, SchemaError, render


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="plotkit")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render")
    p.add_argument("--spec", required=True)
    args = ap.parse_args(argv)
    with open(args.spec) as fh:
        spec = json.load(fh)
    try:
        out = render(spec)
    except SchemaError as exc:
        print(f"schema mismatch: {exc}", file=sys.stderr)
        return 2
    except EmptyInputError as exc:
        print(f"empty input: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
