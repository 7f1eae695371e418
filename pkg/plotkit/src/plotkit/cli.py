"""plotkit: render figures from dicke-bands CSV artifacts.

Usage: plotkit render SPEC.json [SPEC2.json ...]
"""

from __future__ import annotations

import argparse
import sys

from .figspec import load_spec
from .render import render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="plotkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render")
    p.add_argument("specs", nargs="+", help="figure-spec JSON files")
    args = parser.parse_args(argv)
    for spec_path in args.specs:
        result = render(load_spec(spec_path))
        print(f"{spec_path}: wrote {', '.join(result.paths)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
