#!/usr/bin/env python3
"""Render the three standard figures from previously generated CSV runs.

Expects out/case_a, out/case_b (peres + semiclassical data) and out/scaling;
writes PNG+SVG under out/figures/.  Requires the dicke-plotkit package.
"""

import json
import sys
import tempfile
from pathlib import Path

from plotkit.cli import main

SPECS = [
    {
        "kind": "peres",
        "inputs": {"peres_csv": "out/case_a/peres.csv"},
        "output": "out/figures/peres_case_a",
        "title": "invariant lattice, off-resonant case",
    },
    {
        "kind": "overlay",
        "inputs": {
            "peres_csv": "out/case_a/peres.csv",
            "semiclassical_csv": "out/case_a/semiclassical.csv",
        },
        "output": "out/figures/boson_number_case_a",
    },
    {
        "kind": "scaling",
        "inputs": {
            "scaling_csv": "out/scaling/scaling.csv",
            "fit_csv": "out/scaling/scaling_fit.csv",
        },
        "output": "out/figures/scaling",
    },
]

if __name__ == "__main__":
    with tempfile.TemporaryDirectory() as tmp:
        paths = []
        for i, spec in enumerate(SPECS):
            p = Path(tmp) / f"spec{i}.json"
            p.write_text(json.dumps(spec))
            paths.append(str(p))
        sys.exit(main(["render", *paths]))
