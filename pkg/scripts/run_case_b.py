#!/usr/bin/env python3
"""Resonant case (omega=omega0=1, f=5, j=15): spectrum, Peres/NPC data,
requantization comparison and harmonic baseline, into out/case_b/."""

import sys

from dicke_bands.cli import main

if __name__ == "__main__":
    sys.exit(
        main(["diag", "--case", "b", "--outdir", "out/case_b"])
        or main(["peres", "--case", "b", "--outdir", "out/case_b"])
        or main(["requant", "--case", "b", "--outdir", "out/case_b"])
        or main(["harmonic", "--case", "b", "--outdir", "out/case_b"])
    )
