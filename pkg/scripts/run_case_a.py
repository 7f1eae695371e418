#!/usr/bin/env python3
"""Off-resonant case (omega=1, omega0=5, f=3, j=15): spectrum, Peres/NPC data,
requantization comparison and harmonic baseline, into out/case_a/."""

import sys

from dicke_bands.cli import main

if __name__ == "__main__":
    sys.exit(
        main(["diag", "--case", "a", "--outdir", "out/case_a"])
        or main(["peres", "--case", "a", "--outdir", "out/case_a"])
        or main(["requant", "--case", "a", "--outdir", "out/case_a"])
        or main(["harmonic", "--case", "a", "--outdir", "out/case_a"])
    )
