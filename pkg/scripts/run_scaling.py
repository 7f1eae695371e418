#!/usr/bin/env python3
"""Size-scaling study of the requantization error (resonant f=5, j=5..15),
into out/scaling/.  Pass --j-list "5 6 7" to shrink the sweep."""

import sys

from dicke_bands.cli import main

if __name__ == "__main__":
    sys.exit(main(["scaling", "--case", "b", "--outdir", "out/scaling", *sys.argv[1:]]))
