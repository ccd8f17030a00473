#!/usr/bin/env python3
"""Full 1D convergence study for the linear forcing (the first benchmark table)."""
import sys

from fjko.cli import main

if __name__ == "__main__":
    sys.exit(
        main(
            [
                "study",
                "--forcing", "linear",
                "--alpha", "0.6,0.8,1.0",
                "--steps", "20,40,80,160,320",
                "--ref-steps", "1280",
                "--grid-size", "128",
                "--workers", "2",
                "--out", "study_1d_linear.csv",
            ]
        )
    )
