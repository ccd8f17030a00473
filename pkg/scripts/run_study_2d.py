#!/usr/bin/env python3
"""Full 2D convergence study for the additive forcing (the third benchmark table)."""
import sys

from fjko.cli import main

if __name__ == "__main__":
    sys.exit(
        main(
            [
                "study",
                "--forcing", "sum-2d",
                "--alpha", "0.6,0.8,1.0",
                "--steps", "20,40,80,160,320",
                "--ref-steps", "1280",
                "--grid-size", "32",
                "--workers", "2",
                "--out", "study_2d.csv",
            ]
        )
    )
