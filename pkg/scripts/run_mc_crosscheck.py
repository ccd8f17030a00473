#!/usr/bin/env python3
"""Stochastic cross-validation: subordinator transform check and endpoint
histogram against the deterministic solve."""
import sys

from fjko.cli import main

if __name__ == "__main__":
    sys.exit(
        main(
            [
                "mc-validate",
                "--forcing", "linear",
                "--alpha", "0.8",
                "--steps", "320",
                "--grid-size", "32",
                "--paths", "200000",
                "--seed", "0",
                "--out", "mc_crosscheck.csv",
            ]
        )
    )
