#!/usr/bin/env python3
"""Reproduce the error-vs-model-size comparison tables.

Writes one convergence CSV per study function under results/convergence/:
a piecewise-smooth function with a kink, a fast oscillation, and a sharp
sigmoid transition.  Plot error against K per method to get the usual
comparison curves.
"""
import pathlib
import sys

from quadrep.cli import main

CASES = [
    ("heaviside-sine", ["--kmax", "34"]),
    ("sin10pi", ["--kmax", "64", "--methods", "deg0,deg2-greedy"]),
    ("sigmoid60", ["--kmax", "44"]),
]


def run(root: pathlib.Path) -> int:
    for name, extra in CASES:
        out = root / name
        argv = ["convergence", "--fn", name, "--seed", "0", "--out", str(out), *extra]
        print("+ quadrep", " ".join(argv))
        code = main(argv)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    target = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "results/convergence")
    sys.exit(run(target))
