#!/usr/bin/env python3
"""Solve a WCNF file with PySAT's RC2 and print s/o/v lines.

Usage: maxsat_rc2.py INSTANCE.wcnf
"""
import sys

from pysat.examples.rc2 import RC2
from pysat.formula import WCNF


def main(argv):
    if len(argv) != 2:
        print(__doc__.strip(), file=sys.stderr)
        return 1
    wcnf = WCNF(from_file=argv[1])
    n_vars = wcnf.nv
    with open(argv[1]) as f:
        for line in f:
            if line.startswith("p "):
                n_vars = max(n_vars, int(line.split()[2]))
                break
    with RC2(wcnf) as rc2:
        model = rc2.compute()
        if model is None:
            print("s UNSATISFIABLE")
            return 0
        print(f"o {rc2.cost}")
        print("s OPTIMUM FOUND")
        seen = {abs(lit) for lit in model}
        model = list(model) + [-v for v in range(1, n_vars + 1) if v not in seen]
        print("v " + " ".join(str(lit) for lit in model) + " 0")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
