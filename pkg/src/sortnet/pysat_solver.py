"""Minimal DIMACS front end over pysat, speaking the SAT-competition output
protocol (``s`` / ``v`` lines, exit 10 for SAT and 20 for UNSAT).

Used as the default external solver when no binary is configured.
"""
from __future__ import annotations

import argparse
import sys


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="sortnet-pysat")
    ap.add_argument("cnf")
    ap.add_argument("--solver", default="cadical195")
    args = ap.parse_args(argv)
    try:
        from pysat.formula import CNF
        from pysat.solvers import Solver
    except ImportError:
        print("c python-sat is not installed", file=sys.stderr)
        return 1
    try:
        cnf = CNF(from_file=args.cnf)
    except (OSError, ValueError) as exc:
        print(f"c cannot read {args.cnf}: {exc}", file=sys.stderr)
        return 1
    with Solver(name=args.solver, bootstrap_with=cnf.clauses) as solver:
        sat = solver.solve()
        model = solver.get_model() if sat else None
    if not sat:
        print("s UNSATISFIABLE")
        return 20
    # variables absent from every clause are unconstrained; report them false
    assigned = {abs(l): l for l in model}
    lits = [assigned.get(v, -v) for v in range(1, cnf.nv + 1)]
    print("s SATISFIABLE")
    for start in range(0, len(lits), 20):
        print("v " + " ".join(map(str, lits[start:start + 20])))
    print("v 0")
    return 10


if __name__ == "__main__":
    sys.exit(main())
