"""Command-line SAT solver front end over pysat back ends.

Usage::

    python -m noshow.satrun [--solver kissat404] [--units] FILE.cnf

Reads DIMACS (or GCNF, ignoring groups), prints competition-style output
(``s SATISFIABLE`` plus ``v`` lines, or ``s UNSATISFIABLE``) and exits with
10 / 20.  ``--units`` folds unit clauses into the remaining clauses before
loading, which keeps large instances within memory; it does not change
satisfiability or the models.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from .dimacs import clause_bounds, iter_blocks, read_header


def _unit_assignment(path, n_vars: int) -> np.ndarray:
    """0 unassigned, 1 true, -1 false, from unit clauses only; 2 marks a clash."""
    val = np.zeros(n_vars + 1, dtype=np.int8)
    for lits, _ in iter_blocks(path):
        starts, ends = clause_bounds(lits)
        unit = lits[starts[(ends - starts) == 1]]
        pos, neg = unit[unit > 0], -unit[unit < 0]
        if ((val[pos] == -1).any()) or ((val[neg] == 1).any()) or np.intersect1d(pos, neg).size:
            val[0] = 2
            return val
        val[pos] = 1
        val[neg] = -1
    return val


def load(solver, path, units: bool = False) -> bool:
    """Add every clause to ``solver``; False when an empty clause was derived."""
    head = read_header(path)
    val = _unit_assignment(path, head.n_vars) if units else None
    if val is not None:
        if val[0] == 2:
            return False
        for v in np.flatnonzero(val[1:]) + 1:
            solver.add_clause([int(v) if val[v] > 0 else -int(v)])
    for lits, _ in iter_blocks(path, block_bytes=1 << 22):
        starts, ends = clause_bounds(lits)
        if val is not None:
            sign = np.sign(lits)
            lv = val[np.abs(lits)] * sign  # 1: literal true, -1: false
            sat = np.logical_or.reduceat(lv == 1, starts) if len(starts) else np.empty(0, bool)
            width = ends - starts
            keep_clause = ~sat & (width > 1)
            keep_lit = (lv != -1) & (lits != 0)
            clause_id = np.cumsum(np.concatenate([[0], (lits == 0)[:-1]]))
            keep_lit &= keep_clause[clause_id]
            # clauses reduced to nothing are conflicts
            alive = np.bincount(clause_id[keep_lit], minlength=len(starts))
            if (keep_clause & (alive == 0)).any():
                return False
            flat = lits[keep_lit].tolist()
            sizes = alive[keep_clause].tolist()
            k = 0
            for s in sizes:
                solver.add_clause(flat[k : k + s])
                k += s
        else:
            flat = lits.tolist()
            for s, e in zip(starts.tolist(), ends.tolist()):
                solver.add_clause(flat[s:e])
    return True


def main(argv=None) -> int:
    from pysat.solvers import Solver

    ap = argparse.ArgumentParser(prog="noshow-sat", description=__doc__.split("\n\n")[0])
    ap.add_argument("input")
    ap.add_argument("--solver", default="cadical195")
    ap.add_argument("--units", action="store_true", help="fold unit clauses before loading")
    ap.add_argument("--no-model", action="store_true", help="omit v lines")
    args = ap.parse_args(argv)

    t0 = time.time()
    head = read_header(args.input)
    with Solver(name=args.solver) as s:
        ok = load(s, args.input, units=args.units)
        print(f"c loaded {head.n_clauses} clauses in {time.time() - t0:.1f}s", flush=True)
        if ok:
            ok = s.solve()
        print(f"c solved in {time.time() - t0:.1f}s", flush=True)
        if not ok:
            print("s UNSATISFIABLE")
            return 20
        model = s.get_model() or []
    assigned = np.zeros(head.n_vars + 1, dtype=np.int64)
    for lit in model:
        if abs(lit) <= head.n_vars:
            assigned[abs(lit)] = lit
    missing = np.flatnonzero(assigned[1:] == 0) + 1
    assigned[missing] = -missing  # variables absent from every clause
    print("s SATISFIABLE")
    if not args.no_model:
        out = sys.stdout
        vals = assigned[1:]
        for lo in range(0, len(vals), 20):
            out.write("v " + " ".join(map(str, vals[lo : lo + 20].tolist())) + "\n")
        out.write("v 0\n")
    sys.stdout.flush()
    return 10


if __name__ == "__main__":
    sys.exit(main())
