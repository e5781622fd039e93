"""Deletion-based (group) MUS extraction over pysat.

Usage::

    python -m noshow.musrun [--seed S] [--solver cadical195] FILE

For GCNF input the result is a minimal set of groups (group 0 is always
included and never reported); for plain CNF every clause is its own group,
numbered from 1 in file order.  Output follows MUSer2: ``s UNSATISFIABLE``
and a ``v`` line of member ids, exit code 20.  A satisfiable input prints
``s SATISFIABLE`` and exits 10.
"""

from __future__ import annotations

import argparse
import random
import sys
import time

import numpy as np

from .dimacs import clause_bounds, iter_blocks, read_header


def load_grouped(solver, path) -> list:
    """Add clauses guarded by one selector per group; returns the sorted group ids."""
    head = read_header(path)
    top = head.n_vars
    selector: dict = {}
    ordinal = 0
    for lits, groups in iter_blocks(path, block_bytes=1 << 22):
        flat = lits.tolist()
        starts, ends = clause_bounds(lits)
        if groups is None:
            groups = np.arange(ordinal + 1, ordinal + len(starts) + 1)
        ordinal += len(starts)
        for g, s, e in zip(groups.tolist(), starts.tolist(), ends.tolist()):
            if g == 0:
                solver.add_clause(flat[s:e])
                continue
            sel = selector.get(g)
            if sel is None:
                top += 1
                sel = selector[g] = top
            solver.add_clause(flat[s:e] + [-sel])
    return sorted(selector), selector


def shrink(solver, groups: list, selector: dict, rng: random.Random | None) -> list | None:
    """Minimal unsatisfiable subset of ``groups``; None when all are satisfiable."""
    sel_of = selector
    grp_of = {v: g for g, v in sel_of.items()}
    if solver.solve(assumptions=[sel_of[g] for g in groups]):
        return None
    core = {grp_of[v] for v in solver.get_core() if v in grp_of}
    candidates = sorted(core)
    if rng is not None:
        rng.shuffle(candidates)
    needed: set = set()
    for g in candidates:
        if g not in core:
            continue
        trial = [sel_of[h] for h in sorted(core - {g})]
        if solver.solve(assumptions=trial):
            needed.add(g)
        else:
            refined = {grp_of[v] for v in solver.get_core() if v in grp_of}
            core = refined | (needed & core)
    return sorted(core)


def main(argv=None) -> int:
    from pysat.solvers import Solver

    ap = argparse.ArgumentParser(prog="noshow-mus", description=__doc__.split("\n\n")[0])
    ap.add_argument("input")
    ap.add_argument("--solver", default="cadical195")
    ap.add_argument("--seed", type=int, default=None, help="shuffle the deletion order")
    args = ap.parse_args(argv)
    t0 = time.time()
    with Solver(name=args.solver) as s:
        groups, selector = load_grouped(s, args.input)
        rng = random.Random(args.seed) if args.seed is not None else None
        core = shrink(s, groups, selector, rng)
    print(f"c {len(groups)} groups, {time.time() - t0:.1f}s")
    if core is None:
        print("s SATISFIABLE")
        return 10
    print("s UNSATISFIABLE")
    print("v " + " ".join(map(str, core)) + " 0")
    return 20


if __name__ == "__main__":
    sys.exit(main())
