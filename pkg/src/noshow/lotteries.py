"""Set and lottery comparisons, lottery tables and the support proposition.

Lotteries are exact: ``Lottery`` holds Fractions, ``LotteryTable`` stores
integer numerators over a per-row denominator so whole indices compare
with integer arithmetic.  Table lines look like
``2/3,0/1,1/3,0/1,#3,(1,1,1,-1,1,1)``.
"""

from __future__ import annotations

import gzip
import math
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .rules import Report, RuleTable, TableError, positions, verify_optimistic, verify_pessimistic
from .tournaments import TournamentIndex, pack, unpack
from .voting import ALL_RANKINGS, LABELS, Ranking, condorcet_winner_many

P_PREFERRED = "p-preferred"
Q_PREFERRED = "q-preferred"
EQUAL = "equal"
INCOMPARABLE = "incomparable"

_LINE = re.compile(
    r"(\d+)/(\d+),(\d+)/(\d+),(\d+)/(\d+),(\d+)/(\d+),#(\d+),"
    r"\((-?\d+),(-?\d+),(-?\d+),(-?\d+),(-?\d+),(-?\d+)\)"
)


class LotteryError(ValueError):
    pass


@dataclass(frozen=True)
class Lottery:
    probs: tuple

    def __post_init__(self) -> None:
        probs = tuple(Fraction(p) for p in self.probs)
        if any(p < 0 for p in probs):
            raise LotteryError("negative probability")
        if sum(probs) != 1:
            raise LotteryError(f"probabilities sum to {sum(probs)}, not 1")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def degenerate(cls, x: int, m: int = 4) -> "Lottery":
        return cls(tuple(Fraction(int(i == x)) for i in range(m)))

    @classmethod
    def uniform(cls, m: int = 4) -> "Lottery":
        return cls((Fraction(1, m),) * m)

    @classmethod
    def parse(cls, text: str) -> "Lottery":
        """``"2/3 a + 1/3 c"`` or ``"2/3,0,1/3,0"``."""
        text = text.strip()
        if "," in text and "+" not in text:
            return cls(tuple(Fraction(p) for p in text.split(",")))
        probs = [Fraction(0)] * 4
        for term in text.split("+"):
            coef, alt = term.split()
            probs[LABELS.index(alt)] += Fraction(coef)
        return cls(tuple(probs))

    def __getitem__(self, x: int) -> Fraction:
        return self.probs[x]

    def __str__(self) -> str:
        return " + ".join(f"{p} {LABELS[x]}" for x, p in enumerate(self.probs) if p)


def support(p: Lottery) -> frozenset:
    return frozenset(x for x, v in enumerate(p.probs) if v > 0)


def sd_compare(p: Lottery, q: Lottery, r: Ranking) -> str:
    """Stochastic-dominance comparison of ``p`` and ``q`` for a voter with ranking ``r``."""
    cp = cq = Fraction(0)
    p_ge = q_ge = True
    for x in r:
        cp += p[x]
        cq += q[x]
        p_ge &= cp >= cq
        q_ge &= cq >= cp
    if p_ge and q_ge:
        return EQUAL
    if p_ge:
        return P_PREFERRED
    if q_ge:
        return Q_PREFERRED
    return INCOMPARABLE


def _by_position(pos_u: int, pos_v: int) -> str:
    if pos_u == pos_v:
        return EQUAL
    return P_PREFERRED if pos_u < pos_v else Q_PREFERRED


def optimistic_compare(u: Iterable[int], v: Iterable[int], r: Ranking) -> str:
    """Compare sets by their best member under ``r``."""
    return _by_position(min(r.position(x) for x in u), min(r.position(x) for x in v))


def pessimistic_compare(u: Iterable[int], v: Iterable[int], r: Ranking) -> str:
    """Compare sets by their worst member under ``r``."""
    return _by_position(max(r.position(x) for x in u), max(r.position(x) for x in v))


# --- tables -------------------------------------------------------------------


@dataclass
class LotteryTable:
    """Row ``i``: lottery ``num[i] / den[i]`` at tournament ``keys[i]``."""

    keys: np.ndarray
    voters: np.ndarray
    num: np.ndarray
    den: np.ndarray
    n_max: int = 0

    def __post_init__(self) -> None:
        self.keys = np.asarray(self.keys, dtype=np.int64)
        self.voters = np.asarray(self.voters, dtype=np.int64)
        self.num = np.asarray(self.num, dtype=np.int64).reshape(-1, 4)
        self.den = np.asarray(self.den, dtype=np.int64)
        if (self.num < 0).any() or (self.den <= 0).any():
            raise LotteryError("probabilities must be non-negative with positive denominators")
        if (self.num.sum(axis=1) != self.den).any():
            bad = int(np.flatnonzero(self.num.sum(axis=1) != self.den)[0])
            raise LotteryError(f"row {bad} does not sum to 1")
        if not self.n_max and len(self.voters):
            self.n_max = int(self.voters.max())

    def __len__(self) -> int:
        return len(self.keys)

    def lottery(self, i: int) -> Lottery:
        return Lottery(tuple(Fraction(int(v), int(self.den[i])) for v in self.num[i]))

    @classmethod
    def from_lotteries(cls, keys, voters, lotteries: Sequence[Lottery]) -> "LotteryTable":
        den = [math.lcm(*(p.denominator for p in lot.probs)) for lot in lotteries]
        num = [[int(p * d) for p in lot.probs] for lot, d in zip(lotteries, den)]
        return cls(keys, voters, num, den)

    @classmethod
    def from_rule(cls, table: RuleTable) -> "LotteryTable":
        """Degenerate lotteries on the chosen alternatives of a single-valued table."""
        if table.mode != "single":
            raise TableError("only single-valued tables lift to degenerate lotteries")
        num = np.zeros((len(table), 4), dtype=np.int64)
        num[np.arange(len(table)), table.choice] = 1
        return cls(table.keys, table.voters, num, np.ones(len(table), dtype=np.int64), table.n_max)

    def support_table(self) -> RuleTable:
        masks = ((self.num > 0) * (1 << np.arange(4))).sum(axis=1)
        return RuleTable(self.keys, self.voters, masks, "set", self.n_max)

    def lines(self):
        G = unpack(self.keys)
        for i in range(len(self)):
            yield format_entry(self.lottery(i), int(self.voters[i]), G[i])


def format_entry(lot: Lottery, n: int, vector) -> str:
    probs = ",".join(f"{p.numerator}/{p.denominator}" for p in lot.probs)
    return f"{probs},#{n},(" + ",".join(str(int(v)) for v in vector) + ")"


def parse_entry(line: str, lineno: int = 0) -> tuple:
    m = _LINE.fullmatch(line.strip())
    if m is None:
        raise LotteryError(f"line {lineno}: malformed lottery entry {line.strip()!r}")
    g = [int(x) for x in m.groups()]
    fracs = []
    for k in range(4):
        p, q = g[2 * k], g[2 * k + 1]
        if q == 0 or math.gcd(p, q) != 1 and not (p == 0 and q == 1):
            raise LotteryError(f"line {lineno}: {p}/{q} is not in lowest terms")
        fracs.append(Fraction(p, q))
    return Lottery(tuple(fracs)), g[8], tuple(g[9:])


def write_lottery_table(table: LotteryTable, path) -> None:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "wt") as fh:
        for line in table.lines():
            fh.write(line + "\n")


def read_lottery_table(path) -> LotteryTable:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    lots, ns, vecs = [], [], []
    with opener(path, "rt") as fh:
        for k, line in enumerate(fh, start=1):
            if line.strip():
                lot, n, vec = parse_entry(line, k)
                lots.append(lot)
                ns.append(n)
                vecs.append(vec)
    keys = pack(np.array(vecs, dtype=np.int64).reshape(-1, 6))
    return LotteryTable.from_lotteries(keys, ns, lots)


# --- verification ---------------------------------------------------------------


def _aligned(table: LotteryTable, index: TournamentIndex) -> tuple:
    pos = positions(table.keys, index)
    return table.num[pos], table.den[pos]


# PREFIX[r] selects, for each k = 1..3, the top-k alternatives of ranking r
_PREFIX = np.zeros((24, 3, 4), dtype=np.int64)
for _j, _r in enumerate(ALL_RANKINGS):
    for _k in range(3):
        _PREFIX[_j, _k, list(_r[: _k + 1])] = 1


def verify_sd_participation(table: LotteryTable, index: TournamentIndex, chunk: int = 1 << 15) -> Report:
    """f(t + r) must SD-dominate f(t) for ranking r on every interior edge."""
    num, den = _aligned(table, index)
    interior = int(np.count_nonzero(index.min_voters < index.n_max))
    nodes, details = [], []
    checked = 0
    for lo in range(0, interior, chunk):
        hi = min(lo + chunk, interior)
        succ = index.successor_indices(lo, hi)
        checked += succ.size
        # cumulative mass of each ranking's top-k set: (rows, 24, 3)
        cum_t = np.einsum("jka,ia->ijk", _PREFIX, num[lo:hi])
        cum_s = np.einsum("ijka,ija->ijk", _PREFIX[None], num[succ])
        lhs = cum_s * den[lo:hi, None, None]
        rhs = cum_t * den[succ][:, :, None]
        bad = (lhs < rhs).any(axis=2)
        for i, j in zip(*np.nonzero(bad)):
            nodes.append(lo + int(i))
            details.append(f"ranking={ALL_RANKINGS[j]} succ={int(succ[i, j])}")
    return Report("sd-participation", checked, np.array(nodes, dtype=np.int64), details)


def verify_lottery_condorcet(table: LotteryTable, index: TournamentIndex) -> Report:
    num, den = _aligned(table, index)
    w = condorcet_winner_many(index.vectors)
    has = w >= 0
    bad = has & (num[np.arange(len(index)), np.maximum(w, 0)] != den)
    ids = np.flatnonzero(bad)
    return Report("condorcet", len(index), ids, [f"winner={LABELS[w[i]]} not certain" for i in ids.tolist()])


@dataclass
class PropositionResult:
    status: str  # "pass", "fail" or "vacuous"
    sd: Report
    optimistic: Optional[Report] = None
    pessimistic: Optional[Report] = None

    def lines(self) -> list:
        out = [f"status {self.status}", f"sd-participation violations {self.sd.count}"]
        for rep in (self.optimistic, self.pessimistic):
            if rep is not None:
                out.append(f"{rep.kind} violations {rep.count}")
                out.extend(rep.lines(limit=20))
        return out


def proposition_support_check(table: LotteryTable, index: TournamentIndex) -> PropositionResult:
    """If ``table`` is SD-participating, its support must satisfy both set-valued participations."""
    sd = verify_sd_participation(table, index)
    if not sd.clean:
        return PropositionResult("vacuous", sd)
    supp = table.support_table()
    opt = verify_optimistic(supp, index)
    pess = verify_pessimistic(supp, index)
    return PropositionResult("pass" if opt.clean and pess.clean else "fail", sd, opt, pess)


# --- random tables ---------------------------------------------------------------


def random_lottery(rng: random.Random, m: int = 4, max_den: int = 12) -> Lottery:
    den = rng.randint(1, max_den)
    cuts = sorted(rng.randint(0, den) for _ in range(m - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [den])]
    rng.shuffle(parts)
    return Lottery(tuple(Fraction(p, den) for p in parts))


def mixture_table(rules: Sequence[RuleTable], weights: Sequence[int]) -> LotteryTable:
    """Convex combination of single-valued tables with integer weights.

    SD-participation and Condorcet consistency are preserved because the
    upper-set masses are linear in the weights.
    """
    base = rules[0]
    num = np.zeros((len(base), 4), dtype=np.int64)
    rows = np.arange(len(base))
    for rule, w in zip(rules, weights):
        if not np.array_equal(rule.keys, base.keys):
            raise TableError("mixture components must share the same index order")
        np.add.at(num, (rows, rule.choice), w)
    den = np.full(len(base), int(sum(weights)), dtype=np.int64)
    g = np.gcd.reduce(np.concatenate([num, den[:, None]], axis=1), axis=1)
    return LotteryTable(base.keys, base.voters, num // g[:, None], den // g, base.n_max)


def random_sd_tables(rules: Sequence[RuleTable], count: int, seed: int = 0, max_weight: int = 7):
    """Yield ``count`` random mixtures of participating rules."""
    rng = random.Random(seed)
    for _ in range(count):
        k = rng.randint(1, len(rules))
        chosen = rng.sample(list(rules), k)
        yield mixture_table(chosen, [rng.randint(1, max_weight) for _ in chosen])


def participating_rules(index: TournamentIndex, count: int, seed: int = 0, solver: str = "minisat22") -> list:
    """Distinct Condorcet rules with participation on ``index`` from randomized SAT models."""
    from pysat.solvers import Solver

    from .encoding import EncodingConfig, TournamentSpace, clause_list

    config = EncodingConfig(index.n_max)
    clauses = clause_list(TournamentSpace(index), config)
    n_vars = 4 * len(index)
    rng = random.Random(seed)
    out, seen = [], set()
    with Solver(name=solver, bootstrap_with=clauses) as s:
        for _ in range(count * 4):
            if len(out) >= count:
                break
            s.set_phases([v if rng.random() < 0.5 else -v for v in range(1, n_vars + 1)])
            if not s.solve():
                break
            model = np.array(s.get_model()[:n_vars]) > 0
            choice = model.reshape(-1, 4).argmax(axis=1)
            key = choice.tobytes()
            if key in seen:
                continue
            seen.add(key)
            out.append(RuleTable(index.keys, index.min_voters, choice, "single", index.n_max))
            # block this rule on its non-Condorcet nodes to push the next model elsewhere
            free = np.flatnonzero(condorcet_winner_many(index.vectors) < 0)
            if free.size:
                s.add_clause([-(4 * int(i) + int(choice[i]) + 1) for i in free])
    return out
