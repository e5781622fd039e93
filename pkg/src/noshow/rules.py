"""Lookup-table voting rules: decoding, serialization, verification, statistics.

A table maps every indexed weighted tournament to a chosen alternative
(single mode) or a non-empty set of alternatives (set mode).  Text lines
look like ``a,#1,(1,1,1,1,1,1)``: choice, minimal inducing voter count,
margin vector.  Set-mode choices concatenate labels (``ac,#3,(...)``).
"""

from __future__ import annotations

import gzip
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .tournaments import TournamentIndex, pack, unpack
from .voting import (
    ALL_RANKINGS,
    LABELS,
    MarginVector,
    condorcet_winner_many,
    kemeny_mask_many,
    maximin_mask_many,
    pareto_mask_many,
    top_cycle_mask_many,
)

_ENTRY = re.compile(r"([a-d]+),#(\d+),\((-?\d+),(-?\d+),(-?\d+),(-?\d+),(-?\d+),(-?\d+)\)")

# POS[r, x]: position of alternative x in ranking r (0 = top)
POS = np.array([[r.index(x) for x in range(4)] for r in ALL_RANKINGS], dtype=np.int64)
_BIG = 99
# BEST[r, mask] / WORST[r, mask]: position of the best / worst member of mask
BEST = np.full((24, 16), _BIG, dtype=np.int64)
WORST = np.full((24, 16), -1, dtype=np.int64)
for _mask in range(1, 16):
    _members = [x for x in range(4) if _mask >> x & 1]
    BEST[:, _mask] = POS[:, _members].min(axis=1)
    WORST[:, _mask] = POS[:, _members].max(axis=1)


class TableError(ValueError):
    pass


class ParseError(TableError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass
class RuleTable:
    """``choice`` is an alternative (single) or a 4-bit mask (set), aligned with ``keys``."""

    keys: np.ndarray
    voters: np.ndarray
    choice: np.ndarray
    mode: str = "single"
    n_max: int = 0

    def __post_init__(self) -> None:
        self.keys = np.asarray(self.keys, dtype=np.int64)
        self.voters = np.asarray(self.voters, dtype=np.int64)
        self.choice = np.asarray(self.choice, dtype=np.int64)
        if self.mode not in ("single", "set"):
            raise TableError(f"unknown mode {self.mode!r}")
        if len(np.unique(self.keys)) != len(self.keys):
            raise TableError("duplicate tournaments in table")
        if self.mode == "single" and ((self.choice < 0) | (self.choice > 3)).any():
            raise TableError("single-mode choices must be alternatives 0..3")
        if self.mode == "set" and ((self.choice < 1) | (self.choice > 15)).any():
            raise TableError("set-mode choices must be non-empty")
        if not self.n_max and len(self.voters):
            self.n_max = int(self.voters.max())

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def masks(self) -> np.ndarray:
        return (1 << self.choice) if self.mode == "single" else self.choice

    def as_sets(self) -> "RuleTable":
        return RuleTable(self.keys, self.voters, self.masks, "set", self.n_max)

    def __getitem__(self, t):
        pos = np.flatnonzero(self.keys == pack(np.asarray(tuple(t)))[0])
        if not pos.size:
            raise KeyError(t)
        c = int(self.choice[pos[0]])
        return c if self.mode == "single" else frozenset(x for x in range(4) if c >> x & 1)

    def lines(self):
        G = unpack(self.keys)
        for i in range(len(self)):
            yield format_entry(G[i], int(self.voters[i]), int(self.choice[i]), self.mode)


def _choice_text(choice: int, mode: str) -> str:
    if mode == "single":
        return LABELS[choice]
    return "".join(LABELS[x] for x in range(4) if choice >> x & 1)


def format_entry(vector, n: int, choice, mode: str = "single") -> str:
    if isinstance(choice, (set, frozenset)):
        choice, mode = sum(1 << x for x in choice), "set"
    return f"{_choice_text(int(choice), mode)},#{n},(" + ",".join(str(int(v)) for v in vector) + ")"


def parse_entry(line: str, lineno: int = 0, mode: Optional[str] = None) -> tuple:
    """``"a,#1,(1,...)"`` -> (MarginVector, n, choice).

    ``choice`` is an alternative index when the label has one letter and
    ``mode`` is not ``"set"``, otherwise a frozenset.
    """
    text = line.strip()
    m = _ENTRY.fullmatch(text)
    if m is None:
        ok = _ENTRY.match(text)
        col = ok.end() if ok else _first_bad_column(text)
        raise ParseError(f"malformed table entry {text!r}", lineno, col)
    labels = m.group(1)
    if len(set(labels)) != len(labels) or list(labels) != sorted(labels):
        raise ParseError("set labels must be distinct and sorted", lineno, 1)
    vec = MarginVector(*(int(m.group(k)) for k in range(3, 9)))
    n = int(m.group(2))
    if mode != "set" and len(labels) == 1:
        choice = LABELS.index(labels)
    else:
        choice = frozenset(LABELS.index(ch) for ch in labels)
    return vec, n, choice


_NUMS = r"(?:-?\d+,){0,5}-?\d*|(?:-?\d+,){5}-?\d+\)"
_PREFIX_RE = re.compile(r"[a-d]*(?:,(?:#(?:\d+(?:,(?:\((?:" + _NUMS + r")?)?)?)?)?)?")


def _first_bad_column(text: str) -> int:
    """1-based column of the first character no valid entry can continue with."""
    for k in range(len(text), 0, -1):
        if _PREFIX_RE.fullmatch(text[:k]):
            return k + 1
    return 1


def write_table(table: RuleTable, path) -> None:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "wt") as fh:
        for line in table.lines():
            fh.write(line + "\n")


def read_table(path, mode: Optional[str] = None) -> RuleTable:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    vecs, ns, choices = [], [], []
    set_mode = mode == "set"
    with opener(path, "rt") as fh:
        for k, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            vec, n, choice = parse_entry(line, k, mode)
            if isinstance(choice, frozenset):
                set_mode = True
            vecs.append(vec)
            ns.append(n)
            choices.append(choice)
    if set_mode:
        choices = [
            sum(1 << x for x in c) if isinstance(c, frozenset) else 1 << c for c in choices
        ]
    keys = pack(np.array(vecs, dtype=np.int64).reshape(-1, 6))
    return RuleTable(keys, ns, choices, "set" if set_mode else "single")


# --- decoding ---------------------------------------------------------------


def decode_model(assignment, varmap) -> RuleTable:
    """Turn a checked model into a table; ``varmap`` as returned by ``read_varmap``.

    ``assignment`` is a boolean array over variables (index 0 unused).
    """
    from .encoding import read_varmap  # local: avoids a cycle at import time

    if isinstance(varmap, (str, Path)):
        varmap = read_varmap(varmap)
    if varmap["kind"] != "tournament":
        raise TableError("profile-space models decode with decode_profile_model")
    G = varmap["vectors"]
    bits = _node_bits(assignment, len(G))
    counts = bits.sum(axis=1)
    if (counts != 1).any():
        bad = int(np.flatnonzero(counts != 1)[0])
        raise TableError(f"mode violation: node {bad} has {int(counts[bad])} chosen alternatives")
    return RuleTable(pack(G), varmap["voters"], bits.argmax(axis=1), "single")


def decode_set_model(assignment, varmap) -> RuleTable:
    from .encoding import read_varmap

    if isinstance(varmap, (str, Path)):
        varmap = read_varmap(varmap)
    G = varmap["vectors"]
    bits = _node_bits(assignment, len(G))
    masks = (bits * (1 << np.arange(4))).sum(axis=1)
    if (masks == 0).any():
        raise TableError(f"mode violation: node {int(np.flatnonzero(masks == 0)[0])} chooses nothing")
    return RuleTable(pack(G), varmap["voters"], masks, "set")


def decode_profile_model(assignment, varmap) -> dict:
    """Profile-space model -> {Profile: frozenset of chosen alternatives}."""
    from .encoding import read_varmap

    if isinstance(varmap, (str, Path)):
        varmap = read_varmap(varmap)
    bits = _node_bits(assignment, len(varmap["profiles"]))
    return {
        p: frozenset(int(x) for x in np.flatnonzero(row)) for p, row in zip(varmap["profiles"], bits)
    }


def _node_bits(assignment, n_nodes: int) -> np.ndarray:
    a = np.asarray(assignment, dtype=bool)
    if len(a) < 4 * n_nodes + 1:
        raise TableError("model is shorter than the variable map")
    return a[1 : 4 * n_nodes + 1].reshape(n_nodes, 4)


def table_from_index(index: TournamentIndex, choose: Callable, mode: str = "single") -> RuleTable:
    """Build a table by applying ``choose((N, 6) vectors, voters) -> choices``."""
    return RuleTable(index.keys, index.min_voters, choose(index.vectors, index.min_voters), mode, index.n_max)


def maximin_lex_table(index: TournamentIndex) -> RuleTable:
    def lex(G, _):
        masks = maximin_mask_many(G)
        return np.array([(m & -m).bit_length() - 1 for m in masks.tolist()], dtype=np.int64)

    return table_from_index(index, lex)


def constant_table(index: TournamentIndex, choice, mode: str = "single") -> RuleTable:
    if isinstance(choice, (set, frozenset)):
        choice, mode = sum(1 << x for x in choice), "set"
    return table_from_index(index, lambda G, _: np.full(len(G), choice, dtype=np.int64), mode)


# --- verification -----------------------------------------------------------


@dataclass
class Report:
    kind: str
    checked: int = 0
    nodes: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    details: list = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return len(self.nodes) == 0

    @property
    def count(self) -> int:
        return len(self.nodes)

    def lines(self, limit: Optional[int] = None):
        for k, (node, detail) in enumerate(zip(self.nodes.tolist(), self.details)):
            if limit is not None and k >= limit:
                break
            yield f"{self.kind} {node} {detail}"


def positions(keys: np.ndarray, index: TournamentIndex) -> np.ndarray:
    """Row of ``keys`` holding each index node; raises when a node is missing."""
    order = np.argsort(keys)
    skeys = keys[order]
    pos = np.minimum(np.searchsorted(skeys, index.keys), max(len(skeys) - 1, 0))
    hit = skeys[pos] == index.keys if len(skeys) else np.zeros(len(index), bool)
    if not hit.all():
        missing = int(np.flatnonzero(~hit)[0])
        raise TableError(f"table is incomplete: node {missing} {index.vector(missing)} has no entry")
    return order[pos]


def align(table: RuleTable, index: TournamentIndex) -> np.ndarray:
    """Table choices in index order."""
    return table.choice[positions(table.keys, index)]


def _masks(table: RuleTable, index: TournamentIndex) -> np.ndarray:
    c = align(table, index)
    return (1 << c) if table.mode == "single" else c


def _set_text(mask: int) -> str:
    return "".join(LABELS[x] for x in range(4) if mask >> x & 1)


def _edge_check(table, index, kind: str, bad_fn, chunk: int = 1 << 16) -> Report:
    masks = _masks(table, index)
    # layers are contiguous, so the interior nodes form a prefix
    interior = int(np.count_nonzero(index.min_voters < index.n_max))
    nodes, details = [], []
    checked = 0
    for lo in range(0, interior, chunk):
        hi = min(lo + chunk, interior)
        succ = index.successor_indices(lo, hi)
        checked += succ.size
        m_from = masks[lo:hi][:, None]
        m_to = masks[succ]
        bad = bad_fn(m_from, m_to)
        rows, cols = np.nonzero(bad)
        for i, j in zip(rows.tolist(), cols.tolist()):
            nodes.append(lo + i)
            details.append(
                f"ranking={ALL_RANKINGS[j]} succ={int(succ[i, j])} "
                f"from={_set_text(int(m_from[i, 0]))} to={_set_text(int(m_to[i, j]))}"
            )
    return Report(kind, checked, np.array(nodes, dtype=np.int64), details)


_R = np.arange(24)[None, :]


def verify_participation(table: RuleTable, index: TournamentIndex) -> Report:
    """Single-valued participation on every edge t -> t + r inside the index."""
    if table.mode != "single":
        raise TableError("participation applies to single-valued tables; use verify_optimistic")
    return _edge_check(
        table, index, "participation", lambda a, b: BEST[_R, b] > BEST[_R, np.broadcast_to(a, b.shape)]
    )


def verify_optimistic(table: RuleTable, index: TournamentIndex) -> Report:
    """max F(t + r) must be weakly r-better than max F(t)."""
    return _edge_check(
        table, index, "optimistic", lambda a, b: BEST[_R, b] > BEST[_R, np.broadcast_to(a, b.shape)]
    )


def verify_pessimistic(table: RuleTable, index: TournamentIndex) -> Report:
    """min F(t + r) must be weakly r-better than min F(t)."""
    return _edge_check(
        table, index, "pessimistic", lambda a, b: WORST[_R, b] > WORST[_R, np.broadcast_to(a, b.shape)]
    )


def _node_check(kind: str, masks: np.ndarray, bad: np.ndarray, allowed: np.ndarray) -> Report:
    ids = np.flatnonzero(bad)
    details = [
        f"chosen={_set_text(int(masks[i]))} allowed={_set_text(int(allowed[i]))}" for i in ids.tolist()
    ]
    return Report(kind, len(masks), ids.astype(np.int64), details)


def verify_condorcet(table: RuleTable, index: TournamentIndex) -> Report:
    masks = _masks(table, index)
    w = condorcet_winner_many(index.vectors)
    allowed = np.where(w >= 0, 1 << np.maximum(w, 0), 15)
    return _node_check("condorcet", masks, (w >= 0) & (masks != allowed), allowed)


def verify_topcycle(table: RuleTable, index: TournamentIndex) -> Report:
    masks = _masks(table, index)
    tc = top_cycle_mask_many(index.vectors)
    return _node_check("topcycle", masks, (masks & ~tc) != 0, tc)


def verify_pareto(table: RuleTable, index: TournamentIndex) -> Report:
    masks = _masks(table, index)
    allowed = 15 & ~pareto_mask_many(index.vectors, index.min_voters)
    return _node_check("pareto", masks, (masks & ~allowed) != 0, allowed)


def verify_maximin(table: RuleTable, index: TournamentIndex) -> Report:
    masks = _masks(table, index)
    mm = maximin_mask_many(index.vectors)
    return _node_check("maximin", masks, (masks & ~mm) != 0, mm)


def verify_kemeny(table: RuleTable, index: TournamentIndex) -> Report:
    masks = _masks(table, index)
    km = kemeny_mask_many(index.vectors)
    return _node_check("kemeny", masks, (masks & ~km) != 0, km)


VERIFIERS = {
    "participation": verify_participation,
    "condorcet": verify_condorcet,
    "topcycle": verify_topcycle,
    "pareto": verify_pareto,
    "maximin": verify_maximin,
    "kemeny": verify_kemeny,
    "optimistic": verify_optimistic,
    "pessimistic": verify_pessimistic,
}


@dataclass
class RuleStats:
    nodes: int
    condorcet: float
    maximin: float
    kemeny: float
    maximin_lex: float
    top_cycle: float

    def lines(self) -> list:
        return [
            f"nodes {self.nodes}",
            f"condorcet_winner_fraction {self.condorcet:.6f}",
            f"maximin_member_fraction {self.maximin:.6f}",
            f"kemeny_member_fraction {self.kemeny:.6f}",
            f"maximin_lex_agreement {self.maximin_lex:.6f}",
            f"top_cycle_member_fraction {self.top_cycle:.6f}",
        ]


def condorcet_fraction(index: TournamentIndex) -> float:
    return float(np.mean(condorcet_winner_many(index.vectors) >= 0))


def compute_stats(table: RuleTable, index: TournamentIndex) -> RuleStats:
    if table.mode != "single":
        raise TableError("statistics are defined for single-valued tables")
    c = align(table, index)
    G = index.vectors
    bit = 1 << c
    mm = maximin_mask_many(G)
    lex = np.array([(m & -m).bit_length() - 1 for m in mm.tolist()], dtype=np.int64)
    return RuleStats(
        nodes=len(index),
        condorcet=float(np.mean(condorcet_winner_many(G) >= 0)),
        maximin=float(np.mean((mm & bit) != 0)),
        kemeny=float(np.mean((kemeny_mask_many(G) & bit) != 0)),
        maximin_lex=float(np.mean(lex == c)),
        top_cycle=float(np.mean((top_cycle_mask_many(G) & bit) != 0)),
    )
