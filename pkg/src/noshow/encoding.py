"""Propositional encodings of Condorcet-consistency plus participation.

Variable ``4*node + alt + 1`` is true iff the rule picks ``alt`` at ``node``.
Nodes are weighted tournaments (pairwise rules) or, in profile space,
concrete profiles built from a base profile and a fixed list of rankings.

Clauses are written node by node in index order.  Each node contributes,
in this order: non-empty, mutex (single-valued only), Condorcet units,
restriction units, then for every ranking its outgoing participation
clauses (addition direction first, removal direction second).  All of a
node's clauses form group ``node + 1`` in GCNF output.
"""

from __future__ import annotations

import hashlib
import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from . import _fastio
from .tournaments import TournamentIndex, enumerate_tournaments
from .voting import (
    ALL_RANKINGS,
    LABELS,
    MarginVector,
    Profile,
    Ranking,
    VotingError,
    condorcet_winner_many,
    kemeny_mask_many,
    lower_closure,
    margins_of_profile,
    maximin_mask_many,
    pareto_mask_many,
    top_cycle_mask_many,
    upper_closure,
)

log = logging.getLogger(__name__)

RULE_CLASSES = ("condorcet", "maximin", "kemeny")
DIRECTIONS = ("opt", "pess")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EncodingConfig:
    n_max: int
    rule_class: str = "condorcet"
    top_cycle: bool = False
    pareto: bool = False
    value_mode: str = "single"  # or "set": no mutex clauses
    directions: frozenset = frozenset({"opt"})
    space: str = "tournament"  # or "profile"
    base: Optional[Profile] = None
    allowed: Optional[tuple] = None
    seed: Optional[MarginVector] = None
    seed_voters: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "directions", frozenset(self.directions))
        if self.rule_class not in RULE_CLASSES:
            raise ConfigError(f"unknown rule class {self.rule_class!r}")
        if self.value_mode not in ("single", "set"):
            raise ConfigError(f"unknown value mode {self.value_mode!r}")
        if not self.directions or not self.directions <= set(DIRECTIONS):
            raise ConfigError("participation directions must be a non-empty subset of {opt, pess}")
        if self.value_mode == "single" and "opt" not in self.directions:
            raise ConfigError("single-valued mode needs the addition direction (pessimistic-only is not supported)")
        if self.n_max < 1:
            raise ConfigError("n_max must be positive")
        if self.space == "profile":
            if self.base is None or self.base.n < 1 or not self.allowed:
                raise ConfigError("profile space needs a non-empty base profile and allowed rankings")
            if self.base.n > self.n_max:
                raise ConfigError("base profile already exceeds n_max")
            if self.seed is not None:
                raise ConfigError("seeds apply to tournament space only")
        elif self.space == "tournament":
            if self.base is not None or self.allowed is not None:
                raise ConfigError("base/allowed apply to profile space only")
        else:
            raise ConfigError(f"unknown space {self.space!r}")

    @property
    def single(self) -> bool:
        return self.value_mode == "single"

    def describe(self) -> list:
        lines = [
            f"space={self.space} n_max={self.n_max} rule={self.rule_class}",
            f"top_cycle={int(self.top_cycle)} pareto={int(self.pareto)} "
            f"mode={self.value_mode} directions={','.join(sorted(self.directions))}",
        ]
        if self.space == "profile":
            lines.append(f"base={self.base}")
            lines.append("allowed=" + ",".join(str(r) for r in self.allowed))
        if self.seed is not None:
            lines.append(f"seed={self.seed} seed_voters={self.seed_voters}")
        return lines


# --- node spaces -----------------------------------------------------------


class TournamentSpace:
    kind = "tournament"

    def __init__(self, index: TournamentIndex):
        self.index = index
        self.rankings = ALL_RANKINGS
        self.vectors = index.vectors
        self.voters = index.min_voters.astype(np.int64)
        self.n_max = index.n_max

    def __len__(self) -> int:
        return len(self.index)

    def successors(self, lo: int, hi: int) -> np.ndarray:
        succ = self.index.successor_indices(lo, hi)
        frontier = self.voters[lo:hi] >= self.n_max
        succ[frontier] = -1
        if (succ[~frontier] < 0).any():  # pragma: no cover - index exactness
            raise VotingError("successor of an interior node is missing from the index")
        return succ

    def describe(self, i: int) -> str:
        return " ".join(str(int(v)) for v in self.vectors[i])


class ProfileSpace:
    """Profiles ``base + multiset over allowed`` with at most ``n_max`` voters.

    Ordered by voter count, then by the count tuple over ``allowed``.
    """

    kind = "profile"

    def __init__(self, base: Profile, allowed: Sequence[Ranking], n_max: int):
        self.base = base
        self.rankings = tuple(allowed)
        if len(set(self.rankings)) != len(self.rankings):
            raise ConfigError("allowed rankings contain duplicates")
        self.n_max = n_max
        k = len(self.rankings)
        tuples = []
        for extra in range(n_max - base.n + 1):
            layer = []
            for combo in itertools.combinations_with_replacement(range(k), extra):
                c = [0] * k
                for j in combo:
                    c[j] += 1
                layer.append(tuple(c))
            tuples.extend(sorted(layer))
        self.extras = tuples
        self.position = {c: i for i, c in enumerate(tuples)}
        self.voters = np.array([base.n + sum(c) for c in tuples], dtype=np.int64)
        self.profiles = [self._profile(c) for c in tuples]
        self.vectors = np.array([tuple(margins_of_profile(p)) for p in self.profiles], dtype=np.int64)

    def _profile(self, c: tuple) -> Profile:
        counts = self.base.counts
        for r, k in zip(self.rankings, c):
            if k:
                counts[r] = counts.get(r, 0) + k
        return Profile(counts)

    def __len__(self) -> int:
        return len(self.extras)

    def successors(self, lo: int, hi: int) -> np.ndarray:
        out = np.full((hi - lo, len(self.rankings)), -1, dtype=np.int64)
        for i in range(lo, hi):
            if self.voters[i] >= self.n_max:
                continue
            c = self.extras[i]
            for j in range(len(self.rankings)):
                d = list(c)
                d[j] += 1
                out[i - lo, j] = self.position[tuple(d)]
        return out

    def describe(self, i: int) -> str:
        return str(self.profiles[i])


def build_space(config: EncodingConfig, index: Optional[TournamentIndex] = None):
    if config.space == "profile":
        return ProfileSpace(config.base, config.allowed, config.n_max)
    if index is None:
        index = enumerate_tournaments(config.n_max, config.seed, config.seed_voters)
    if index.n_max != config.n_max:
        raise ConfigError(f"index built for n_max={index.n_max}, config wants {config.n_max}")
    return TournamentSpace(index)


def node_constraints(space, config: EncodingConfig):
    """Per-node Condorcet winner (-1: none) and forbidden-alternative bitmask."""
    G = space.vectors
    winner = condorcet_winner_many(G)
    forbid = np.zeros(len(G), dtype=np.int64)
    if config.rule_class == "maximin":
        forbid |= ~maximin_mask_many(G) & 15
    elif config.rule_class == "kemeny":
        forbid |= ~kemeny_mask_many(G) & 15
    if config.top_cycle:
        forbid |= ~top_cycle_mask_many(G) & 15
    if config.pareto:
        forbid |= pareto_mask_many(G, space.voters)
    return winner, forbid


# --- clause families (reference path) --------------------------------------


def var(node: int, alt: int) -> int:
    return 4 * node + alt + 1


def emit_nonempty(node: int) -> list:
    return [var(node, x) for x in range(4)]


def emit_mutex(node: int) -> list:
    return [[-var(node, x), -var(node, y)] for x, y in itertools.combinations(range(4), 2)]


def emit_condorcet(node: int, winner: Optional[int]) -> list:
    if winner is None or winner < 0:
        return []
    return [[var(node, winner)]] + [[-var(node, x)] for x in range(4) if x != winner]


def emit_rule_restriction(node: int, forbidden: int, winner: Optional[int] = None) -> list:
    """Negative units for forbidden alternatives not already excluded by Condorcet units."""
    skip = 0
    if winner is not None and winner >= 0:
        skip = 15 & ~(1 << winner)
    return [[-var(node, x)] for x in range(4) if (forbidden & ~skip) >> x & 1]


def emit_participation(node: int, succ: int, ranking: Ranking) -> list:
    return [
        [-var(node, x)] + [var(succ, y) for y in ranking if y in upper_closure({x}, ranking)]
        for x in range(4)
    ]


def emit_pessimistic_participation(node: int, succ: int, ranking: Ranking) -> list:
    return [
        [-var(succ, x)] + [var(node, y) for y in ranking if y in lower_closure({x}, ranking)]
        for x in range(4)
    ]


def iter_clauses(space, config: EncodingConfig) -> Iterator[tuple]:
    """(group, clause) pairs in file order; the slow, obviously-correct path."""
    winner, forbid = node_constraints(space, config)
    for i in range(len(space)):
        g = i + 1
        yield g, emit_nonempty(i)
        if config.single:
            for c in emit_mutex(i):
                yield g, c
        for c in emit_condorcet(i, int(winner[i])):
            yield g, c
        for c in emit_rule_restriction(i, int(forbid[i]), int(winner[i])):
            yield g, c
        succ = space.successors(i, i + 1)[0]
        for j, r in enumerate(space.rankings):
            if succ[j] < 0:
                continue
            if "opt" in config.directions:
                for c in emit_participation(i, int(succ[j]), r):
                    yield g, c
            if "pess" in config.directions:
                for c in emit_pessimistic_participation(i, int(succ[j]), r):
                    yield g, c


def clause_list(space, config: EncodingConfig) -> list:
    return [c for _, c in iter_clauses(space, config)]


# --- streaming writer -------------------------------------------------------


@dataclass
class Encoding:
    config: EncodingConfig
    n_vars: int
    n_clauses: int
    n_groups: int
    paths: dict = field(default_factory=dict)
    digests: dict = field(default_factory=dict)


def count_clauses(space, config: EncodingConfig, winner=None, forbid=None) -> int:
    if winner is None:
        winner, forbid = node_constraints(space, config)
    per = np.ones(len(space), dtype=np.int64)
    if config.single:
        per += 6
    has_w = winner >= 0
    per += 4 * has_w
    neg = np.where(has_w, 15 & ~(1 << np.maximum(winner, 0)), 0)
    extra = forbid & ~neg
    per += sum((extra >> x) & 1 for x in range(4))
    interior = space.voters < space.n_max
    per += interior * (4 * len(space.rankings) * len(config.directions))
    return int(per.sum())


def _rank_order(rankings) -> np.ndarray:
    return np.array([tuple(r) for r in rankings], dtype=np.int64)


def _header_lines(config: EncodingConfig, n_vars: int, n_clauses: int, gcnf: bool) -> bytes:
    out = ["c noshow encoding"] + ["c " + s for s in config.describe()]
    if gcnf:
        out.append(f"p gcnf {n_vars} {n_clauses} {n_vars // 4}")
    else:
        out.append(f"p cnf {n_vars} {n_clauses}")
    return ("\n".join(out) + "\n").encode()


def write_encoding(
    config: EncodingConfig,
    out_path,
    *,
    index: Optional[TournamentIndex] = None,
    space=None,
    gcnf: bool = False,
    varmap_path=None,
    chunk: int = 2048,
) -> Encoding:
    """Stream the encoding to ``out_path`` (DIMACS, or GCNF when ``gcnf``)."""
    space = space if space is not None else build_space(config, index)
    winner, forbid = node_constraints(space, config)
    n_vars = 4 * len(space)
    n_clauses = count_clauses(space, config, winner, forbid)
    rank_order = _rank_order(space.rankings)
    single = config.single
    opt, pess = "opt" in config.directions, "pess" in config.directions
    per_node = 16 * 1024 + 64 * len(space.rankings) * 8
    buf = np.empty(chunk * per_node, dtype=np.uint8)
    digest = hashlib.sha256()
    written = 0
    out_path = Path(out_path)
    with open(out_path, "wb") as fh:
        head = _header_lines(config, n_vars, n_clauses, gcnf)
        fh.write(head)
        digest.update(head)
        for lo in range(0, len(space), chunk):
            hi = min(len(space), lo + chunk)
            succ = np.ascontiguousarray(space.successors(lo, hi))
            nbytes, nc = _fastio.node_block(
                buf, lo, hi, winner, forbid, succ, rank_order, single, opt, pess, gcnf
            )
            block = buf[:nbytes].tobytes()
            fh.write(block)
            digest.update(block)
            written += nc
    if written != n_clauses:  # pragma: no cover - guards the counting formula
        raise RuntimeError(f"clause count mismatch: header {n_clauses}, wrote {written}")
    enc = Encoding(config, n_vars, n_clauses, len(space))
    enc.paths["gcnf" if gcnf else "cnf"] = str(out_path)
    enc.digests[str(out_path)] = digest.hexdigest()
    if varmap_path is not None:
        enc.paths["varmap"] = str(varmap_path)
        enc.digests[str(varmap_path)] = write_varmap(space, varmap_path)
    log.info("wrote %s: %d vars, %d clauses", out_path, n_vars, n_clauses)
    return enc


def reference_text(space, config: EncodingConfig, gcnf: bool = False) -> bytes:
    """Whole file from the reference clause generator (small instances only)."""
    pairs = list(iter_clauses(space, config))
    parts = [_header_lines(config, 4 * len(space), len(pairs), gcnf)]
    for g, c in pairs:
        prefix = f"{{{g}}} " if gcnf else ""
        parts.append((prefix + " ".join(map(str, c)) + " 0\n").encode())
    return b"".join(parts)


def write_varmap(space, path) -> str:
    """One line per variable; returns the sha256 of the file."""
    digest = hashlib.sha256()
    labels = LABELS[:4].encode()
    with open(path, "wb") as fh:
        if space.kind == "tournament":
            step = 1 << 16
            for lo in range(0, len(space), step):
                hi = min(len(space), lo + step)
                nodes = np.repeat(np.arange(lo, hi), 4)
                rows = np.column_stack(
                    [4 * nodes + np.tile(np.arange(4), hi - lo) + 1, nodes, space.voters[nodes], space.vectors[nodes]]
                )
                text = _fastio.format_int_rows(rows, labels * (hi - lo))
                fh.write(text)
                digest.update(text)
        else:
            for i in range(len(space)):
                desc = space.describe(i)
                for x in range(4):
                    line = f"{var(i, x)} {i} {space.voters[i]} {desc} {LABELS[x]}\n".encode()
                    fh.write(line)
                    digest.update(line)
    return digest.hexdigest()


@dataclass
class VarMapEntry:
    node: int
    voters: int
    key: object  # MarginVector or Profile
    alt: int


def read_varmap(path) -> dict:
    """Parse a varmap into ``{'kind', 'nodes' (list of keys), 'voters' (array)}``."""
    data = Path(path).read_bytes()
    if not data.strip():
        return {"kind": "tournament", "nodes": [], "voters": np.empty(0, dtype=np.int64)}
    first = data.split(b"\n", 1)[0].split()
    if len(first) == 10:
        nums = np.fromstring(data.translate(bytes.maketrans(b"abcd", b"    ")), dtype=np.int64, sep=" ")
        rows = nums.reshape(-1, 9)
        if not np.array_equal(rows[:, 0], np.arange(1, len(rows) + 1)):
            raise VotingError("varmap variables are not dense 1..V")
        node_rows = rows[::4]
        return {"kind": "tournament", "vectors": node_rows[:, 3:9], "voters": node_rows[:, 2]}
    profiles, voters = [], []
    for ln, line in enumerate(data.decode().splitlines()):
        parts = line.split()
        vid, node, n, prof, alt = int(parts[0]), int(parts[1]), int(parts[2]), parts[3], parts[4]
        if vid != ln + 1 or var(node, LABELS.index(alt)) != vid:
            raise VotingError(f"varmap line {ln + 1} is inconsistent")
        if alt == "a":
            profiles.append(Profile.parse(prof))
            voters.append(n)
    return {"kind": "profile", "profiles": profiles, "voters": np.array(voters, dtype=np.int64)}


# --- convenience ----------------------------------------------------------


THM4_BASE = "abdc:1,bdca:1,cabd:1,dcab:1"
THM4_ORDERS = ("abcd", "abdc", "acdb", "badc", "bdca", "cabd", "cdab", "dbac", "dcab", "dcba")


def profile_space_config(n_max: int, base: Optional[Profile] = None, allowed=None, **kw) -> EncodingConfig:
    base = base if base is not None else Profile.parse(THM4_BASE)
    allowed = tuple(Ranking.parse(r) if isinstance(r, str) else r for r in (allowed or THM4_ORDERS))
    return EncodingConfig(n_max=n_max, space="profile", base=base, allowed=allowed, **kw)
