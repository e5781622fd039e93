"""Breadth-first enumeration of weighted tournaments inducible by few voters.

A margin vector is packed into one int64 key, six 6-bit fields with an
offset of 32, most significant field first.  Packing is linear, so adding a
voter is adding a constant to the key and sorting keys sorts vectors
lexicographically.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .voting import (
    ALL_RANKINGS,
    SIGNS,
    MarginVector,
    Profile,
    Ranking,
    VotingError,
    apply_ranking_to_margins,
    margins_of_profile,
)

log = logging.getLogger(__name__)

OFFSET = 32
BITS = 6
MAX_VOTERS = OFFSET - 1
_SHIFTS = np.array([BITS * (5 - i) for i in range(6)], dtype=np.int64)
_FIELD = (1 << BITS) - 1

ORACLE_LIMIT = 5

# key delta of one voter with each ranking, in lexicographic ranking order
DELTAS = (SIGNS << _SHIFTS).sum(axis=1)


def pack(G) -> np.ndarray:
    G = np.asarray(G, dtype=np.int64)
    if G.ndim == 1:
        G = G[None, :]
    return ((G + OFFSET) << _SHIFTS).sum(axis=1)


def unpack(keys) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.int64)
    return ((keys[:, None] >> _SHIFTS) & _FIELD) - OFFSET


def pack_one(t: Iterable[int]) -> int:
    return int(pack(np.asarray(tuple(t)))[0])


@dataclass
class EnumerationStats:
    new: list  # new[k-1] = vectors first discovered with k voters
    base: int = 0

    @property
    def cumulative(self) -> list:
        return list(itertools.accumulate(self.new))

    @property
    def growth(self) -> list:
        cum = self.cumulative
        return [None] + [b / a if a else None for a, b in zip(cum, cum[1:])]

    def lines(self) -> list:
        first = self.base + 1 if self.base else 1
        return [f"{first + i} {nw} {c}" for i, (nw, c) in enumerate(zip(self.new, self.cumulative))]


@dataclass
class TournamentIndex:
    """Margin vectors in index order with their minimal voter counts.

    ``keys[i]`` is the packed vector of node ``i``; nodes are ordered by
    discovery layer, then lexicographically.
    """

    n_max: int
    keys: np.ndarray
    min_voters: np.ndarray
    base: int = 0
    seed: Optional[MarginVector] = None
    _sorted_keys: np.ndarray = field(init=False, repr=False)
    _sorted_pos: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        order = np.argsort(self.keys, kind="stable")
        self._sorted_keys = self.keys[order]
        self._sorted_pos = order

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def vectors(self) -> np.ndarray:
        return unpack(self.keys)

    def vector(self, i: int) -> MarginVector:
        return MarginVector(*(int(v) for v in unpack(self.keys[i : i + 1])[0]))

    def layer_sizes(self) -> list:
        lo = self.base if self.seed is not None else 1
        return [int(np.count_nonzero(self.min_voters == k)) for k in range(lo, self.n_max + 1)]

    def stats(self) -> EnumerationStats:
        sizes = self.layer_sizes()
        if self.seed is not None:
            return EnumerationStats(sizes, base=self.base)
        return EnumerationStats(sizes)

    def lookup(self, keys) -> np.ndarray:
        """Node index of each packed key, -1 when absent."""
        keys = np.asarray(keys, dtype=np.int64)
        pos = np.searchsorted(self._sorted_keys, keys)
        pos_c = np.minimum(pos, len(self._sorted_keys) - 1)
        hit = self._sorted_keys[pos_c] == keys
        return np.where(hit, self._sorted_pos[pos_c], -1)

    def index_of(self, t: Iterable[int]) -> int:
        return int(self.lookup(pack(np.asarray(tuple(t))))[0])

    def __contains__(self, t) -> bool:
        return self.index_of(t) >= 0

    def successor_indices(self, lo: int = 0, hi: Optional[int] = None) -> np.ndarray:
        """(hi-lo, 24) successor node indices; -1 where outside the index."""
        hi = len(self) if hi is None else hi
        succ = self.keys[lo:hi, None] + DELTAS[None, :]
        return self.lookup(succ.ravel()).reshape(hi - lo, 24)

    def inducible(self, t: Iterable[int], k: int) -> bool:
        """Is ``t`` induced by some profile of exactly ``k`` voters (k <= n_max)?"""
        t = tuple(t)
        if self.seed is not None:
            raise VotingError("exact-count queries need an unseeded index")
        if k == 0:
            return not any(t)
        i = self.index_of(t)
        return i >= 0 and self.min_voters[i] <= k and (self.min_voters[i] - k) % 2 == 0

    def realize(self, t: Iterable[int], k: int, prefer: Iterable[Ranking] = ()) -> Profile:
        """A profile of exactly ``k`` voters inducing ``t``.

        Rankings in ``prefer`` are tried first at every step; the walk is
        greedy and cannot dead-end because membership is exact.
        """
        t = MarginVector(*t)
        if not self.inducible(t, k):
            raise VotingError(f"{t} is not inducible by {k} voters")
        prefer = list(prefer)
        order = prefer + [r for r in ALL_RANKINGS if r not in prefer]
        counts: dict = {}
        for left in range(k, 0, -1):
            for r in order:
                prev = apply_ranking_to_margins(t, r.reverse())
                if self.inducible(prev, left - 1):
                    counts[r] = counts.get(r, 0) + 1
                    t = prev
                    break
            else:  # pragma: no cover - unreachable when the index is exact
                raise VotingError("realization walk dead-ended")
        return Profile(counts)

    def dump_lines(self):
        G = self.vectors
        for i in range(len(self)):
            yield f"{i} {int(self.min_voters[i])} " + " ".join(str(int(v)) for v in G[i])


def _expand(frontier: np.ndarray, chunk: int = 1 << 18) -> np.ndarray:
    """Sorted unique keys reachable from ``frontier`` by one more voter."""
    parts = []
    for lo in range(0, len(frontier), chunk):
        block = frontier[lo : lo + chunk, None] + DELTAS[None, :]
        parts.append(np.unique(block.ravel()))
        if len(parts) > 8:
            parts = [np.unique(np.concatenate(parts))]
    return np.unique(np.concatenate(parts)) if parts else np.empty(0, dtype=np.int64)


def enumerate_tournaments(
    n_max: int, seed: Optional[MarginVector] = None, seed_voters: int = 0
) -> TournamentIndex:
    """All margin vectors inducible by at most ``n_max`` voters.

    With a seed, nodes are the seed (at ``seed_voters`` voters) and every
    vector obtained from it by adding voters, up to ``n_max`` voters total.
    """
    if n_max < 1:
        raise VotingError("n_max must be positive")
    if n_max > MAX_VOTERS:
        raise VotingError(f"n_max above {MAX_VOTERS} does not fit the key packing")
    if seed is None:
        start, base = pack(np.zeros(6, dtype=np.int64)), 0
        layers_keys, layers_k = [], []
        seen = np.empty(0, dtype=np.int64)
    else:
        if seed_voters < 1 or seed_voters > n_max:
            raise VotingError("seed voter count must lie in 1..n_max")
        if any((v - seed_voters) % 2 for v in seed) or any(abs(v) > seed_voters for v in seed):
            raise VotingError("seed vector is not inducible by its stated voter count")
        start, base = pack(np.asarray(seed)), seed_voters
        layers_keys, layers_k = [start], [np.full(1, base, dtype=np.int16)]
        seen = start.copy()
    exact_prev = start  # vectors induced by exactly k-1 voters
    exact_prev2 = np.empty(0, dtype=np.int64)
    for k in range(base + 1, n_max + 1):
        exact = _expand(exact_prev)
        new = np.setdiff1d(exact, seen, assume_unique=True)
        layers_keys.append(new)
        layers_k.append(np.full(len(new), k, dtype=np.int16))
        seen = np.union1d(seen, new)
        log.debug("layer %d: %d new, %d total", k, len(new), len(seen))
        exact_prev2, exact_prev = exact_prev, exact
    del exact_prev2
    keys = np.concatenate(layers_keys) if layers_keys else np.empty(0, dtype=np.int64)
    mv = np.concatenate(layers_k) if layers_k else np.empty(0, dtype=np.int16)
    return TournamentIndex(n_max=n_max, keys=keys, min_voters=mv, base=base, seed=seed)


def oracle_enumerate(n_max: int) -> set:
    """Margin vectors of every multiset profile with 1..n_max voters (brute force)."""
    if n_max > ORACLE_LIMIT:
        raise VotingError(f"oracle limit exceeded: n_max={n_max} > {ORACLE_LIMIT}")
    out = set()
    for k in range(1, n_max + 1):
        for combo in itertools.combinations_with_replacement(ALL_RANKINGS, k):
            counts: dict = {}
            for r in combo:
                counts[r] = counts.get(r, 0) + 1
            out.add(margins_of_profile(Profile(counts)))
    return out


def successors(t: MarginVector) -> list:
    return [(r, apply_ranking_to_margins(t, r)) for r in ALL_RANKINGS]


def write_index(index: TournamentIndex, path) -> None:
    with open(path, "w") as fh:
        for line in index.dump_lines():
            fh.write(line + "\n")


def write_stats(index: TournamentIndex, path) -> None:
    with open(path, "w") as fh:
        for line in index.stats().lines():
            fh.write(line + "\n")


def read_index(path) -> TournamentIndex:
    rows = np.loadtxt(path, dtype=np.int64, ndmin=2)
    if len(rows) and not np.array_equal(rows[:, 0], np.arange(len(rows))):
        raise VotingError("index dump is not sorted by dense index")
    keys = pack(rows[:, 2:8]) if len(rows) else np.empty(0, dtype=np.int64)
    mv = rows[:, 1].astype(np.int16)
    return TournamentIndex(n_max=int(mv.max()) if len(mv) else 0, keys=keys, min_voters=mv)
