"""Preferences, profiles, majority margins and winner sets.

Alternatives are small integers ``0..m-1`` displayed as ``a, b, c, ...``.
Everything here is exact integer arithmetic and every value is immutable.
The scalar functions are the reference implementations; the ``*_many``
functions at the bottom evaluate the same quantities over numpy arrays of
margin vectors and are cross-checked against the scalar ones in the tests.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np

LABELS = "abcdefghijklmnopqrstuvwxyz"

# Component order of a 4-alternative margin vector: ab, ac, ad, bc, bd, cd.
PAIRS4 = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


class VotingError(ValueError):
    pass


def label(alt: int) -> str:
    return LABELS[alt]


def parse_alternative(text: str) -> int:
    idx = LABELS.find(text)
    if len(text) != 1 or idx < 0:
        raise VotingError(f"unknown alternative {text!r}")
    return idx


def format_set(alts: Iterable[int]) -> str:
    """``{0, 2}`` -> ``"ac"``."""
    return "".join(LABELS[x] for x in sorted(alts))


def parse_set(text: str) -> frozenset:
    if not text:
        raise VotingError("empty alternative set")
    return frozenset(parse_alternative(ch) for ch in text)


class Ranking(tuple):
    """A strict total order, best alternative first."""

    __slots__ = ()

    def __new__(cls, order: Iterable[int]) -> "Ranking":
        order = tuple(int(x) for x in order)
        if sorted(order) != list(range(len(order))) or not order:
            raise VotingError(f"not a permutation of 0..m-1: {order}")
        return super().__new__(cls, order)

    @classmethod
    def parse(cls, text: str) -> "Ranking":
        return cls(parse_alternative(ch) for ch in text.strip())

    @property
    def m(self) -> int:
        return len(self)

    @property
    def top(self) -> int:
        return self[0]

    @property
    def bottom(self) -> int:
        return self[-1]

    def position(self, x: int) -> int:
        return self.index(x)

    def prefers(self, x: int, y: int) -> bool:
        """Strict preference: x is above y."""
        return self.index(x) < self.index(y)

    def weakly_prefers(self, x: int, y: int) -> bool:
        return x == y or self.prefers(x, y)

    def reverse(self) -> "Ranking":
        return Ranking(self[::-1])

    def relabel(self, perm: Sequence[int]) -> "Ranking":
        return Ranking(perm[x] for x in self)

    def pad(self, k: int) -> "Ranking":
        m = len(self)
        return Ranking(tuple(self) + tuple(range(m, m + k)))

    def __str__(self) -> str:
        return "".join(LABELS[x] for x in self)

    def __repr__(self) -> str:
        return f"Ranking({str(self)!r})"


ALL_RANKINGS: tuple = tuple(Ranking(p) for p in itertools.permutations(range(4)))


def rankings(m: int) -> tuple:
    """All m! rankings in lexicographic order."""
    if m == 4:
        return ALL_RANKINGS
    return tuple(Ranking(p) for p in itertools.permutations(range(m)))


class Profile:
    """Anonymous multiset of rankings over ``m`` alternatives."""

    __slots__ = ("_counts", "m", "n", "_hash")

    def __init__(self, counts: Union[Mapping, Iterable] = (), m: Optional[int] = None):
        if isinstance(counts, Mapping):
            items = counts.items()
        else:
            items = counts
        agg: dict = {}
        for r, c in items:
            r = r if isinstance(r, Ranking) else Ranking.parse(r)
            c = int(c)
            if c < 0:
                raise VotingError("negative voter count")
            if c:
                agg[r] = agg.get(r, 0) + c
        sizes = {len(r) for r in agg}
        if m is None:
            if len(sizes) > 1:
                raise VotingError("rankings over different alternative sets")
            m = sizes.pop() if sizes else 4
        elif sizes and sizes != {m}:
            raise VotingError(f"rankings must cover exactly {m} alternatives")
        self._counts = dict(sorted(agg.items()))
        self.m = m
        self.n = sum(self._counts.values())
        self._hash = hash((m, tuple(self._counts.items())))

    @classmethod
    def parse(cls, text: str, m: Optional[int] = None) -> "Profile":
        """Parse ``"abdc:1, bdca:2"``; a bare ranking counts once."""
        items = []
        for part in text.replace(";", ",").split(","):
            part = part.strip()
            if not part:
                continue
            if ":" in part:
                r, c = part.split(":")
                items.append((Ranking.parse(r), int(c)))
            else:
                items.append((Ranking.parse(part), 1))
        return cls(items, m=m)

    @property
    def counts(self) -> dict:
        return dict(self._counts)

    def count(self, ranking: Ranking) -> int:
        return self._counts.get(ranking, 0)

    def items(self):
        return self._counts.items()

    def voters(self) -> Iterator[Ranking]:
        for r, c in self._counts.items():
            for _ in range(c):
                yield r

    @property
    def is_empty(self) -> bool:
        return self.n == 0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Profile)
            and self.m == other.m
            and self._counts == other._counts
        )

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        return ",".join(f"{r}:{c}" for r, c in self._counts.items())

    def __repr__(self) -> str:
        return f"Profile({str(self)!r})"


def add_voters(profile: Profile, ranking: Ranking, k: int = 1) -> Profile:
    if k < 1:
        raise VotingError("k must be positive")
    counts = profile.counts
    counts[ranking] = counts.get(ranking, 0) + k
    return Profile(counts, m=profile.m)


def remove_voters(profile: Profile, ranking: Ranking, k: int = 1) -> Profile:
    """Remove ``k`` voters; the result may be empty (check ``is_empty``)."""
    if k < 1:
        raise VotingError("k must be positive")
    have = profile.count(ranking)
    if have < k:
        raise VotingError(f"voter not in profile: {k}x{ranking} (have {have})")
    counts = profile.counts
    counts[ranking] = have - k
    return Profile(counts, m=profile.m)


class MarginVector(NamedTuple):
    """Majority margins of a 4-alternative weighted tournament."""

    ab: int
    ac: int
    ad: int
    bc: int
    bd: int
    cd: int

    @classmethod
    def zero(cls) -> "MarginVector":
        return cls(0, 0, 0, 0, 0, 0)

    @property
    def parity(self) -> int:
        return self.ab % 2

    def margin(self, x: int, y: int) -> int:
        if x == y:
            return 0
        if x < y:
            return self[PAIRS4.index((x, y))]
        return -self[PAIRS4.index((y, x))]

    def matrix(self) -> tuple:
        return tuple(tuple(self.margin(x, y) for y in range(4)) for x in range(4))

    def __str__(self) -> str:
        return "(" + ",".join(str(v) for v in self) + ")"


Margins = Union[MarginVector, Sequence[Sequence[int]]]


def _matrix(t: Margins) -> tuple:
    if isinstance(t, MarginVector):
        return t.matrix()
    if len(t) == 6 and not isinstance(t[0], (tuple, list)):
        return MarginVector(*t).matrix()
    return tuple(tuple(row) for row in t)


def margin_matrix(profile: Profile) -> tuple:
    """Full ``m x m`` margin matrix of a profile (any m)."""
    m = profile.m
    g = [[0] * m for _ in range(m)]
    for r, c in profile.items():
        pos = [0] * m
        for i, x in enumerate(r):
            pos[x] = i
        for x in range(m):
            for y in range(m):
                if x != y:
                    g[x][y] += c if pos[x] < pos[y] else -c
    return tuple(tuple(row) for row in g)


def margins_of_profile(profile: Profile) -> MarginVector:
    if profile.n < 1:
        raise VotingError("empty electorate")
    if profile.m != 4:
        raise VotingError("margin vectors are defined for m = 4; use margin_matrix")
    g = margin_matrix(profile)
    return MarginVector(*(g[x][y] for x, y in PAIRS4))


def ranking_signs(ranking: Ranking) -> tuple:
    """+1/-1 per component: the effect of one voter on a 4-alternative vector."""
    return tuple(1 if ranking.prefers(x, y) else -1 for x, y in PAIRS4)


def apply_ranking_to_margins(t: MarginVector, ranking: Ranking) -> MarginVector:
    return MarginVector(*(v + s for v, s in zip(t, ranking_signs(ranking))))


def condorcet_winner(t: Margins) -> Optional[int]:
    g = _matrix(t)
    m = len(g)
    for x in range(m):
        if all(g[x][y] > 0 for y in range(m) if y != x):
            return x
    return None


def condorcet_loser(t: Margins) -> Optional[int]:
    g = _matrix(t)
    m = len(g)
    for x in range(m):
        if all(g[x][y] < 0 for y in range(m) if y != x):
            return x
    return None


def maximin_scores(t: Margins) -> tuple:
    g = _matrix(t)
    m = len(g)
    return tuple(min(g[x][y] for y in range(m) if y != x) for x in range(m))


def maximin_winners(t: Margins) -> frozenset:
    scores = maximin_scores(t)
    best = max(scores)
    return frozenset(x for x, s in enumerate(scores) if s == best)


def maximin_lex(t: Margins) -> int:
    return min(maximin_winners(t))


def kemeny_score(t: Margins, ranking: Ranking) -> int:
    """Sum of g(x, y) over pairs with x above y; affine in the agreement count."""
    g = _matrix(t)
    return sum(
        g[ranking[i]][ranking[j]]
        for i in range(len(ranking))
        for j in range(i + 1, len(ranking))
    )


def kemeny_rankings(t: Margins) -> list:
    g = _matrix(t)
    scored = [(kemeny_score(g, r), r) for r in rankings(len(g))]
    best = max(s for s, _ in scored)
    return [r for s, r in scored if s == best]


def kemeny_winners(t: Margins) -> frozenset:
    return frozenset(r.top for r in kemeny_rankings(t))


def top_cycle(t: Margins) -> frozenset:
    """Smith set: source component of the 'does not lose' digraph."""
    g = _matrix(t)
    m = len(g)
    reach = [[x == y or g[x][y] >= 0 for y in range(m)] for x in range(m)]
    for k in range(m):
        for x in range(m):
            if reach[x][k]:
                for y in range(m):
                    if reach[k][y]:
                        reach[x][y] = True
    return frozenset(x for x in range(m) if all(reach[x]))


def pareto_excluded(t: Margins, n_min: int) -> frozenset:
    """Alternatives unanimously beaten in a realization with ``n_min`` voters."""
    g = _matrix(t)
    m = len(g)
    return frozenset(
        x for x in range(m) if any(g[y][x] == n_min for y in range(m) if y != x)
    )


def pareto_dominated(profile: Profile) -> frozenset:
    """Exact Pareto-dominated set of a concrete profile."""
    return pareto_excluded(margin_matrix(profile), profile.n)


def relabel(obj, perm: Sequence[int]):
    """Transport a profile, ranking, margin vector/matrix or alternative set along ``perm``.

    ``perm[x]`` is the new name of alternative ``x``.
    """
    perm = tuple(perm)
    if sorted(perm) != list(range(len(perm))):
        raise VotingError("relabelling must be a bijection")
    if isinstance(obj, Profile):
        return Profile({r.relabel(perm): c for r, c in obj.items()}, m=obj.m)
    if isinstance(obj, Ranking):
        return obj.relabel(perm)
    if isinstance(obj, (set, frozenset)):
        return frozenset(perm[x] for x in obj)
    if isinstance(obj, MarginVector) or (len(obj) == 6 and isinstance(obj[0], int)):
        g = MarginVector(*obj).matrix()
        inv = [0] * 4
        for x, px in enumerate(perm):
            inv[px] = x
        return MarginVector(*(g[inv[x]][inv[y]] for x, y in PAIRS4))
    g = _matrix(obj)
    inv = [0] * len(perm)
    for x, px in enumerate(perm):
        inv[px] = x
    return tuple(tuple(g[inv[x]][inv[y]] for y in range(len(g))) for x in range(len(g)))


def parse_permutation(text: str, m: int = 4) -> tuple:
    """``"dcba"`` means a->d, b->c, c->b, d->a (image of ``abcd...``)."""
    image = [parse_alternative(ch) for ch in text]
    if sorted(image) != list(range(m)):
        raise VotingError(f"not a permutation: {text!r}")
    return tuple(image)


def pad_with_bad(profile: Profile, k: int) -> Profile:
    """Append ``k`` new alternatives to the bottom of every ranking, in fixed order."""
    if k < 0:
        raise VotingError("k must be non-negative")
    return Profile({r.pad(k): c for r, c in profile.items()}, m=profile.m + k)


def bad_alternatives(profile: Profile) -> frozenset:
    """Largest proper set that every voter ranks, as a block, at the bottom."""
    m = profile.m
    voters = [r for r, _ in profile.items()]
    if not voters:
        return frozenset()
    best: frozenset = frozenset()
    for size in range(1, m):
        bottoms = {frozenset(r[m - size:]) for r in voters}
        if len(bottoms) == 1:
            best = bottoms.pop()
    return best


def upper_closure(s: Iterable[int], r: Ranking) -> frozenset:
    """Everything weakly above some member of ``s`` in ``r``."""
    s = frozenset(s)
    if not s:
        raise VotingError("closure of an empty set")
    lowest = max(r.position(x) for x in s)
    return frozenset(r[: lowest + 1])


def lower_closure(s: Iterable[int], r: Ranking) -> frozenset:
    """Everything weakly below some member of ``s`` in ``r``."""
    s = frozenset(s)
    if not s:
        raise VotingError("closure of an empty set")
    highest = min(r.position(x) for x in s)
    return frozenset(r[highest:])


# ---------------------------------------------------------------------------
# Array versions over (N, 6) integer arrays of 4-alternative margin vectors.

SIGNS = np.array([ranking_signs(r) for r in ALL_RANKINGS], dtype=np.int64)  # (24, 6)

# _ORIENT[x, y] = (component, sign) so that g(x, y) = sign * vec[component]
_COMP = np.zeros((4, 4), dtype=np.int64)
_SIGN = np.zeros((4, 4), dtype=np.int64)
for _i, (_x, _y) in enumerate(PAIRS4):
    _COMP[_x, _y] = _COMP[_y, _x] = _i
    _SIGN[_x, _y], _SIGN[_y, _x] = 1, -1


def margin_tensor(G: np.ndarray) -> np.ndarray:
    """(N, 6) vectors -> (N, 4, 4) margin matrices (zero diagonal)."""
    G = np.asarray(G, dtype=np.int64)
    return G[:, _COMP] * _SIGN


def condorcet_winner_many(G: np.ndarray) -> np.ndarray:
    """Winner index per row, -1 where there is none."""
    M = margin_tensor(G)
    eye = np.eye(4, dtype=bool)
    wins = np.where(eye, True, M > 0).all(axis=2)
    out = np.full(len(M), -1, dtype=np.int64)
    rows, cols = np.nonzero(wins)
    out[rows] = cols
    return out


def _mask_of_bool(B: np.ndarray) -> np.ndarray:
    return (B.astype(np.int64) * (1 << np.arange(B.shape[1]))).sum(axis=1)


def maximin_mask_many(G: np.ndarray) -> np.ndarray:
    """Bitmask (bit x = alternative x) of maximin winners per row."""
    M = margin_tensor(G)
    big = np.iinfo(np.int64).max
    scores = np.where(np.eye(4, dtype=bool), big, M).min(axis=2)
    return _mask_of_bool(scores == scores.max(axis=1, keepdims=True))


def kemeny_mask_many(G: np.ndarray) -> np.ndarray:
    G = np.asarray(G, dtype=np.int64)
    scores = G @ SIGNS.T  # (N, 24)
    best = scores == scores.max(axis=1, keepdims=True)
    tops = np.array([r.top for r in ALL_RANKINGS])
    out = np.zeros(len(G), dtype=np.int64)
    for j, top in enumerate(tops):
        out |= best[:, j].astype(np.int64) << top
    return out


def top_cycle_mask_many(G: np.ndarray) -> np.ndarray:
    M = margin_tensor(G)
    reach = (M >= 0) | np.eye(4, dtype=bool)
    for _ in range(2):  # paths of length <= 4 suffice for 4 vertices
        reach = reach | (np.einsum("nxk,nky->nxy", reach.astype(np.int8), reach.astype(np.int8)) > 0)
    return _mask_of_bool(reach.all(axis=2))


def pareto_mask_many(G: np.ndarray, n_min: np.ndarray) -> np.ndarray:
    """Bitmask of Pareto-excluded alternatives given minimal voter counts."""
    M = margin_tensor(G)
    n_min = np.asarray(n_min, dtype=np.int64)[:, None, None]
    dominated = (M == n_min).any(axis=1)  # some y with g(y, x) = n_min
    return _mask_of_bool(dominated)


def mask_to_set(mask: int) -> frozenset:
    return frozenset(x for x in range(4) if mask >> x & 1)


def set_to_mask(s: Iterable[int]) -> int:
    out = 0
    for x in s:
        out |= 1 << x
    return out
