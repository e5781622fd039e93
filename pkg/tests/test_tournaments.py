import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noshow.tournaments import (
    enumerate_tournaments,
    oracle_enumerate,
    pack,
    read_index,
    successors,
    unpack,
    write_index,
)
from noshow.voting import (
    ALL_RANKINGS,
    MarginVector,
    Profile,
    Ranking,
    VotingError,
    add_voters,
    apply_ranking_to_margins,
    margins_of_profile,
)


def brute_min_voters(n_max):
    """Smallest electorate inducing each vector, straight from multisets."""
    out = {}
    for k in range(1, n_max + 1):
        for combo in itertools.combinations_with_replacement(ALL_RANKINGS, k):
            t = margins_of_profile(Profile([(r, 1) for r in combo]))
            out.setdefault(t, k)
    return out


def test_single_voter_layer():
    idx = enumerate_tournaments(1)
    assert len(idx) == 24
    assert set(np.abs(idx.vectors).ravel()) == {1}


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_matches_oracle(k):
    idx = enumerate_tournaments(k)
    assert {tuple(map(int, v)) for v in idx.vectors} == set(oracle_enumerate(k))
    assert idx.stats().cumulative[-1] == len(oracle_enumerate(k))


def test_min_voters_and_order(index4):
    expected = brute_min_voters(4)
    got = {index4.vector(i): int(index4.min_voters[i]) for i in range(len(index4))}
    assert got == expected
    assert (np.diff(index4.min_voters) >= 0).all()
    for k in range(1, 5):
        layer = index4.keys[index4.min_voters == k]
        assert (np.diff(layer) > 0).all()


def test_oracle_contains_zero():
    assert MarginVector.zero() in oracle_enumerate(2)
    with pytest.raises(VotingError):
        oracle_enumerate(6)


def test_successors():
    succ = successors(MarginVector.zero())
    assert len({t for _, t in succ}) == 24
    assert all(set(map(abs, t)) == {1} for _, t in succ)
    t = MarginVector(3, -1, 1, -3, 5, 1)
    assert all(s.parity != t.parity for _, s in successors(t))


def test_root_to_alpha_by_successors():
    R = Profile.parse("abdc:2,bdca:3,cabd:3,dcab:2")
    abcd = Ranking.parse("abcd")
    t = apply_ranking_to_margins(apply_ranking_to_margins(margins_of_profile(R), abcd), abcd)
    assert t == margins_of_profile(add_voters(R, abcd, 2))


@given(st.lists(st.tuples(st.integers(-31, 31), st.integers(-31, 31), st.integers(-31, 31),
                          st.integers(-31, 31), st.integers(-31, 31), st.integers(-31, 31)), min_size=1))
def test_pack_roundtrip(rows):
    G = np.array(rows, dtype=np.int64)
    assert np.array_equal(unpack(pack(G)), G)


def test_successor_indices_consistent(index3):
    succ = index3.successor_indices()
    interior = np.flatnonzero(index3.min_voters < 3)
    for i in interior[:50]:
        t = index3.vector(i)
        for j, r in enumerate(ALL_RANKINGS):
            s = apply_ranking_to_margins(t, r)
            assert succ[i, j] == index3.index_of(s) >= 0


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_realize_reproduces_vector(index4, data):
    i = data.draw(st.integers(0, len(index4) - 1))
    t = index4.vector(i)
    k = int(index4.min_voters[i])
    if k <= 2 and data.draw(st.booleans()):
        k += 2
    p = index4.realize(t, k)
    assert p.n == k and margins_of_profile(p) == t


def test_inducible_parity(index4):
    assert index4.inducible((0, 0, 0, 0, 0, 0), 2)
    assert not index4.inducible((1, 1, 1, 1, 1, 1), 2)
    assert index4.inducible((1, 1, 1, 1, 1, 1), 3)


def test_seeded_enumeration_matches_brute_force():
    R = Profile.parse("abdc:1,cabd:1")
    idx = enumerate_tournaments(4, margins_of_profile(R), R.n)
    expected = {margins_of_profile(R)}
    for k in (1, 2):
        for combo in itertools.combinations_with_replacement(ALL_RANKINGS, k):
            p = R
            for r in combo:
                p = add_voters(p, r)
            expected.add(margins_of_profile(p))
    assert {idx.vector(i) for i in range(len(idx))} == expected
    assert idx.min_voters[0] == 2


def test_invalid_arguments():
    with pytest.raises(VotingError):
        enumerate_tournaments(0)
    with pytest.raises(VotingError):
        enumerate_tournaments(3, MarginVector(1, 1, 1, 1, 1, 1), 2)


def test_index_dump_roundtrip(index3, tmp_path):
    path = tmp_path / "index.txt"
    write_index(index3, path)
    back = read_index(path)
    assert np.array_equal(back.keys, index3.keys)
    assert np.array_equal(back.min_voters, index3.min_voters)
    first = path.read_text().splitlines()[0].split()
    assert first[:2] == ["0", "1"] and len(first) == 8


def test_enumeration_is_deterministic():
    a, b = enumerate_tournaments(5), enumerate_tournaments(5)
    assert np.array_equal(a.keys, b.keys)
    assert a.stats().lines() == b.stats().lines()
