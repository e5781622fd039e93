from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noshow.encoding import EncodingConfig, read_varmap, write_encoding
from noshow.rules import (
    VERIFIERS,
    ParseError,
    RuleTable,
    TableError,
    compute_stats,
    condorcet_fraction,
    constant_table,
    decode_model,
    decode_set_model,
    format_entry,
    maximin_lex_table,
    parse_entry,
    read_table,
    table_from_index,
    verify_condorcet,
    verify_optimistic,
    verify_participation,
    verify_pessimistic,
    verify_topcycle,
    write_table,
)
from noshow.solvers import SAT, solve
from noshow.tournaments import enumerate_tournaments
from noshow.voting import (
    ALL_RANKINGS,
    Profile,
    apply_ranking_to_margins,
    condorcet_winner,
    condorcet_winner_many,
    margins_of_profile,
)

SAMPLE_ROWS = Path(__file__).parent / "data" / "sample_rows.txt"


def oracle_edge_violations(table, index, better):
    """Brute-force participation check straight from the voting functions."""
    bad = set()
    for i in range(len(index)):
        if index.min_voters[i] >= index.n_max:
            continue
        t = index.vector(i)
        for r in ALL_RANKINGS:
            s = apply_ranking_to_margins(t, r)
            if not better(r, table[s], table[t]):
                bad.add((i, str(r)))
    return bad


def single_better(r, new, old):
    return r.position(new) <= r.position(old)


def report_pairs(report):
    return {(n, d.split()[0].split("=")[1]) for n, d in zip(report.nodes.tolist(), report.details)}


# --- text format - -------------------------------------------------------------


def test_sample_rows_roundtrip_byte_identically():
    lines = SAMPLE_ROWS.read_text().splitlines()
    assert len(lines) == 28
    for k, line in enumerate(lines, start=1):
        vec, n, choice = parse_entry(line, k)
        assert format_entry(vec, n, choice) == line


def test_entry_examples():
    assert format_entry((1, 1, 1, 1, 1, 1), 1, 0) == "a,#1,(1,1,1,1,1,1)"
    vec, n, choice = parse_entry("c,#11,(3,-11,-1,-9,1,7)")
    assert vec == (3, -11, -1, -9, 1, 7) and n == 11 and choice == 2
    assert format_entry((0, 0, 0, 0, 0, 0), 2, frozenset({0, 2})) == "ac,#2,(0,0,0,0,0,0)"
    assert parse_entry("ac,#2,(0,0,0,0,0,0)")[2] == {0, 2}


@pytest.mark.parametrize(
    "line, col",
    [("e,#1,(1,1,1,1,1,1)", 1), ("a,#1,(1,1,1,1,1)", 16), ("a;#1,(1,1,1,1,1,1)", 2), ("ba,#1,(1,1,1,1,1,1)", 1)],
)
def test_parse_errors_carry_position(line, col):
    with pytest.raises(ParseError) as err:
        parse_entry(line, 7)
    assert err.value.line == 7 and err.value.column == col


@given(
    st.tuples(*[st.integers(-31, 31)] * 6),
    st.integers(1, 31),
    st.sets(st.integers(0, 3), min_size=1),
)
def test_entry_roundtrip_property(vec, n, s):
    line = format_entry(vec, n, frozenset(s))
    assert parse_entry(line, mode="set") == (vec, n, frozenset(s))


@pytest.mark.parametrize("suffix", [".txt", ".txt.gz"])
def test_table_file_roundtrip(index3, tmp_path, suffix):
    table = maximin_lex_table(index3)
    write_table(table, tmp_path / ("t" + suffix))
    back = read_table(tmp_path / ("t" + suffix))
    assert np.array_equal(back.keys, table.keys) and np.array_equal(back.choice, table.choice)
    sets = table.as_sets()
    write_table(sets, tmp_path / "s.txt")
    # singleton sets print like single choices, so the mode must be stated
    assert read_table(tmp_path / "s.txt").mode == "single"
    assert np.array_equal(read_table(tmp_path / "s.txt", mode="set").choice, sets.choice)


def test_table_invariants():
    with pytest.raises(TableError):
        RuleTable([1, 1], [1, 1], [0, 0])
    with pytest.raises(TableError):
        RuleTable([1], [1], [4])
    with pytest.raises(TableError):
        RuleTable([1], [1], [0], mode="set")


# --- decoding --------------------------------------------------------------------


@pytest.fixture(scope="module")
def kemeny3(tmp_path_factory):
    d = tmp_path_factory.mktemp("k3")
    write_encoding(EncodingConfig(n_max=3, rule_class="kemeny"), d / "k3.cnf", varmap_path=d / "k3.map")
    v = solve(d / "k3.cnf")
    assert v.status == SAT
    return v.assignment, read_varmap(d / "k3.map")


def test_decode_model(kemeny3, index3):
    assignment, vm = kemeny3
    table = decode_model(assignment, vm)
    assert len(table) == len(index3)
    assert table[(1, 1, 1, 1, 1, 1)] == 0
    for name in ("condorcet", "participation", "kemeny"):
        assert VERIFIERS[name](table, index3).clean
    sets = decode_set_model(assignment, vm)
    assert sets.mode == "set" and np.array_equal(sets.choice, table.masks)


def test_decode_rejects_mode_violation(kemeny3):
    assignment, vm = kemeny3
    broken = assignment.copy()
    broken[1:5] = True
    with pytest.raises(TableError, match="mode violation"):
        decode_model(broken, vm)
    broken[1:5] = False
    with pytest.raises(TableError, match="mode violation"):
        decode_set_model(broken, vm)


# --- verifiers vs brute force -----------------------------------------------------


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_participation_verifier_matches_oracle(index3, seed):
    rng = np.random.default_rng(seed)
    table = RuleTable(index3.keys, index3.min_voters, rng.integers(0, 4, len(index3)))
    assert report_pairs(verify_participation(table, index3)) == oracle_edge_violations(table, index3, single_better)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_set_verifiers_match_oracle(index3, seed):
    rng = np.random.default_rng(seed)
    table = RuleTable(index3.keys, index3.min_voters, rng.integers(1, 16, len(index3)), "set")
    opt = lambda r, new, old: min(map(r.position, new)) <= min(map(r.position, old))  # noqa: E731
    pess = lambda r, new, old: max(map(r.position, new)) <= max(map(r.position, old))  # noqa: E731
    assert report_pairs(verify_optimistic(table, index3)) == oracle_edge_violations(table, index3, opt)
    assert report_pairs(verify_pessimistic(table, index3)) == oracle_edge_violations(table, index3, pess)


def test_constant_table_condorcet_violations(index3):
    table = constant_table(index3, 0)
    report = verify_condorcet(table, index3)
    expected = [i for i in range(len(index3)) if condorcet_winner(index3.vector(i)) not in (None, 0)]
    assert report.nodes.tolist() == expected
    full = constant_table(index3, frozenset(range(4)), mode="set")
    assert verify_optimistic(full, index3).clean and verify_pessimistic(full, index3).clean


def test_maximin_lex_fails_participation_on_the_six_voter_profile():
    idx = enumerate_tournaments(7)
    table = maximin_lex_table(idx)
    R = margins_of_profile(Profile.parse("abdc:1,bdca:2,cabd:2,dcab:1"))
    report = verify_participation(table, idx)
    assert any(n == idx.index_of(R) for n in report.nodes.tolist())


def test_maximin_lex_leaves_top_cycle(index4):
    assert not verify_topcycle(maximin_lex_table(index4), index4).clean


def test_condorcet_winner_tables_pass_node_checks(index3):
    def pick(G, _):
        return np.maximum(condorcet_winner_many(G), 0)

    table = table_from_index(index3, pick)
    assert verify_condorcet(table, index3).clean


def test_incomplete_table_rejected(index3):
    table = maximin_lex_table(index3)
    short = RuleTable(table.keys[1:], table.voters[1:], table.choice[1:])
    with pytest.raises(TableError, match="incomplete"):
        verify_condorcet(short, index3)


def test_stats(index3):
    stats = compute_stats(maximin_lex_table(index3), index3)
    assert stats.maximin_lex == 1.0 and stats.maximin == 1.0
    assert stats.condorcet == condorcet_fraction(index3)
    assert stats.lines()[0] == f"nodes {len(index3)}"
