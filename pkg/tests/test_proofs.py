import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noshow.encoding import EncodingConfig, write_encoding
from noshow.proofs import (
    Edge,
    Leaf,
    MalformedDocument,
    ProofDocument,
    StructuralError,
    check_document,
    check_edge,
    check_leaf,
    document_dot,
    format_document,
    lift_to_m,
    load_fixture,
    load_profile_fixture,
    mus_to_document,
    mutate,
    parse_document,
)
from noshow.solvers import group_then_clause_mus
from noshow.voting import Profile, Ranking, margin_matrix, parse_set

VALID_FIXTURES = ["thm1", "thm2", "thm6", "thm4_regenerated"]


def doc_with(nodes, edges, leaves=(), rule="condorcet", cases=("abcd",)):
    return ProofDocument(
        rule,
        {k: Profile.parse(v) for k, v in nodes.items()},
        next(iter(nodes)),
        [parse_set(c) for c in cases],
        list(edges),
        {leaf.node: leaf for leaf in leaves},
    )


def edge(src, dst, op, k, r, s_from, s_to):
    return Edge(src, dst, op, k, Ranking.parse(r), parse_set(s_from), parse_set(s_to))


# --- single steps ---------------------------------------------------------------


def test_removal_edge_from_the_diagram_is_sound():
    doc = doc_with(
        {"n1": "abcd:2,abdc:2,bdca:3,cabd:3,dcab:1", "Rb": "abcd:2,abdc:2,bdca:3,cabd:1,dcab:1"},
        [edge("n1", "Rb", "-", 2, "cabd", "b", "bd")],
    )
    assert check_edge(doc, doc.edges[0]).ok


def test_addition_edges():
    nodes = {"R": "abdc:2,bdca:3,cabd:3,dcab:2", "Ra": "abcd:2,abdc:2,bdca:3,cabd:3,dcab:2"}
    assert check_edge(doc_with(nodes, []), edge("R", "Ra", "+", 2, "abcd", "ab", "ab")).ok
    bad = check_edge(doc_with(nodes, []), edge("R", "Ra", "+", 2, "abcd", "c", "c"))
    assert not bad.ok and "abc" in bad.detail


def test_edge_arithmetic_mismatch_raises():
    doc = doc_with({"R": "abcd:1", "S": "abcd:3"}, [])
    with pytest.raises(StructuralError):
        check_edge(doc, edge("R", "S", "+", 1, "abcd", "a", "a"))
    with pytest.raises(StructuralError):
        check_edge(doc, edge("R", "S", "-", 1, "dcba", "a", "a"))


def test_leaf_checks():
    thm6 = doc_with(
        {"Ra": "abcd:2,abdc:2,bdca:3,cabd:3,dcab:2", "Lc": "abcd:2,abdc:2,acbd:3,bdca:3,cabd:3,dcab:2"},
        [edge("Ra", "Lc", "+", 3, "acbd", "ab", "ab")],
    )
    assert check_leaf(thm6, Leaf("Lc", 2)).ok
    assert not check_leaf(thm6, Leaf("Lc", 0)).ok
    thm1 = doc_with(
        {"R": "abdc:1,bdca:2,cabd:2,dcab:1", "A": "abcd:1,abdc:1,bdca:2,cabd:2,dcab:1"},
        [edge("R", "A", "+", 1, "abcd", "ab", "ab")],
        rule="maximin",
    )
    assert check_leaf(thm1, Leaf("A", 2)).ok


def test_leaf_without_condorcet_winner_reports_margins():
    doc = doc_with(
        {"Rb": "abcd:2,abdc:2,bdca:3,cabd:1,dcab:1", "La": "abcd:2,abdc:2,badc:1,bdca:3,cabd:1,dcab:1"},
        [edge("Rb", "La", "+", 1, "badc", "b", "b")],
    )
    finding = check_leaf(doc, Leaf("La", 0))
    assert not finding.ok
    assert "g(a,c)=0" in finding.detail
    assert margin_matrix(doc.nodes["La"])[0][2] == 0


# --- fixtures ----------------------------------------------------------------------


@pytest.mark.parametrize("name, leaves", [("thm1", 2), ("thm2", 4), ("thm6", 4)])
def test_fixtures_valid(name, leaves):
    doc = load_fixture(name)
    report = check_document(doc)
    assert report.valid, report.lines()
    assert len(doc.leaves) == leaves
    assert doc.symmetry is not None


def test_thm6_leaf_winners():
    doc = load_fixture("thm6")
    assert {doc.leaves["La"].winner, doc.leaves["Lc"].winner} == {0, 2}


@pytest.mark.parametrize("name", ["thm1", "thm2", "thm6"])
def test_lifted_fixtures_stay_valid(name):
    doc = load_fixture(name)
    lifted = lift_to_m(doc, 5)
    assert lifted.m == 5
    assert check_document(lifted).valid
    assert lift_to_m(doc, 4) is doc
    with pytest.raises(ValueError):
        lift_to_m(doc, 3)


def test_thm4_fixture_flags_the_printed_leaves():
    report = check_document(load_fixture("thm4"))
    assert report.verdict == "INVALID"
    failed = {f.item for f in report.failures}
    assert failed == {"leaf La", "leaf Ld"}
    assert all("no condorcet winner" in f.detail and "unverified" in f.detail for f in report.failures)


def test_regenerated_thm4_certificate_valid():
    doc = load_fixture("thm4_regenerated")
    assert check_document(doc).valid
    assert doc.nodes[doc.root].n <= 12


def test_seven_voter_profile_fixture():
    assert load_profile_fixture("thm7").n == 14


@pytest.mark.parametrize("name", VALID_FIXTURES)
def test_twenty_mutations_all_fail(name):
    doc = load_fixture(name)
    rng = random.Random(f"mutations-{name}")
    for _ in range(20):
        what, mutated = mutate(doc, rng)
        assert not check_document(mutated).valid, what


# --- text format ------------------------------------------------------------------


@pytest.mark.parametrize("name", VALID_FIXTURES + ["thm4"])
def test_format_roundtrip(name):
    doc = load_fixture(name)
    text = format_document(doc)
    assert format_document(parse_document(text)) == text


@pytest.mark.parametrize(
    "text, line",
    [
        ("rule borda\n", 1),
        ("rule condorcet\nnode R abcd:1\nroot R cases a\nedge R S + 1 abcd a a\n", 4),
        ("rule condorcet\nnode R abcd:1\nnode R abcd:2\n", 3),
        ("rule condorcet\nnode R abcz:1\n", 2),
        ("rule condorcet\nfoo\n", 2),
        ("rule condorcet\nnode R abcd:1\nroot R cases a\nleaf R winner a maybe\n", 4),
    ],
)
def test_malformed_documents(text, line):
    with pytest.raises(MalformedDocument) as err:
        parse_document(text)
    assert err.value.line == line


def test_missing_root_or_rule():
    with pytest.raises(MalformedDocument):
        parse_document("node R abcd:1\n")
    with pytest.raises(MalformedDocument):
        parse_document("rule condorcet\nnode R abcd:1\n")


def test_structure_checks():
    doc = load_fixture("thm1")
    doc.edges.append(doc.edges[0])
    report = check_document(doc)
    assert not report.valid and report.failures[0].item == "structure"


def test_dot_output():
    dot = document_dot(load_fixture("thm1"))
    assert dot.startswith("digraph") and "abcd" in dot


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_mutations_are_single_point(seed):
    doc = load_fixture("thm2")
    _, mutated = mutate(doc, random.Random(seed))
    diffs = sum(a != b for a, b in zip(doc.edges, mutated.edges))
    diffs += sum(doc.nodes[k] != mutated.nodes[k] for k in doc.nodes)
    diffs += sum(doc.leaves[k] != mutated.leaves[k] for k in doc.leaves)
    assert diffs == 1


# --- from a core ---------------------------------------------------------------------


def test_kemeny_core_gives_four_leaf_star(tmp_path):
    write_encoding(EncodingConfig(n_max=4, rule_class="kemeny"), tmp_path / "k4.gcnf", gcnf=True,
                   varmap_path=tmp_path / "k4.map")
    _, core = group_then_clause_mus(tmp_path / "k4.gcnf", seed=0)
    doc, dot = mus_to_document([lits for _, _, lits in core.clauses], tmp_path / "k4.map", "kemeny")
    assert doc is not None and check_document(doc).valid
    assert len(doc.leaves) == 4 and len(doc.edges) == 4
    root = doc.nodes[doc.root]
    assert root.n == 4 and all(c == 1 for _, c in root.items())
    assert doc.symmetry is not None
    assert dot.startswith("digraph")
