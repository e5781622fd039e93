"""Machine-checkable proof diagrams.

A certificate is a tree of profiles.  Each edge adds or removes ``k``
copies of a ranking and carries a claim ``S_from -> S_to``: if the rule
picks from ``S_from`` at the source it picks from ``S_to`` at the target.
Leaves are profiles whose forced outcome (Condorcet, maximin or Kemeny
winners) misses the incoming claim.  Text form, one item per line::

    rule condorcet
    node R abdc:2,bdca:3,cabd:3,dcab:2
    root R cases ab,cd sym dcba
    edge R Ra + 2 abcd ab -> ab
    leaf L winner c [unverified]

Every step is recomputed from the profiles; nothing is taken on trust.
Alternatives that every voter ranks in a common bottom block are never
chosen by a Condorcet extension with participation, so closures and root
coverage ignore them; this is what makes padded (m > 4) proofs go through.
"""

from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from .voting import (
    Profile,
    Ranking,
    VotingError,
    add_voters,
    bad_alternatives,
    condorcet_winner,
    format_set,
    kemeny_winners,
    label,
    lower_closure,
    margin_matrix,
    maximin_winners,
    pad_with_bad,
    parse_alternative,
    parse_permutation,
    parse_set,
    relabel,
    remove_voters,
    upper_closure,
)

log = logging.getLogger(__name__)

RULES = ("condorcet", "maximin", "kemeny")
FIXTURES = ("thm1", "thm2", "thm4", "thm6")


class MalformedDocument(ValueError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class StructuralError(ValueError):
    """Declared profiles do not match the edge arithmetic."""


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    op: str  # "+" or "-"
    count: int
    ranking: Ranking
    s_from: frozenset
    s_to: frozenset

    def __str__(self) -> str:
        return (
            f"edge {self.src} {self.dst} {self.op} {self.count} {self.ranking} "
            f"{format_set(self.s_from)} -> {format_set(self.s_to)}"
        )


@dataclass(frozen=True)
class Leaf:
    node: str
    winner: int
    unverified: bool = False

    def __str__(self) -> str:
        return f"leaf {self.node} winner {label(self.winner)}" + (" unverified" if self.unverified else "")


@dataclass(frozen=True)
class SymmetryClaim:
    perm: tuple

    def orbit(self, s: frozenset) -> list:
        out, cur = [], frozenset(s)
        while cur not in out:
            out.append(cur)
            cur = relabel(cur, self.perm)
        return out


@dataclass
class ProofDocument:
    rule: str
    nodes: dict
    root: str
    cases: list
    edges: list
    leaves: dict
    symmetry: Optional[SymmetryClaim] = None
    comments: list = field(default_factory=list)

    @property
    def m(self) -> int:
        return self.nodes[self.root].m

    def children(self, node: str) -> list:
        return [e for e in self.edges if e.src == node]

    def incoming(self, node: str) -> list:
        return [e for e in self.edges if e.dst == node]


# --- text format ------------------------------------------------------------


def parse_document(text: str) -> ProofDocument:
    rule = root = None
    nodes: dict = {}
    edges: list = []
    leaves: dict = {}
    cases: list = []
    sym = None
    comments = []
    for k, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            comments.append(line[1:].strip())
            continue
        parts = line.split()
        try:
            kind = parts[0]
            if kind == "rule":
                if len(parts) != 2 or parts[1] not in RULES:
                    raise MalformedDocument(f"rule must be one of {RULES}", k)
                rule = parts[1]
            elif kind == "node":
                if len(parts) != 3:
                    raise MalformedDocument("expected: node <id> <profile>", k)
                if parts[1] in nodes:
                    raise MalformedDocument(f"duplicate node {parts[1]}", k)
                nodes[parts[1]] = Profile.parse(parts[2])
            elif kind == "root":
                if len(parts) not in (4, 6) or parts[2] != "cases":
                    raise MalformedDocument("expected: root <id> cases <sets> [sym <perm>]", k)
                root = parts[1]
                cases = [parse_set(s) for s in parts[3].split(",")]
                if len(parts) == 6:
                    if parts[4] != "sym":
                        raise MalformedDocument("expected 'sym <perm>'", k)
                    sym = SymmetryClaim(parse_permutation(parts[5], len(parts[5])))
            elif kind == "edge":
                if len(parts) != 9 or parts[7] != "->" or parts[3] not in "+-" or len(parts[3]) != 1:
                    raise MalformedDocument("expected: edge <from> <to> <+|-> <k> <ranking> <S> -> <S>", k)
                count = int(parts[4])
                if count < 1:
                    raise MalformedDocument("edge multiplicity must be positive", k)
                edges.append(
                    Edge(parts[1], parts[2], parts[3], count, Ranking.parse(parts[5]),
                         parse_set(parts[6]), parse_set(parts[8]))
                )
            elif kind == "leaf":
                if len(parts) not in (4, 5) or parts[2] != "winner" or parts[4:] not in ([], ["unverified"]):
                    raise MalformedDocument("expected: leaf <id> winner <alt> [unverified]", k)
                if parts[1] in leaves:
                    raise MalformedDocument(f"duplicate leaf {parts[1]}", k)
                leaves[parts[1]] = Leaf(parts[1], parse_alternative(parts[3]), len(parts) == 5)
            else:
                raise MalformedDocument(f"unknown item {kind!r}", k)
        except (VotingError, ValueError) as exc:
            if isinstance(exc, MalformedDocument):
                raise
            raise MalformedDocument(str(exc), k) from None
    if rule is None:
        raise MalformedDocument("missing rule line")
    if root is None:
        raise MalformedDocument("missing root line")
    return ProofDocument(rule, nodes, root, cases, edges, leaves, sym, comments)


def format_document(doc: ProofDocument) -> str:
    out = [f"# {c}" for c in doc.comments]
    out.append(f"rule {doc.rule}")
    for name, p in doc.nodes.items():
        out.append(f"node {name} {p}")
    root = f"root {doc.root} cases " + ",".join(format_set(c) for c in doc.cases)
    if doc.symmetry is not None:
        root += " sym " + "".join(label(x) for x in doc.symmetry.perm)
    out.append(root)
    out.extend(str(e) for e in doc.edges)
    out.extend(str(leaf) for leaf in doc.leaves.values())
    return "\n".join(out) + "\n"


def load_document(path) -> ProofDocument:
    return parse_document(Path(path).read_text())


def load_fixture(name: str) -> ProofDocument:
    """Bundled certificates: thm1, thm2, thm4, thm6."""
    return parse_document(resources.files("noshow.fixtures").joinpath(f"{name}.cert").read_text())


def load_profile_fixture(name: str) -> Profile:
    text = resources.files("noshow.fixtures").joinpath(f"{name}.profile").read_text()
    lines = [l for l in text.splitlines() if l.strip() and not l.startswith("#")]
    return Profile.parse(lines[0].strip())


# --- checking ----------------------------------------------------------------


@dataclass(frozen=True)
class Finding:
    item: str
    ok: bool
    detail: str = ""

    def __str__(self) -> str:
        return f"{'ok  ' if self.ok else 'FAIL'} {self.item}" + (f": {self.detail}" if self.detail else "")


@dataclass
class ProofReport:
    findings: list

    @property
    def valid(self) -> bool:
        return all(f.ok for f in self.findings)

    @property
    def verdict(self) -> str:
        return "VALID" if self.valid else "INVALID"

    @property
    def failures(self) -> list:
        return [f for f in self.findings if not f.ok]

    def lines(self) -> list:
        return [str(f) for f in self.findings] + [f"verdict {self.verdict}"]


def _apply(profile: Profile, edge: Edge) -> Profile:
    if edge.op == "+":
        return add_voters(profile, edge.ranking, edge.count)
    return remove_voters(profile, edge.ranking, edge.count)


def _closure(s: frozenset, edge: Edge) -> frozenset:
    return upper_closure(s, edge.ranking) if edge.op == "+" else lower_closure(s, edge.ranking)


def check_edge(doc: ProofDocument, edge: Edge) -> Finding:
    """Soundness of one step; raises StructuralError when the arithmetic is off."""
    name = f"edge {edge.src}->{edge.dst}"
    src, dst = doc.nodes[edge.src], doc.nodes[edge.dst]
    if edge.ranking.m != src.m:
        raise StructuralError(f"{name}: ranking {edge.ranking} has {edge.ranking.m} alternatives, profile {src.m}")
    try:
        got = _apply(src, edge)
    except VotingError as exc:
        raise StructuralError(f"{name}: {exc}") from None
    if got != dst:
        raise StructuralError(f"{name}: {edge.src} {edge.op} {edge.count}*{edge.ranking} gives {got}, declared {dst}")
    need = _closure(edge.s_from, edge) - bad_alternatives(dst)
    if need <= edge.s_to:
        return Finding(name, True, f"{edge.op}{edge.count}*{edge.ranking} {format_set(edge.s_from)} -> {format_set(need)}")
    return Finding(
        name, False,
        f"closure of {format_set(edge.s_from)} under {edge.op}{edge.ranking} is {format_set(need)}, "
        f"not within {format_set(edge.s_to)}",
    )


def forced_set(rule: str, profile: Profile) -> frozenset:
    """Alternatives the rule class allows at ``profile`` (empty: nothing forced)."""
    g = margin_matrix(profile)
    if rule == "condorcet":
        w = condorcet_winner(g)
        return frozenset() if w is None else frozenset({w})
    if rule == "maximin":
        return maximin_winners(g)
    return kemeny_winners(g)


def _margins_text(profile: Profile) -> str:
    g = margin_matrix(profile)
    return " ".join(
        f"g({label(x)},{label(y)})={g[x][y]}" for x, y in itertools.combinations(range(profile.m), 2)
    )


def check_leaf(doc: ProofDocument, leaf: Leaf) -> Finding:
    name = f"leaf {leaf.node}"
    profile = doc.nodes[leaf.node]
    inc = doc.incoming(leaf.node)
    claim = inc[0].s_to if inc else frozenset(itertools.chain.from_iterable(doc.cases))
    forced = forced_set(doc.rule, profile)
    note = " (marked unverified)" if leaf.unverified else ""
    if not forced:
        return Finding(name, False, f"no {doc.rule} winner; margins {_margins_text(profile)}{note}")
    if leaf.winner not in forced:
        return Finding(
            name, False,
            f"claimed winner {label(leaf.winner)} but {doc.rule} winners are {format_set(forced)}; "
            f"margins {_margins_text(profile)}{note}",
        )
    if forced & claim:
        return Finding(name, False, f"{doc.rule} winners {format_set(forced)} meet the claim {format_set(claim)}{note}")
    return Finding(name, True, f"{doc.rule} winners {format_set(forced)} outside {format_set(claim)}{note}")


def _structure(doc: ProofDocument) -> list:
    out = []
    if doc.root not in doc.nodes:
        return [Finding("structure", False, f"root {doc.root} is not a node")]
    for e in doc.edges:
        for end in (e.src, e.dst):
            if end not in doc.nodes:
                out.append(Finding("structure", False, f"edge endpoint {end} is not a node"))
    for name in doc.leaves:
        if name not in doc.nodes:
            out.append(Finding("structure", False, f"leaf {name} is not a node"))
        elif doc.children(name):
            out.append(Finding("structure", False, f"leaf {name} has outgoing edges"))
    if out:
        return out
    indeg = {n: 0 for n in doc.nodes}
    for e in doc.edges:
        indeg[e.dst] += 1
    if indeg[doc.root]:
        out.append(Finding("structure", False, "root has an incoming edge"))
    for n, d in indeg.items():
        if n != doc.root and d != 1:
            out.append(Finding("structure", False, f"node {n} has {d} incoming edges (tree expected)"))
    seen, stack = set(), [doc.root]
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        stack.extend(e.dst for e in doc.children(n))
    for n in doc.nodes:
        if n not in seen:
            out.append(Finding("structure", False, f"node {n} is unreachable from the root"))
    if not doc.cases:
        out.append(Finding("structure", False, "root has no cases"))
    return out or [Finding("structure", True, f"{len(doc.nodes)} nodes, {len(doc.edges)} edges, tree")]


def _root_checks(doc: ProofDocument) -> list:
    root = doc.nodes[doc.root]
    target = frozenset(range(root.m)) - bad_alternatives(root)
    covered = set()
    out = []
    if doc.symmetry is not None:
        perm = doc.symmetry.perm
        if len(perm) != root.m:
            perm = perm + tuple(range(len(perm), root.m))  # fixes padded alternatives
        sym = SymmetryClaim(perm)
        fixed = relabel(root, perm) == root
        out.append(Finding(
            "symmetry", fixed,
            f"{''.join(label(x) for x in perm)} {'fixes' if fixed else 'does not fix'} the root profile",
        ))
        if fixed:
            for c in doc.cases:
                for img in sym.orbit(c):
                    covered |= img
    covered |= set(itertools.chain.from_iterable(doc.cases))
    ok = target <= covered
    out.append(Finding(
        "root coverage", ok,
        f"cases cover {format_set(covered & target)} of {format_set(target)}"
        + ("" if ok else f"; missing {format_set(target - covered)}"),
    ))
    return out


def _coverage(doc: ProofDocument) -> list:
    out = []
    stack = [(doc.root, frozenset(itertools.chain.from_iterable(doc.cases)))]
    while stack:
        node, claim = stack.pop()
        if node in doc.leaves:
            continue
        kids = doc.children(node)
        if not kids:
            out.append(Finding(f"branch {node}", False, "dead end: neither a leaf nor split further"))
            continue
        union = frozenset().union(*(e.s_from for e in kids))
        stray = [e for e in kids if not e.s_from <= claim]
        if stray:
            out.append(Finding(
                f"branch {node}", False,
                f"case {format_set(stray[0].s_from)} is not within the claim {format_set(claim)}",
            ))
        elif not claim <= union:
            out.append(Finding(
                f"branch {node}", False,
                f"cases {','.join(format_set(e.s_from) for e in kids)} miss {format_set(claim - union)}",
            ))
        for e in kids:
            stack.append((e.dst, e.s_to))
    return out


def check_document(doc: ProofDocument) -> ProofReport:
    findings = _structure(doc)
    if not all(f.ok for f in findings):
        return ProofReport(findings)
    findings += _root_checks(doc)
    for e in doc.edges:
        try:
            findings.append(check_edge(doc, e))
        except StructuralError as exc:
            findings.append(Finding(f"edge {e.src}->{e.dst}", False, f"arithmetic: {exc}"))
    for leaf in doc.leaves.values():
        findings.append(check_leaf(doc, leaf))
    cov = _coverage(doc)
    findings += cov or [Finding("branches", True, "every case ends in a contradiction leaf")]
    return ProofReport(findings)


# --- transformations ---------------------------------------------------------


def lift_to_m(doc: ProofDocument, m: int) -> ProofDocument:
    """Pad every profile and ranking with bad alternatives up to ``m``."""
    k = m - doc.m
    if k < 0:
        raise ValueError("cannot lift to fewer alternatives")
    if k == 0:
        return doc
    nodes = {n: pad_with_bad(p, k) for n, p in doc.nodes.items()}
    edges = [replace(e, ranking=e.ranking.pad(k)) for e in doc.edges]
    sym = None
    if doc.symmetry is not None:
        p = doc.symmetry.perm
        sym = SymmetryClaim(p + tuple(range(len(p), m)))
    return ProofDocument(doc.rule, nodes, doc.root, list(doc.cases), edges, dict(doc.leaves), sym,
                         list(doc.comments) + [f"lifted to {m} alternatives"])


def mutate(doc: ProofDocument, rng: random.Random) -> tuple:
    """One random single-point mutation: (description, mutated document)."""
    kinds = ["edge-count", "edge-ranking", "node-count", "edge-claim", "leaf-winner"]
    if not doc.leaves:
        kinds.remove("leaf-winner")
    kind = rng.choice(kinds)
    edges = list(doc.edges)
    nodes = dict(doc.nodes)
    leaves = dict(doc.leaves)
    alts = frozenset(range(doc.m))
    if kind == "edge-count":
        i = rng.randrange(len(edges))
        delta = rng.choice([-1, 1]) if edges[i].count > 1 else 1
        edges[i] = replace(edges[i], count=edges[i].count + delta)
        what = f"count of edge {i} {delta:+d}"
    elif kind == "edge-ranking":
        i = rng.randrange(len(edges))
        old = edges[i].ranking
        new = old
        while new == old:
            new = Ranking(rng.sample(range(doc.m), doc.m))
        edges[i] = replace(edges[i], ranking=new)
        what = f"ranking of edge {i} {old} -> {new}"
    elif kind == "node-count":
        name = rng.choice(sorted(nodes))
        counts = dict(nodes[name].counts)
        r = rng.choice(sorted(counts))
        delta = rng.choice([-1, 1])
        counts[r] += delta
        if not counts[r]:
            del counts[r]
        nodes[name] = Profile(counts, m=doc.m)
        what = f"count of {r} at {name} {delta:+d}"
    elif kind == "edge-claim":
        i = rng.randrange(len(edges))
        side = rng.choice(["s_from", "s_to"])
        flipped = alts - getattr(edges[i], side)
        if not flipped:
            side = "s_from" if side == "s_to" else "s_to"
            flipped = alts - getattr(edges[i], side)
        edges[i] = replace(edges[i], **{side: flipped})
        what = f"{side} of edge {i} complemented"
    else:
        name = rng.choice(sorted(leaves))
        old = leaves[name].winner
        new = rng.choice(sorted(set(range(doc.m)) - {old}))
        leaves[name] = replace(leaves[name], winner=new)
        what = f"winner of leaf {name} {label(old)} -> {label(new)}"
    return what, ProofDocument(doc.rule, nodes, doc.root, list(doc.cases), edges, leaves, doc.symmetry)


# --- from MUS cores ----------------------------------------------------------


@dataclass
class MusGraph:
    """Nodes touched by a core, participation edges ``(t, s, ranking)`` with ``s = t + ranking``,
    and the outcome restrictions that unit clauses impose."""

    kind: str
    labels: dict  # node -> Profile (profile space) or MarginVector
    voters: dict
    edges: set
    allowed: dict  # node -> frozenset of alternatives permitted by unit clauses

    def adjacent(self, node: int) -> list:
        out = []
        for t, s, r in sorted(self.edges, key=lambda e: (e[0], e[1], tuple(e[2]))):
            if t == node:
                out.append((s, "+", r))
            elif s == node:
                out.append((t, "-", r))
        return out

    @property
    def marked(self) -> dict:
        return {n: a for n, a in self.allowed.items() if len(a) < 4}


def _sign_ranking():
    from .voting import ALL_RANKINGS, ranking_signs

    return {ranking_signs(r): r for r in ALL_RANKINGS}


def core_graph(clauses, varmap) -> MusGraph:
    """Classify core clauses (lists of literals) against a variable map."""
    from .encoding import read_varmap

    if isinstance(varmap, (str, Path)):
        varmap = read_varmap(varmap)
    kind = varmap["kind"]
    table = varmap["profiles"] if kind == "profile" else varmap["vectors"]
    n_nodes = len(table)

    def node_alt(lit):
        v = abs(lit) - 1
        if v // 4 >= n_nodes:
            raise ValueError(f"variable {abs(lit)} is absent from the variable map")
        return v // 4, v % 4

    by_sign = _sign_ranking()
    labels, voters, allowed, edges = {}, {}, {}, set()

    def touch(n):
        if n not in labels:
            labels[n] = table[n] if kind == "profile" else tuple(int(x) for x in table[n])
            voters[n] = int(varmap["voters"][n])
            allowed[n] = frozenset(range(4))

    for clause in clauses:
        parts = [(lit > 0,) + node_alt(lit) for lit in clause]
        for _, n, _ in parts:
            touch(n)
        if len(parts) == 1:
            pos, n, x = parts[0]
            allowed[n] = allowed[n] & (frozenset({x}) if pos else frozenset(range(4)) - {x})
            continue
        nodes = {n for _, n, _ in parts}
        if len(nodes) == 1:
            continue  # nonempty / mutex
        neg = [(n, x) for pos, n, x in parts if not pos]
        posn = {n for pos, n, _ in parts if pos}
        if len(neg) != 1 or len(posn) != 1:
            raise ValueError(f"unrecognized clause {clause}")
        a, b = neg[0][0], posn.pop()
        t, s = (a, b) if voters[a] < voters[b] else (b, a)
        if kind == "profile":
            diff = {r: c - labels[t].count(r) for r, c in labels[s].items() if c != labels[t].count(r)}
            if len(diff) != 1 or list(diff.values()) != [1]:
                raise ValueError(f"nodes {t} and {s} differ by more than one voter")
            r = next(iter(diff))
        else:
            delta = tuple(int(u) - int(v) for u, v in zip(table[s], table[t]))
            r = by_sign[delta]
        edges.add((t, s, r))
    return MusGraph(kind, labels, voters, edges, allowed)


def _refute(graph: MusGraph, node, claim: frozenset, depth: int, memo: dict, came_from=None):
    """A tree showing that choosing from ``claim`` at ``node`` is contradictory, or None."""
    key = (node, claim, depth, came_from)
    if key in memo:
        return memo[key]
    memo[key] = None
    allowed = graph.allowed.get(node, frozenset(range(4)))
    if len(allowed) < 4 and not (allowed & claim):
        memo[key] = ("leaf", node, claim)
        return memo[key]
    if depth == 0:
        return None
    moves = [mv for mv in graph.adjacent(node) if (mv[0], mv[2]) != came_from]
    for nbr, op, r in moves:
        s2 = (upper_closure if op == "+" else lower_closure)(claim, r)
        if len(s2) == 4:
            continue
        sub = _refute(graph, nbr, s2, depth - 1, memo, (node, r))
        if sub is not None:
            memo[key] = ("step", node, [(claim, nbr, op, r, s2, sub)])
            return memo[key]
    if len(claim) > 1:
        parts = []
        for x in sorted(claim):
            sub = _refute(graph, node, frozenset({x}), depth, memo, came_from)
            if sub is None or sub[0] != "step":
                return None
            parts.append(sub[2][0])
        # regroup cases that leave through the same edge when the merged claim still refutes
        groups: dict = {}
        for part in parts:
            groups.setdefault((part[1], part[2], part[3]), []).append(part)
        merged = []
        for (nbr, op, r), items in groups.items():
            s = frozenset().union(*(p[0] for p in items))
            s2 = (upper_closure if op == "+" else lower_closure)(s, r)
            sub = _refute(graph, nbr, s2, depth - 1, memo, (node, r)) if len(items) > 1 else None
            if sub is not None:
                merged.append((s, nbr, op, r, s2, sub))
            else:
                merged.extend(items)
        memo[key] = ("step", node, merged)
    return memo[key]


def _tree_size(tree) -> int:
    if tree[0] == "leaf":
        return 1
    return 1 + sum(_tree_size(b[5]) for b in tree[2])


def search_proof(graph: MusGraph, max_depth: int = 10):
    """Smallest tree (by node count, then depth) refuting every outcome at some root."""
    full = frozenset(range(4))
    for depth in range(1, max_depth + 1):
        best = None
        for root in sorted(graph.labels, key=lambda n: (graph.voters[n], n)):
            tree = _refute(graph, root, full, depth, {})
            if tree is not None and tree[0] == "step":
                if best is None or _tree_size(tree) < _tree_size(best):
                    best = tree
        if best is not None:
            return best
    return None


def tree_to_document(graph: MusGraph, tree, rule: str = "condorcet") -> ProofDocument:
    from .tournaments import enumerate_tournaments

    root_node = tree[1]
    nodes, edges, leaves = {}, [], {}
    names = itertools.count()
    if graph.kind == "profile":
        root_profile = graph.labels[root_node]
    else:
        removed = []
        _collect_removals(tree, removed)
        idx = enumerate_tournaments(max(graph.voters.values()))
        root_profile = idx.realize(graph.labels[root_node], graph.voters[root_node], prefer=removed)
    nodes["R"] = root_profile
    cases = [b[0] for b in tree[2]]

    def walk(name, tree_node):
        kind = tree_node[0]
        if kind == "leaf":
            node = tree_node[1]
            forced = forced_set(rule, nodes[name])
            allowed = graph.allowed.get(node, frozenset(range(4)))
            winner = min(forced or allowed)
            leaves[name] = Leaf(name, winner)
            return
        for claim, nbr, op, r, s2, sub in tree_node[2]:
            child = f"n{next(names) + 1}"
            e = Edge(name, child, op, 1, r, claim, s2)
            nodes[child] = _apply(nodes[name], e)
            edges.append(e)
            walk(child, sub)

    walk("R", tree)
    doc = ProofDocument(rule, nodes, "R", cases, edges, leaves)
    return compress_chains(doc)


def _collect_removals(tree, out: list) -> None:
    if tree[0] == "step":
        for _, _, op, r, _, sub in tree[2]:
            if op == "-":
                out.append(r)
            _collect_removals(sub, out)


def compress_chains(doc: ProofDocument) -> ProofDocument:
    """Fold runs of identical single-voter steps into one k-fold edge."""
    edges = list(doc.edges)
    nodes = dict(doc.nodes)
    changed = True
    while changed:
        changed = False
        for e in edges:
            kids = [f for f in edges if f.src == e.dst]
            if len(kids) == 1 and e.dst not in doc.leaves:
                f = kids[0]
                if f.op == e.op and f.ranking == e.ranking and f.s_from == e.s_to:
                    merged = Edge(e.src, f.dst, e.op, e.count + f.count, e.ranking, e.s_from, f.s_to)
                    edges = [x for x in edges if x not in (e, f)] + [merged]
                    del nodes[e.dst]
                    changed = True
                    break
    order = {n: i for i, n in enumerate(doc.nodes)}
    edges.sort(key=lambda x: order[x.dst])
    return ProofDocument(doc.rule, nodes, doc.root, doc.cases, edges, doc.leaves, doc.symmetry, doc.comments)


def find_symmetry(doc: ProofDocument) -> Optional[SymmetryClaim]:
    """A non-trivial relabelling fixing the root profile, if any."""
    root = doc.nodes[doc.root]
    for perm in itertools.permutations(range(root.m)):
        if perm != tuple(range(root.m)) and relabel(root, perm) == root:
            return SymmetryClaim(perm)
    return None


def mus_to_document(clauses, varmap, rule: str = "condorcet", max_depth: int = 12) -> tuple:
    """(document or None, DOT text) for a clause-level core."""
    graph = core_graph(clauses, varmap)
    tree = search_proof(graph, max_depth)
    doc = tree_to_document(graph, tree, rule) if tree is not None else None
    if doc is not None:
        doc.symmetry = find_symmetry(doc)
        doc.comments.append(f"derived from a core touching {len(graph.labels)} nodes")
    return doc, (document_dot(doc) if doc is not None else graph_dot(graph))


def certificate_from_instance(gcnf_path, varmap, seeds=range(2, 12), rule: str = "condorcet", **kw) -> tuple:
    """Try MUS seeds until a core yields a VALID tree certificate.

    Returns ``(seed, document, clause core)``; raises StructuralError when
    every seed produces a core whose refutation needs shared subproofs.
    """
    from .solvers import group_then_clause_mus

    for seed in seeds:
        _, ccore = group_then_clause_mus(gcnf_path, seed=seed, **kw)
        doc, _ = mus_to_document([lits for _, _, lits in ccore.clauses], varmap, rule)
        if doc is not None and check_document(doc).valid:
            doc.comments.append(f"mus seed {seed}")
            return seed, doc, ccore
        log.info("seed %d: core does not yield a tree certificate", seed)
    raise StructuralError("no seed produced a tree-shaped certificate")


# --- DOT ----------------------------------------------------------------------


def document_dot(doc: ProofDocument) -> str:
    out = ["digraph proof {", "  node [shape=box, fontname=monospace];"]
    for name, p in doc.nodes.items():
        if name in doc.leaves:
            out.append(f'  "{name}" [shape=circle, label="{label(doc.leaves[name].winner)}"];')
        else:
            out.append(f'  "{name}" [label="{name}\\n{p}"];')
    for e in doc.edges:
        k = f"{e.count}·" if e.count > 1 else ""
        out.append(
            f'  "{e.src}" -> "{e.dst}" [label="{e.op}{k}{e.ranking}  '
            f'{format_set(e.s_from)}→{format_set(e.s_to)}"];'
        )
    out.append("}")
    return "\n".join(out) + "\n"


def graph_dot(graph: MusGraph) -> str:
    out = ["digraph core {", "  node [shape=box, fontname=monospace];"]
    for n, lab in graph.labels.items():
        text = str(lab) if graph.kind == "profile" else "(" + ",".join(map(str, lab)) + ")"
        allowed = graph.allowed[n]
        if len(allowed) < 4:
            out.append(f'  "{n}" [shape=ellipse, label="{text}\\n{format_set(allowed)}"];')
        else:
            out.append(f'  "{n}" [label="{text}"];')
    for t, s, r in sorted(graph.edges, key=lambda e: (e[0], e[1])):
        out.append(f'  "{t}" -> "{s}" [label="+{r}"];')
    out.append("}")
    return "\n".join(out) + "\n"
