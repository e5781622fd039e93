"""Command-line entry points: ``noshow <subcommand> ...``.

Every subcommand writes its artifacts plus a line-oriented run manifest
(configuration, input and output digests, wall time).  Exit codes:

    0  success (SAT, clean table, VALID certificate, oracle agreement)
    1  negative result (UNSAT, violations, INVALID, oracle mismatch)
    2  configuration error (bad flags or combinations)
    3  input-format error (unparseable file)
    4  tool failure (solver/MUS tool missing, crashed or timed out)
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dimacs, proofs, rules, solvers
from .encoding import ConfigError, EncodingConfig, read_varmap, write_encoding
from .rules import ParseError, TableError
from .tournaments import enumerate_tournaments, oracle_enumerate, read_index, write_index, write_stats
from .voting import Profile, Ranking, VotingError, margins_of_profile

log = logging.getLogger("noshow")

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_TOOL = 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RunManifest:
    subcommand: str
    config: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    times: dict = field(default_factory=dict)

    def add_input(self, path) -> None:
        self.inputs[str(path)] = dimacs.digest(path)

    def add_output(self, path) -> None:
        self.outputs[str(path)] = dimacs.digest(path)

    def lines(self) -> list:
        out = [f"subcommand {self.subcommand}"]
        out += [f"config {k} {v}" for k, v in sorted(self.config.items())]
        out += [f"input {p} sha256:{d}" for p, d in sorted(self.inputs.items())]
        out += [f"output {p} sha256:{d}" for p, d in sorted(self.outputs.items())]
        out += [f"time {k} {v:.3f}" for k, v in sorted(self.times.items())]
        return out

    def write(self, path) -> None:
        Path(path).write_text("\n".join(self.lines()) + "\n")


def read_manifest(path) -> RunManifest:
    m = RunManifest("")
    for line in Path(path).read_text().splitlines():
        kind, _, rest = line.partition(" ")
        if kind == "subcommand":
            m.subcommand = rest
        elif kind == "config":
            k, _, v = rest.partition(" ")
            m.config[k] = v
        elif kind in ("input", "output"):
            p, _, d = rest.rpartition(" sha256:")
            (m.inputs if kind == "input" else m.outputs)[p] = d
        elif kind == "time":
            k, _, v = rest.partition(" ")
            m.times[k] = float(v)
    return m


def _read_profile(path) -> Profile:
    try:
        return Profile.parse(Path(path).read_text().strip())
    except (VotingError, ValueError) as exc:
        raise CliError(EXIT_INPUT, f"{path}: {exc}") from None


def _read_orders(path) -> tuple:
    try:
        text = Path(path).read_text().replace(",", " ")
        return tuple(Ranking.parse(tok) for tok in text.split())
    except (VotingError, ValueError) as exc:
        raise CliError(EXIT_INPUT, f"{path}: {exc}") from None


def _index_for(args, manifest: RunManifest):
    if getattr(args, "index", None):
        manifest.add_input(args.index)
        return read_index(args.index)
    return enumerate_tournaments(args.n)


# --- subcommands ----------------------------------------------------------------


def cmd_enumerate(args, manifest: RunManifest) -> int:
    seed, seed_voters = None, 0
    if args.seed_profile:
        manifest.add_input(args.seed_profile)
        prof = _read_profile(args.seed_profile)
        seed, seed_voters = margins_of_profile(prof), prof.n
        manifest.config["seed_profile"] = str(prof)
    manifest.config["n"] = args.n
    try:
        index = enumerate_tournaments(args.n, seed, seed_voters)
    except VotingError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_index(index, out / "index.txt")
    write_stats(index, out / "stats.txt")
    for name in ("index.txt", "stats.txt"):
        manifest.add_output(out / name)
    print(f"enumerated {len(index)} weighted tournaments (n <= {args.n})")
    return EXIT_OK


def _encoding_config(args, manifest: RunManifest) -> EncodingConfig:
    kw = dict(n_max=args.n, rule_class=args.rule, top_cycle=args.top_cycle, pareto=args.pareto)
    if args.set_valued:
        kw["value_mode"] = "set"
        kw["directions"] = {"opt", "pess"} if args.set_valued == "both" else {args.set_valued}
    if args.profile_space:
        if not (args.base and args.orders):
            raise CliError(EXIT_CONFIG, "--profile-space needs --base and --orders")
        manifest.add_input(args.base)
        manifest.add_input(args.orders)
        kw.update(space="profile", base=_read_profile(args.base), allowed=_read_orders(args.orders))
    elif args.base or args.orders:
        raise CliError(EXIT_CONFIG, "--base/--orders only apply with --profile-space")
    try:
        return EncodingConfig(**kw)
    except (ConfigError, VotingError) as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None


def cmd_encode(args, manifest: RunManifest) -> int:
    config = _encoding_config(args, manifest)
    for i, line in enumerate(config.describe()):
        manifest.config[f"encoding.{i}"] = line
    out = Path(args.out)
    varmap = Path(args.varmap) if args.varmap else out.with_suffix(".map")
    gcnf = args.gcnf or out.suffix == ".gcnf"
    out.parent.mkdir(parents=True, exist_ok=True)
    enc = write_encoding(config, out, gcnf=gcnf, varmap_path=varmap)
    manifest.add_output(out)
    manifest.add_output(varmap)
    print(f"{out}: {enc.n_vars} variables, {enc.n_clauses} clauses, {enc.n_groups} groups")
    return EXIT_OK


def _model_lines(assignment: np.ndarray) -> list:
    lits = [v if assignment[v] else -v for v in range(1, len(assignment))]
    rows = [lits[i : i + 20] for i in range(0, len(lits), 20)]
    return ["s SATISFIABLE"] + ["v " + " ".join(map(str, r)) for r in rows] + ["v 0"]


def cmd_solve(args, manifest: RunManifest) -> int:
    manifest.config.update(solver=args.solver or solvers.default_solver(), timeout=args.timeout)
    try:
        dimacs.read_header(args.cnf)
    except dimacs.DimacsError as exc:
        raise CliError(EXIT_INPUT, f"{args.cnf}: {exc}") from None
    manifest.add_input(args.cnf)
    verdict = solvers.solve(args.cnf, args.solver, timeout=args.timeout or None, digest=manifest.inputs[str(args.cnf)])
    manifest.times["solver"] = verdict.seconds
    print(verdict.record())
    if args.out:
        Path(args.out).write_text(verdict.record() + "\n")
    if args.model and verdict.assignment is not None:
        Path(args.model).write_text("\n".join(_model_lines(verdict.assignment)) + "\n")
        manifest.add_output(args.model)
    if verdict.status == solvers.SAT:
        return EXIT_OK
    if verdict.status == solvers.UNSAT:
        return EXIT_NEGATIVE
    raise CliError(EXIT_TOOL, "solver gave no verdict (timeout or UNKNOWN)")


def cmd_extract_rule(args, manifest: RunManifest) -> int:
    manifest.add_input(args.model)
    manifest.add_input(args.varmap)
    try:
        vm = read_varmap(args.varmap)
    except (VotingError, ValueError) as exc:
        raise CliError(EXIT_INPUT, f"{args.varmap}: {exc}") from None
    n_vars = 4 * len(vm["voters"])
    try:
        status, assignment = solvers.parse_solver_output(Path(args.model).read_bytes(), n_vars)
    except solvers.SolverOutputError as exc:
        raise CliError(EXIT_INPUT, f"{args.model}: {exc}") from None
    if status != solvers.SAT:
        raise CliError(EXIT_INPUT, f"{args.model} does not contain a satisfying assignment")
    out = Path(args.out)
    if vm["kind"] == "profile":
        chosen = rules.decode_profile_model(assignment, vm)
        out.write_text("".join(f"{p} {''.join('abcd'[x] for x in sorted(s))}\n" for p, s in chosen.items()))
    else:
        decode = rules.decode_set_model if args.set_valued else rules.decode_model
        rules.write_table(decode(assignment, vm), out)
    manifest.add_output(out)
    print(f"wrote {out}")
    return EXIT_OK


DEFAULT_AXIOMS = {"single": ("condorcet", "participation"), "set": ("condorcet", "optimistic")}


def cmd_verify_rule(args, manifest: RunManifest) -> int:
    manifest.add_input(args.table)
    try:
        table = rules.read_table(args.table, "set" if args.set_valued else None)
    except ParseError as exc:
        raise CliError(EXIT_INPUT, f"{args.table}: {exc}") from None
    axioms = args.axioms.split(",") if args.axioms else DEFAULT_AXIOMS[table.mode]
    unknown = [a for a in axioms if a not in rules.VERIFIERS]
    if unknown:
        raise CliError(EXIT_CONFIG, f"unknown axioms: {','.join(unknown)}")
    manifest.config.update(n=args.n, axioms=",".join(axioms))
    index = _index_for(args, manifest)
    lines, dirty = [], False
    for name in axioms:
        t0 = time.time()
        try:
            report = rules.VERIFIERS[name](table, index)
        except TableError as exc:
            raise CliError(EXIT_INPUT, f"{args.table}: {exc}") from None
        manifest.times[name] = time.time() - t0
        lines.append(f"axiom {name} checked {report.checked} violations {report.count}")
        lines += report.lines(limit=args.limit)
        dirty |= not report.clean
    if table.mode == "single":
        lines += rules.compute_stats(table, index).lines()
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
        manifest.add_output(args.out)
    return EXIT_NEGATIVE if dirty else EXIT_OK


def cmd_mus(args, manifest: RunManifest) -> int:
    manifest.config.update(tool=args.tool or solvers.default_mus_tool(), seed=args.seed, level=args.level)
    manifest.add_input(args.gcnf)
    out = Path(args.out)
    t0 = time.time()
    if args.level == "both":
        _, core = solvers.group_then_clause_mus(args.gcnf, args.tool, args.seed, args.solver, args.timeout or None)
    else:
        core = solvers.extract_mus(args.gcnf, args.tool, args.level, args.seed, args.solver, args.timeout or None)
    manifest.times["mus"] = time.time() - t0
    solvers.write_core(core, out)
    manifest.add_output(out)
    print(f"validated {core.level} core with {len(core.members)} members")
    if args.varmap and core.level == "clause":
        manifest.add_input(args.varmap)
        doc, dot = proofs.mus_to_document([lits for _, _, lits in core.clauses], args.varmap, args.rule)
        dot_path = out.with_suffix(".dot")
        dot_path.write_text(dot)
        manifest.add_output(dot_path)
        if doc is not None:
            cert = out.with_suffix(".cert")
            cert.write_text(proofs.format_document(doc))
            manifest.add_output(cert)
            print(f"certificate draft {cert}: {proofs.check_document(doc).verdict}")
        else:
            print(f"no tree refutation found; core graph in {dot_path}")
    return EXIT_OK


def cmd_check_proof(args, manifest: RunManifest) -> int:
    path = Path(args.cert)
    try:
        if path.is_file():
            manifest.add_input(path)
            doc = proofs.load_document(path)
        elif args.cert in proofs.FIXTURES:
            manifest.config["fixture"] = args.cert
            doc = proofs.load_fixture(args.cert)
        else:
            raise CliError(EXIT_CONFIG, f"no such certificate file or fixture: {args.cert}")
        if args.lift_m:
            manifest.config["lift_m"] = args.lift_m
            doc = proofs.lift_to_m(doc, args.lift_m)
    except proofs.MalformedDocument as exc:
        raise CliError(EXIT_INPUT, f"{args.cert}: {exc}") from None
    except VotingError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    report = proofs.check_document(doc)
    text = "\n".join(report.lines()) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
        manifest.add_output(args.out)
    return EXIT_OK if report.valid else EXIT_NEGATIVE


def cmd_oracle_check(args, manifest: RunManifest) -> int:
    if not 1 <= args.n <= 4:
        raise CliError(EXIT_CONFIG, "oracle-check supports 1 <= n <= 4")
    manifest.config["n"] = args.n
    index = enumerate_tournaments(args.n)
    fast = {tuple(map(int, v)) for v in index.vectors}
    slow = {tuple(v) for v in oracle_enumerate(args.n)}
    missing, extra = slow - fast, fast - slow
    print(f"n {args.n} enumerated {len(fast)} oracle {len(slow)} missing {len(missing)} extra {len(extra)}")
    for v in sorted(missing)[:10]:
        print(f"missing {v}")
    for v in sorted(extra)[:10]:
        print(f"extra {v}")
    return EXIT_OK if not (missing or extra) else EXIT_NEGATIVE


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="noshow", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--manifest", help="manifest path (default: next to the main artifact)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("enumerate", help="weighted tournaments inducible by at most n voters")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed-profile", help="file with a profile such as abdc:1,bdca:2")
    s.add_argument("--out", default=".", help="output directory")
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("encode", help="write the CNF/GCNF encoding and its variable map")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--rule", choices=("condorcet", "maximin", "kemeny"), default="condorcet")
    s.add_argument("--top-cycle", action="store_true")
    s.add_argument("--pareto", action="store_true")
    s.add_argument("--set-valued", choices=("opt", "pess", "both"))
    s.add_argument("--profile-space", action="store_true")
    s.add_argument("--base", help="base profile file (profile space)")
    s.add_argument("--orders", help="allowed rankings file (profile space)")
    s.add_argument("--gcnf", action="store_true", help="one group per node")
    s.add_argument("--varmap")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("solve", help="run a SAT solver and check its model")
    s.add_argument("--cnf", required=True)
    s.add_argument("--solver", help="command template with {input}; default $NOSHOW_SOLVER")
    s.add_argument("--timeout", type=float, default=solvers.DEFAULT_TIMEOUT)
    s.add_argument("--model", help="write the checked model here")
    s.add_argument("--out", help="write the verdict record here")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("extract-rule", help="decode a model into a lookup table")
    s.add_argument("--model", required=True)
    s.add_argument("--varmap", required=True)
    s.add_argument("--set-valued", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_extract_rule)

    s = sub.add_parser("verify-rule", help="check a lookup table against axioms")
    s.add_argument("--table", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--index", help="index dump to use instead of enumerating")
    s.add_argument("--axioms", help="comma list from: " + ",".join(rules.VERIFIERS))
    s.add_argument("--set-valued", action="store_true", help="read single letters as singleton sets")
    s.add_argument("--limit", type=int, default=20, help="violations listed per axiom")
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify_rule)

    s = sub.add_parser("mus", help="extract and validate a minimal unsatisfiable core")
    s.add_argument("--gcnf", required=True)
    s.add_argument("--tool", help="command template with {input} and {seed}; default $NOSHOW_MUS")
    s.add_argument("--solver", help="solver template used for revalidation")
    s.add_argument("--level", choices=("group", "clause", "both"), default="both")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--timeout", type=float, default=solvers.DEFAULT_TIMEOUT)
    s.add_argument("--varmap", help="draft a certificate from the clause core")
    s.add_argument("--rule", choices=proofs.RULES, default="condorcet")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_mus)

    s = sub.add_parser("check-proof", help="machine-check a proof certificate")
    s.add_argument("--cert", required=True, help="certificate file or bundled fixture name")
    s.add_argument("--lift-m", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_check_proof)

    s = sub.add_parser("oracle-check", help="compare enumeration with brute force")
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_oracle_check)
    return p


def _manifest_path(args) -> Path:
    if args.manifest:
        return Path(args.manifest)
    out = getattr(args, "out", None)
    if args.command == "enumerate":
        return Path(out) / "enumerate.manifest"
    if out:
        return Path(str(out) + ".manifest")
    anchor = {"solve": "cnf", "verify-rule": "table"}.get(args.command)
    if anchor:
        return Path(f"{getattr(args, anchor)}.{args.command}.manifest")
    return Path(f"{args.command}.manifest")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    manifest = RunManifest(args.command)
    t0 = time.time()
    try:
        code = args.func(args, manifest)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, (ParseError, dimacs.DimacsError, proofs.MalformedDocument)):
            print(f"input error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: missing file {exc.filename or exc}", file=sys.stderr)
        return EXIT_CONFIG
    except solvers.SolverError as exc:
        print(f"tool failure: {exc}", file=sys.stderr)
        return EXIT_TOOL
    manifest.times["wall"] = time.time() - t0
    manifest.write(_manifest_path(args))
    return code


if __name__ == "__main__":
    sys.exit(main())
