"""Running external SAT and MUS executables and validating what they return.

Nothing a solver prints is used downstream until it has been checked here:
models against every clause of the instance, MUS cores by re-solving the
core (must be unsatisfiable) and the core minus one member (must be
satisfiable).

Command templates are shell-style strings with placeholders:
``{input}`` (required), ``{python}`` (this interpreter), ``{timeout}``
(seconds) and ``{seed}``.  The environment variables ``NOSHOW_SOLVER`` and
``NOSHOW_MUS`` override the defaults, which run the bundled pysat front
ends.
"""

from __future__ import annotations

import logging
import os
import random
import shlex
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import dimacs

log = logging.getLogger(__name__)

DEFAULT_SOLVER = "{python} -m noshow.satrun --solver kissat404 {input}"
DEFAULT_MUS = "{python} -m noshow.musrun --seed {seed} {input}"
DEFAULT_TIMEOUT = 2 * 3600.0

SAT, UNSAT, UNKNOWN = "SAT", "UNSAT", "UNKNOWN"


class SolverError(RuntimeError):
    pass


class SolverNotFound(SolverError):
    pass


class SolverOutputError(SolverError):
    pass


class SolverExitError(SolverError):
    pass


class UnsoundCore(SolverError):
    pass


def default_solver() -> str:
    return os.environ.get("NOSHOW_SOLVER", DEFAULT_SOLVER)


def default_mus_tool() -> str:
    return os.environ.get("NOSHOW_MUS", DEFAULT_MUS)


@dataclass
class SolverVerdict:
    status: str
    assignment: Optional[np.ndarray] = None  # bool per variable, index 0 unused
    solver: str = ""
    seconds: float = 0.0
    digest: str = ""

    @property
    def model(self) -> Optional[set]:
        """True variable ids."""
        if self.assignment is None:
            return None
        return set(np.flatnonzero(self.assignment).tolist())

    def record(self) -> str:
        return f"instance {self.digest} status {self.status} time {self.seconds:.2f}"


def _command(template: str, input_path, timeout: Optional[float] = None, seed: int = 0) -> list:
    if "{input}" not in template:
        raise ValueError("command template needs an {input} placeholder")
    subs = {
        "input": str(input_path),
        "python": sys.executable,
        "timeout": str(int(timeout)) if timeout else "0",
        "seed": str(seed),
    }
    return [tok.format(**subs) for tok in shlex.split(template)]


def _run(cmd: list, timeout: Optional[float]):
    try:
        proc = subprocess.Popen(cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    except FileNotFoundError as exc:
        raise SolverNotFound(f"executable not found: {cmd[0]}") from exc
    except PermissionError as exc:
        raise SolverNotFound(f"executable not runnable: {cmd[0]}") from exc
    try:
        out, err = proc.communicate(timeout=timeout)
    except subprocess.TimeoutExpired:
        proc.kill()
        proc.communicate()
        return None, None, None
    return proc.returncode, out, err


def parse_solver_output(text: bytes, n_vars: int) -> tuple:
    """(status, assignment) from competition-format output."""
    status = None
    vals = []
    for line in text.splitlines():
        if line.startswith(b"s "):
            word = line[2:].strip()
            if word == b"SATISFIABLE":
                status = SAT
            elif word == b"UNSATISFIABLE":
                status = UNSAT
            elif word in (b"UNKNOWN", b"INDETERMINATE"):
                status = UNKNOWN
            else:
                raise SolverOutputError(f"unrecognized status line: {line!r}")
        elif line.startswith(b"v"):
            try:
                vals.append(np.array(line[1:].split(), dtype=np.int64))
            except ValueError:
                raise SolverOutputError(f"malformed value line: {line[:60]!r}") from None
    if status != SAT:
        return status, None
    lits = np.concatenate(vals) if vals else np.empty(0, dtype=np.int64)
    lits = lits[lits != 0]
    if lits.size and np.abs(lits).max() > n_vars:
        lits = lits[np.abs(lits) <= n_vars]  # auxiliary variables of the solver
    assignment = np.zeros(n_vars + 1, dtype=bool)
    seen = np.zeros(n_vars + 1, dtype=bool)
    seen[np.abs(lits)] = True
    assignment[lits[lits > 0]] = True
    if n_vars and not seen[1:].all():
        missing = int(np.count_nonzero(~seen[1:]))
        raise SolverOutputError(f"model leaves {missing} variables unassigned")
    return status, assignment


def solve(
    cnf_path,
    template: Optional[str] = None,
    timeout: Optional[float] = DEFAULT_TIMEOUT,
    check: bool = True,
    digest: Optional[str] = None,
) -> SolverVerdict:
    """Run a solver on a DIMACS/GCNF file and return a (checked) verdict."""
    template = template or default_solver()
    path = Path(cnf_path)
    if not path.is_file():
        raise FileNotFoundError(path)
    head = dimacs.read_header(path)
    cmd = _command(template, path, timeout)
    t0 = time.time()
    code, out, err = _run(cmd, timeout)
    secs = time.time() - t0
    digest = digest or dimacs.digest(path)
    name = Path(cmd[0]).name if cmd else ""
    if code is None:
        return SolverVerdict(UNKNOWN, None, name, secs, digest)
    try:
        status, assignment = parse_solver_output(out, head.n_vars)
    except SolverOutputError:
        if code not in (0, 10, 20):
            raise SolverExitError(f"{name} exited with {code}: {err.decode(errors='replace')[-500:]}") from None
        raise
    if status is None:
        if code in (10, 20) or code == 0:
            raise SolverOutputError(f"{name} printed no status line (exit {code})")
        raise SolverExitError(f"{name} exited with {code}: {err.decode(errors='replace')[-500:]}")
    expected = {SAT: 10, UNSAT: 20}.get(status)
    if expected is not None and code not in (0, expected):
        raise SolverExitError(f"{name} reported {status} but exited with {code}")
    verdict = SolverVerdict(status, assignment, name, secs, digest)
    if status == SAT and check and not check_model(path, assignment):
        raise SolverOutputError(f"{name} returned a model that violates the instance")
    return verdict


def check_model(cnf_path, model) -> bool:
    """True iff every clause has a true literal under ``model``.

    ``model`` is a boolean array indexed by variable (index 0 unused), or an
    iterable of literals / true variable ids.
    """
    head = dimacs.read_header(cnf_path)
    if isinstance(model, np.ndarray) and model.dtype == bool:
        val = model
    else:
        val = np.zeros(head.n_vars + 1, dtype=bool)
        lits = np.fromiter((int(x) for x in model), dtype=np.int64)
        if lits.size and np.abs(lits).max() > head.n_vars:
            raise ValueError("model mentions a variable outside the instance")
        val[lits[lits > 0]] = True
    for lits, _ in dimacs.iter_blocks(cnf_path):
        var = np.abs(lits)
        if var.max(initial=0) >= len(val):
            raise ValueError(f"variable {int(var.max())} out of range for the model")
        true = val[var] == (lits > 0)
        true[lits == 0] = False
        starts, _ = dimacs.clause_bounds(lits)
        if not np.logical_or.reduceat(true, starts).all():
            return False
    return True


# --- MUS extraction -------------------------------------------------------


@dataclass
class MusCore:
    level: str  # "group" or "clause"
    members: list
    digest: str = ""
    source: str = ""
    clauses: list = field(default_factory=list)  # (member id, group, lits)

    def lines(self) -> list:
        return [f"level {self.level}", f"instance {self.digest}"] + [str(m) for m in self.members]


def write_core(core: MusCore, path) -> None:
    Path(path).write_text("\n".join(core.lines()) + "\n")


def read_core(path) -> MusCore:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("level "):
        raise ValueError("core file must start with a 'level' header")
    level = lines[0].split()[1]
    digest = ""
    rest = lines[1:]
    if rest and rest[0].startswith("instance "):
        digest = rest[0].split()[1]
        rest = rest[1:]
    return MusCore(level, [int(x) for x in rest], digest)


def select_clauses(path, level: str, members: Iterable[int]) -> list:
    """(member id, group, lits) for the chosen groups (plus hard group 0) or clause ordinals."""
    members = set(members)
    out = []
    for k, (g, lits) in enumerate(dimacs.iter_clauses(path), start=1):
        if level == "group":
            if g == 0 or g in members:
                out.append((g, g, lits))
        elif k in members:
            out.append((k, g, lits))
    return out


def _sub_instance(path, selected: list, workdir: str, name: str) -> str:
    n_vars = dimacs.read_header(path).n_vars
    sub = os.path.join(workdir, name)
    dimacs.write_cnf(sub, [c for _, _, c in selected], n_vars=n_vars)
    return sub


def revalidate(path, core: MusCore, solver_template: Optional[str] = None, seed: int = 0) -> None:
    """Core must be UNSAT, and dropping one random member must make it SAT."""
    selected = core.clauses or select_clauses(path, core.level, core.members)
    with tempfile.TemporaryDirectory() as tmp:
        sub = _sub_instance(path, selected, tmp, "core.cnf")
        if solve(sub, solver_template, timeout=None).status != UNSAT:
            raise UnsoundCore("unsound core: the core is satisfiable")
        if core.members:
            drop = random.Random(seed).choice(core.members)
            rest = [c for c in selected if c[0] != drop]
            sub2 = _sub_instance(path, rest, tmp, "minus.cnf")
            if solve(sub2, solver_template, timeout=None).status != SAT:
                raise UnsoundCore(f"unsound core: not minimal, still UNSAT without member {drop}")


def extract_mus(
    path,
    tool_template: Optional[str] = None,
    level: str = "group",
    seed: int = 0,
    solver_template: Optional[str] = None,
    timeout: Optional[float] = DEFAULT_TIMEOUT,
    validate: bool = True,
) -> MusCore:
    """Run a MUS tool and return the validated core.

    ``level='group'`` expects GCNF input and reports group ids; ``'clause'``
    reports 1-based clause ordinals of the file.
    """
    tool_template = tool_template or default_mus_tool()
    head = dimacs.read_header(path)
    if level == "group" and head.kind != "gcnf":
        raise ValueError("group-level MUS needs a GCNF instance")
    source = path
    tmp = None
    if level == "clause" and head.kind == "gcnf":
        # strip groups so that the tool sees one clause per group
        tmp = tempfile.NamedTemporaryFile("w", suffix=".cnf", delete=False)
        tmp.close()
        dimacs.write_cnf(tmp.name, [c for _, c in dimacs.iter_clauses(path)], n_vars=head.n_vars)
        source = tmp.name
    try:
        cmd = _command(tool_template, source, timeout, seed)
        code, out, err = _run(cmd, timeout)
        if code is None:
            raise SolverError("MUS tool timed out")
        status = None
        ids: list = []
        for line in out.splitlines():
            if line.startswith(b"s "):
                status = line[2:].strip().decode()
            elif line.startswith(b"v"):
                ids.extend(int(x) for x in line[1:].split())
        if status == "SATISFIABLE":
            raise SolverError("instance is satisfiable; there is no MUS")
        if status != "UNSATISFIABLE":
            raise SolverExitError(f"MUS tool failed (exit {code}): {err.decode(errors='replace')[-500:]}")
        ids = sorted(i for i in ids if i != 0)
        core = MusCore(level, ids, dimacs.digest(path), str(path))
        core.clauses = select_clauses(path, level, ids)
        if validate:
            revalidate(path, core, solver_template, seed)
        return core
    finally:
        if tmp is not None:
            os.unlink(tmp.name)


def group_then_clause_mus(
    gcnf_path,
    tool_template: Optional[str] = None,
    seed: int = 0,
    solver_template: Optional[str] = None,
    timeout: Optional[float] = DEFAULT_TIMEOUT,
) -> tuple:
    """Group MUS first, then a clause MUS inside it; both validated.

    Returns ``(group_core, clause_core)``; the clause core's members are
    clause ordinals of the original file.
    """
    gcore = extract_mus(gcnf_path, tool_template, "group", seed, solver_template, timeout)
    keep = set(gcore.members) | {0}
    ordinals = []
    for k, (g, _) in enumerate(dimacs.iter_clauses(gcnf_path), start=1):
        if g in keep:
            ordinals.append(k)
    selected = select_clauses(gcnf_path, "clause", ordinals)
    n_vars = dimacs.read_header(gcnf_path).n_vars
    with tempfile.TemporaryDirectory() as tmp:
        sub = os.path.join(tmp, "group_core.cnf")
        dimacs.write_cnf(sub, [c for _, _, c in selected], n_vars=n_vars)
        inner = extract_mus(sub, tool_template, "clause", seed, solver_template, timeout, validate=False)
    members = [ordinals[i - 1] for i in inner.members]
    ccore = MusCore("clause", members, dimacs.digest(gcnf_path), str(gcnf_path))
    ccore.clauses = select_clauses(gcnf_path, "clause", members)
    revalidate(gcnf_path, ccore, solver_template, seed)
    return gcore, ccore


def scan_boundary(make_instance, ns: Sequence[int], template: Optional[str] = None) -> dict:
    """Verdict per n for a family of instances (``make_instance(n) -> path``)."""
    return {n: solve(make_instance(n), template) for n in ns}
