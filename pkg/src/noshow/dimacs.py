"""Chunked DIMACS / GCNF reading with numpy.

Files are read in blocks cut at line ends; each block is parsed with a
single C-level conversion, so multi-gigabyte instances stream in constant
memory.  Clauses may span lines in plain DIMACS; GCNF clauses must sit on
one line, each prefixed by ``{group}``.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

_COMMENT = re.compile(rb"(?m)^c.*(?:\n|$)")
_GROUP = re.compile(rb"\{(\d+)\}")


class DimacsError(ValueError):
    pass


@dataclass
class Header:
    kind: str  # "cnf" or "gcnf"
    n_vars: int
    n_clauses: int
    n_groups: int
    offset: int  # byte offset of the first clause line


def read_header(path) -> Header:
    with open(path, "rb") as fh:
        offset = 0
        for line in fh:
            offset += len(line)
            s = line.strip()
            if not s or s.startswith(b"c"):
                continue
            if s.startswith(b"p"):
                parts = s.split()
                try:
                    if parts[1] == b"cnf" and len(parts) == 4:
                        return Header("cnf", int(parts[2]), int(parts[3]), 0, offset)
                    if parts[1] == b"gcnf" and len(parts) == 5:
                        return Header("gcnf", int(parts[2]), int(parts[3]), int(parts[4]), offset)
                except ValueError:
                    pass
                raise DimacsError(f"malformed problem line: {s.decode(errors='replace')}")
            raise DimacsError("clause data before the problem line")
    raise DimacsError("missing problem line")


def _parse_ints(block: bytes) -> np.ndarray:
    if not block.strip():
        return np.empty(0, dtype=np.int64)
    if len(block) < 4096:
        return np.array(block.split(), dtype=np.int64)
    with warnings.catch_warnings():
        # numpy reports trailing garbage as a DeprecationWarning
        warnings.simplefilter("error", DeprecationWarning)
        try:
            return np.fromstring(block, dtype=np.int64, sep=" ")
        except DeprecationWarning as exc:
            raise ValueError(str(exc)) from None


def iter_blocks(path, block_bytes: int = 1 << 26) -> Iterator[tuple]:
    """Yield ``(lits, groups)`` per block.

    ``lits`` holds whole clauses, each terminated by 0; ``groups`` gives the
    group of each of those clauses (None for plain CNF).
    """
    head = read_header(path)
    gcnf = head.kind == "gcnf"
    carry = np.empty(0, dtype=np.int64)
    with open(path, "rb") as fh:
        fh.seek(head.offset)
        rest = b""
        eof = False
        while not eof:
            data = fh.read(block_bytes)
            eof = len(data) < block_bytes
            data = rest + data
            rest = b""
            if b"%" in data:
                data = data[: data.index(b"%")]
                eof = True
            if not eof:
                cut = data.rfind(b"\n")
                if cut < 0:
                    rest = data
                    continue
                data, rest = data[: cut + 1], data[cut + 1 :]
            if data.startswith(b"c") or b"\nc" in data:
                data = _COMMENT.sub(b"", data)
            groups = None
            if gcnf:
                groups = np.array(_GROUP.findall(data), dtype=np.int64)
                data = _GROUP.sub(b" ", data)
            try:
                lits = _parse_ints(data)
            except ValueError as exc:
                raise DimacsError(f"non-integer token in clause data: {exc}") from None
            if carry.size:
                if gcnf:
                    raise DimacsError("GCNF clause split across lines")
                lits = np.concatenate([carry, lits])
            zeros = np.flatnonzero(lits == 0)
            end = zeros[-1] + 1 if zeros.size else 0
            carry = lits[end:]
            lits = lits[:end]
            if gcnf and len(groups) != zeros.size:
                raise DimacsError("every GCNF clause needs exactly one {group} prefix")
            if lits.size:
                yield lits, groups
        if carry.size:
            raise DimacsError("last clause is not terminated by 0")


def clause_bounds(lits: np.ndarray) -> tuple:
    """Start and end (exclusive, excluding the 0) of each clause in ``lits``."""
    ends = np.flatnonzero(lits == 0)
    starts = np.concatenate([[0], ends[:-1] + 1])
    return starts, ends


def iter_clauses(path) -> Iterator[tuple]:
    """``(group_or_None, [lits])`` per clause; for small files and tests."""
    for lits, groups in iter_blocks(path):
        as_list = lits.tolist()
        starts, ends = clause_bounds(lits)
        for k, (s, e) in enumerate(zip(starts.tolist(), ends.tolist())):
            yield (int(groups[k]) if groups is not None else None), as_list[s:e]


def count(path) -> tuple:
    """Independent recount: (clauses, max variable, distinct groups)."""
    n = 0
    top = 0
    groups: set = set()
    for lits, g in iter_blocks(path):
        n += int(np.count_nonzero(lits == 0))
        if lits.size:
            top = max(top, int(np.abs(lits).max()))
        if g is not None:
            groups.update(np.unique(g).tolist())
    return n, top, len(groups)


def write_cnf(path, clauses, n_vars: Optional[int] = None, comments=()) -> None:
    clauses = list(clauses)
    if n_vars is None:
        n_vars = max((abs(l) for c in clauses for l in c), default=0)
    with open(path, "w") as fh:
        for c in comments:
            fh.write(f"c {c}\n")
        fh.write(f"p cnf {n_vars} {len(clauses)}\n")
        for c in clauses:
            fh.write(" ".join(map(str, c)) + " 0\n")


def write_gcnf(path, grouped, n_vars: Optional[int] = None, comments=()) -> None:
    """``grouped`` is a sequence of (group, clause); group 0 is the hard group."""
    grouped = list(grouped)
    if n_vars is None:
        n_vars = max((abs(l) for _, c in grouped for l in c), default=0)
    n_groups = len({g for g, _ in grouped if g})
    with open(path, "w") as fh:
        for c in comments:
            fh.write(f"c {c}\n")
        fh.write(f"p gcnf {n_vars} {len(grouped)} {n_groups}\n")
        for g, c in grouped:
            fh.write(f"{{{g}}} " + " ".join(map(str, c)) + " 0\n")


def digest(path, chunk: int = 1 << 24) -> str:
    import hashlib

    h = hashlib.sha256()
    with open(path, "rb") as fh:
        while True:
            b = fh.read(chunk)
            if not b:
                break
            h.update(b)
    return h.hexdigest()


def file_exists(path) -> bool:
    return Path(path).is_file()
