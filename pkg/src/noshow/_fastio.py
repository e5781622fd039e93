"""Compiled text writers for DIMACS/GCNF clause blocks and integer tables."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _put_int(buf, pos, v):
    if v < 0:
        buf[pos] = 45  # '-'
        pos += 1
        v = -v
    if v == 0:
        buf[pos] = 48
        return pos + 1
    n = 0
    t = v
    while t > 0:
        n += 1
        t //= 10
    end = pos + n
    while v > 0:
        end -= 1
        buf[end] = 48 + v % 10
        v //= 10
    return pos + n


@njit(cache=True, inline="always")
def _open_clause(buf, pos, group, gcnf):
    if gcnf:
        buf[pos] = 123  # '{'
        pos = _put_int(buf, pos + 1, group)
        buf[pos] = 125  # '}'
        buf[pos + 1] = 32
        pos += 2
    return pos


@njit(cache=True, inline="always")
def _lit(buf, pos, v):
    pos = _put_int(buf, pos, v)
    buf[pos] = 32
    return pos + 1


@njit(cache=True, inline="always")
def _close_clause(buf, pos):
    buf[pos] = 48
    buf[pos + 1] = 10
    return pos + 2


@njit(cache=True)
def node_block(
    buf,
    lo,
    hi,
    winner,
    forbid,
    succ,
    rank_order,
    single,
    opt,
    pess,
    gcnf,
):
    """Write the clauses of nodes ``lo..hi-1``; returns (bytes, clauses).

    ``winner[i]`` is the Condorcet winner or -1, ``forbid[i]`` a bitmask of
    alternatives excluded by unit clauses, ``succ[i - lo, j]`` the node
    reached by adding a voter with ranking ``rank_order[j]`` (-1: frontier).
    """
    pos = 0
    nclauses = 0
    nrank = rank_order.shape[0]
    for i in range(lo, hi):
        g = i + 1
        base = 4 * i + 1
        pos = _open_clause(buf, pos, g, gcnf)
        for x in range(4):
            pos = _lit(buf, pos, base + x)
        pos = _close_clause(buf, pos)
        nclauses += 1
        if single:
            for x in range(4):
                for y in range(x + 1, 4):
                    pos = _open_clause(buf, pos, g, gcnf)
                    pos = _lit(buf, pos, -(base + x))
                    pos = _lit(buf, pos, -(base + y))
                    pos = _close_clause(buf, pos)
                    nclauses += 1
        w = winner[i]
        neg = 0
        if w >= 0:
            pos = _open_clause(buf, pos, g, gcnf)
            pos = _lit(buf, pos, base + w)
            pos = _close_clause(buf, pos)
            nclauses += 1
            for x in range(4):
                if x != w:
                    pos = _open_clause(buf, pos, g, gcnf)
                    pos = _lit(buf, pos, -(base + x))
                    pos = _close_clause(buf, pos)
                    nclauses += 1
                    neg |= 1 << x
        extra = forbid[i] & ~neg
        for x in range(4):
            if (extra >> x) & 1:
                pos = _open_clause(buf, pos, g, gcnf)
                pos = _lit(buf, pos, -(base + x))
                pos = _close_clause(buf, pos)
                nclauses += 1
        for j in range(nrank):
            s = succ[i - lo, j]
            if s < 0:
                continue
            sbase = 4 * s + 1
            if opt:
                for x in range(4):
                    pos = _open_clause(buf, pos, g, gcnf)
                    pos = _lit(buf, pos, -(base + x))
                    for p in range(4):
                        y = rank_order[j, p]
                        pos = _lit(buf, pos, sbase + y)
                        if y == x:
                            break
                    pos = _close_clause(buf, pos)
                    nclauses += 1
            if pess:
                for x in range(4):
                    pos = _open_clause(buf, pos, g, gcnf)
                    pos = _lit(buf, pos, -(sbase + x))
                    started = False
                    for p in range(4):
                        y = rank_order[j, p]
                        if y == x:
                            started = True
                        if started:
                            pos = _lit(buf, pos, base + y)
                    pos = _close_clause(buf, pos)
                    nclauses += 1
    return pos, nclauses


@njit(cache=True)
def int_rows(buf, rows, labels):
    """Space-separated integer rows, optionally followed by a one-byte label."""
    pos = 0
    for i in range(rows.shape[0]):
        for j in range(rows.shape[1]):
            if j:
                buf[pos] = 32
                pos += 1
            pos = _put_int(buf, pos, rows[i, j])
        if labels.shape[0]:
            buf[pos] = 32
            buf[pos + 1] = labels[i]
            pos += 2
        buf[pos] = 10
        pos += 1
    return pos


def format_int_rows(rows: np.ndarray, labels: bytes = b"") -> bytes:
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    lab = np.frombuffer(labels, dtype=np.uint8) if labels else np.empty(0, dtype=np.uint8)
    width = 22 * rows.shape[1] + 4
    buf = np.empty(max(1, rows.shape[0] * width), dtype=np.uint8)
    n = int_rows(buf, rows, lab)
    return buf[:n].tobytes()
