"""Signed Gauss codes, Reidemeister-I reduction and the knot determinant.

A signed Gauss code is a list of :class:`Incidence` in traversal order. Each
crossing id appears exactly twice, once over and once under, with the same
sign on both entries.
"""
from __future__ import annotations

import re
from typing import Iterable, NamedTuple, Sequence

from .errors import MalformedCode


class Incidence(NamedTuple):
    crossing: int
    over: bool
    sign: int = 0


GaussCode = list  # list[Incidence]

_TOKEN = re.compile(r"^([OU])(\d+)([+-]?)$")


def parse_code(text: str) -> GaussCode:
    """Parse ``"O1+ U2- ..."`` into a list of incidences."""
    code = []
    for tok in text.replace(",", " ").split():
        m = _TOKEN.match(tok.strip())
        if not m:
            raise MalformedCode(f"bad token {tok!r}")
        sign = {"+": 1, "-": -1, "": 0}[m.group(3)]
        code.append(Incidence(int(m.group(2)), m.group(1) == "O", sign))
    validate(code)
    return code


def format_code(code: Sequence[Incidence]) -> str:
    sym = {1: "+", -1: "-", 0: ""}
    return " ".join(f"{'O' if c.over else 'U'}{c.crossing}{sym[c.sign]}" for c in code)


def validate(code: Sequence[Incidence]) -> None:
    """Raise :class:`MalformedCode` unless every crossing has one over and one under."""
    seen: dict[int, list[Incidence]] = {}
    for inc in code:
        seen.setdefault(inc.crossing, []).append(inc)
    for cid, incs in seen.items():
        if len(incs) != 2:
            raise MalformedCode(f"crossing {cid} appears {len(incs)} times")
        if incs[0].over == incs[1].over:
            raise MalformedCode(f"crossing {cid} lacks an over/under pair")
        if incs[0].sign != incs[1].sign:
            raise MalformedCode(f"crossing {cid} has inconsistent signs")


def n_crossings(code: Sequence[Incidence]) -> int:
    return len(code) // 2


def relabel(code: Sequence[Incidence]) -> GaussCode:
    """Renumber crossings 1, 2, ... in order of first appearance."""
    ids: dict[int, int] = {}
    out = []
    for inc in code:
        ids.setdefault(inc.crossing, len(ids) + 1)
        out.append(Incidence(ids[inc.crossing], inc.over, inc.sign))
    return out


def mirror(code: Sequence[Incidence]) -> GaussCode:
    return [Incidence(c.crossing, not c.over, -c.sign) for c in code]


def canonical_rotation(code: Sequence[Incidence]) -> tuple:
    """Lexicographically smallest relabelled cyclic rotation (for comparisons)."""
    n = len(code)
    if n == 0:
        return ()
    return min(tuple(relabel(list(code[i:]) + list(code[:i]))) for i in range(n))


def reduce_rm1(code: Sequence[Incidence]) -> GaussCode:
    """Delete Reidemeister-I kinks until none remain.

    A kink is a crossing whose two incidences are cyclically adjacent.
    """
    code = list(code)
    validate(code)
    changed = True
    while changed and code:
        changed = False
        n = len(code)
        for i in range(n):
            if code[i].crossing == code[(i + 1) % n].crossing:
                cid = code[i].crossing
                code = [c for c in code if c.crossing != cid]
                changed = True
                break
    return code


def _bareiss_det(M: list[list[int]]) -> int:
    """Exact integer determinant by fraction-free elimination."""
    M = [row[:] for row in M]
    n = len(M)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for r in range(k + 1, n):
                if M[r][k] != 0:
                    M[k], M[r] = M[r], M[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = M[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * pivot - M[i][k] * M[k][j]) // prev
            M[i][k] = 0
        prev = pivot
    return sign * M[n - 1][n - 1]


def coloring_matrix(code: Sequence[Incidence]) -> list[list[int]]:
    """Fox coloring matrix: one row per crossing, one column per arc.

    Arcs are the pieces of the diagram between consecutive under-incidences;
    the row of a crossing holds ``2`` at its over-arc and ``-1`` at each of
    the two under-arcs.
    """
    validate(code)
    n = n_crossings(code)
    ids = {cid: k for k, cid in enumerate(dict.fromkeys(c.crossing for c in code))}
    M = [[0] * n for _ in range(n)]
    # arc index of a position = number of unders strictly before it, mod n
    arc = 0
    arc_at = []
    for c in code:
        arc_at.append(arc % n)
        if not c.over:
            arc += 1
    for p, c in enumerate(code):
        row = M[ids[c.crossing]]
        if c.over:
            row[arc_at[p]] += 2
        else:
            row[arc_at[p]] -= 1
            row[(arc_at[p] + 1) % n] -= 1
    return M


def knot_determinant(code: Sequence[Incidence]) -> int:
    """``|Delta(-1)|`` from any first minor of the coloring matrix."""
    code = list(code)
    if not code:
        return 1
    M = coloring_matrix(code)
    minor = [row[1:] for row in M[1:]]
    return abs(_bareiss_det(minor))


def signature(code: Sequence[Incidence]) -> tuple[int, int]:
    """``(crossings after RM1 reduction, determinant)``."""
    reduced = reduce_rm1(code)
    return n_crossings(reduced), knot_determinant(reduced)


def writhe(code: Sequence[Incidence]) -> int:
    return sum(c.sign for c in code if c.over)


def from_pairs(pairs: Iterable[tuple[int, bool]]) -> GaussCode:
    """Build an unsigned code from ``(crossing, over)`` pairs."""
    code = [Incidence(int(c), bool(o), 0) for c, o in pairs]
    validate(code)
    return code


__all__ = [
    "Incidence", "parse_code", "format_code", "validate", "n_crossings", "relabel", "mirror",
    "canonical_rotation", "reduce_rm1", "coloring_matrix", "knot_determinant", "signature",
    "writhe", "from_pairs",
]
