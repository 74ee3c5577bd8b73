"""Finite biquandles: axiom checking, diagram colorings, and the biquandle index.

Colors live on semi-arcs (the gaps between consecutive chord-end passages).
At a positive crossing with incoming over-color x and incoming under-color y
the outgoing over-color is x*y and the outgoing under-color is y∘x; negative
crossings impose the inverse constraint.  The convention is pinned by the
acceptance tests (dihedral coloring counts are move-invariant; the shift
biquandle reproduces the Gaussian index mod m on the sample knot).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from . import diagram as dg
from .diagram import CLOSED, FLAT, FREE, GaussDiagram, VIRTUAL, WrongFlavor


@dataclass(frozen=True)
class FiniteBiquandle:
    """Operation tables for ∘ and ∗ on {0, ..., n-1}; circ[x][y] = x∘y."""

    circ: tuple
    star: tuple

    @property
    def size(self) -> int:
        return len(self.circ)

    def __post_init__(self):
        n = len(self.circ)
        for table in (self.circ, self.star):
            if len(table) != n or any(len(r) != n for r in table):
                raise ValueError("tables must be square and same-sized")
            for r in table:
                if any(not (0 <= x < n) for x in r):
                    raise ValueError("entries must be carrier elements")

    def c(self, x, y):
        return self.circ[x][y]

    def s(self, x, y):
        return self.star[x][y]


def shift_biquandle(m: int) -> FiniteBiquandle:
    """x∘y = x∗y = x+1 on Z_m (the finite stand-in for the paper's Z example)."""
    t = tuple(tuple((x + 1) % m for _ in range(m)) for x in range(m))
    return FiniteBiquandle(t, t)


def dihedral_biquandle(m: int) -> FiniteBiquandle:
    """The dihedral quandle as a biquandle: x∘y = 2y-x, x∗y = x."""
    circ = tuple(tuple((2 * y - x) % m for y in range(m)) for x in range(m))
    star = tuple(tuple(x for _ in range(m)) for x in range(m))
    return FiniteBiquandle(circ, star)


def trivial_biquandle(m: int) -> FiniteBiquandle:
    t = tuple(tuple(x for _ in range(m)) for x in range(m))
    return FiniteBiquandle(t, t)


def parse_biquandle(text: str) -> FiniteBiquandle:
    """File format: carrier size, then the ∘ table and the ∗ table, 0-based."""
    vals = [int(tok) for tok in text.split()]
    if not vals:
        raise ValueError("empty biquandle file")
    n = vals[0]
    need = 1 + 2 * n * n
    if len(vals) != need:
        raise ValueError(f"expected {need} integers, got {len(vals)}")
    body = vals[1:]
    circ = tuple(tuple(body[i * n : (i + 1) * n]) for i in range(n))
    star = tuple(tuple(body[n * n + i * n : n * n + (i + 1) * n]) for i in range(n))
    return FiniteBiquandle(circ, star)


def serialize_biquandle(b: FiniteBiquandle) -> str:
    rows = [str(b.size)]
    for table in (b.circ, b.star):
        rows.extend(" ".join(str(x) for x in r) for r in table)
    return "\n".join(rows)


def check_axioms(b: FiniteBiquandle) -> dict:
    """Exhaustive verification; reports the first failing instance."""
    n = b.size
    rng = range(n)
    for x in rng:
        if b.c(x, x) != b.s(x, x):
            return {"ok": False, "axiom": 1, "at": (x,)}
    maps = [
        lambda x, y: (y, b.c(x, y)),
        lambda x, y: (x, b.s(y, x)),
        lambda x, y: (b.c(x, y), b.s(y, x)),
    ]
    for k, f in enumerate(maps):
        seen = {f(x, y) for x in rng for y in rng}
        if len(seen) != n * n:
            return {"ok": False, "axiom": 2, "at": (k,)}
    for x, y, z in itertools.product(rng, repeat=3):
        if b.c(b.c(x, y), b.c(z, y)) != b.c(b.c(x, z), b.s(y, z)):
            return {"ok": False, "axiom": 3, "at": (x, y, z, "cc")}
        if b.s(b.c(x, y), b.c(z, y)) != b.c(b.s(x, z), b.s(y, z)):
            return {"ok": False, "axiom": 3, "at": (x, y, z, "sc")}
        if b.s(b.s(x, y), b.s(z, y)) != b.s(b.s(x, z), b.c(y, z)):
            return {"ok": False, "axiom": 3, "at": (x, y, z, "ss")}
    return {"ok": True}


# -- colorings -----------------------------------------------------------------------


def _arcs(d: GaussDiagram):
    """Semi-arc ids: (ci, gap) with gap following the gap-th end (cyclic)."""
    out = []
    for ci, comp in enumerate(d.components):
        k = len(comp.ends)
        if comp.kind == CLOSED:
            out.extend((ci, g) for g in range(max(k, 1)))
        else:
            out.extend((ci, g) for g in range(k + 1))
    return out


def _crossing_equations(d: GaussDiagram, b: FiniteBiquandle):
    """Per crossing: two equations target = op(lhs, rhs) over arc ids."""
    eqs = []
    for v in d.chord_ends:
        (ct, pt), (ch, ph) = dg.arrow_positions(d, v)
        kt = len(d.components[ct].ends)
        kh = len(d.components[ch].ends)
        o_in, o_out = (ct, (pt - 1) % kt), (ct, pt)
        u_in, u_out = (ch, (ph - 1) % kh), (ch, ph)
        if d.components[ct].kind != CLOSED:
            o_in = (ct, pt)
            o_out = (ct, pt + 1)
        if d.components[ch].kind != CLOSED:
            u_in = (ch, ph)
            u_out = (ch, ph + 1)
        pos = d.flavor != VIRTUAL or d.sign_map[v] > 0
        if pos:
            eqs.append((o_out, b.s, o_in, u_in))
            eqs.append((u_out, b.c, u_in, o_in))
        else:
            eqs.append((o_in, b.s, o_out, u_out))
            eqs.append((u_in, b.c, u_out, o_out))
    return eqs


def colorings(d: GaussDiagram, b: FiniteBiquandle) -> list[dict]:
    """All biquandle colorings, by backtracking with constraint propagation."""
    if d.flavor not in (VIRTUAL, FLAT):
        raise WrongFlavor("colorings need over/under structure")
    arcs = _arcs(d)
    eqs = _crossing_equations(d, b)
    by_arc: dict = {a: [] for a in arcs}
    for eq in eqs:
        target, op, lhs, rhs = eq
        by_arc[lhs].append(eq)
        by_arc[rhs].append(eq)
        by_arc[target].append(eq)
    out = []
    color: dict = {}

    def propagate(queue):
        added = []
        while queue:
            arc = queue.pop()
            for (target, op, lhs, rhs) in by_arc[arc]:
                if lhs in color and rhs in color:
                    val = op(color[lhs], color[rhs])
                    if target in color:
                        if color[target] != val:
                            for a in added:
                                del color[a]
                            return None
                    else:
                        color[target] = val
                        added.append(target)
                        queue.append(target)
        return added

    def backtrack(i):
        while i < len(arcs) and arcs[i] in color:
            i += 1
        if i == len(arcs):
            out.append(dict(color))
            return
        arc = arcs[i]
        for c in range(b.size):
            color[arc] = c
            added = propagate([arc])
            if added is not None:
                backtrack(i + 1)
                for a in added:
                    del color[a]
            del color[arc]

    backtrack(0)
    return out


# -- quotient sets and the index --------------------------------------------------------


class TildeB:
    """Union-find quotients of B x B for both signs with the swap involution."""

    def __init__(self, b: FiniteBiquandle):
        self.b = b
        n = b.size
        self._parent = {}
        for sector in (1, -1):
            for x, y in itertools.product(range(n), repeat=2):
                self._parent[(sector, x, y)] = (sector, x, y)
        for x, y, z in itertools.product(range(n), repeat=3):
            cx, sx = b.c(x, z), b.s(x, z)
            cy, sy = b.c(y, z), b.s(y, z)
            self._union((1, x, y), (1, cx, cy))
            self._union((1, x, y), (1, sx, sy))
            self._union((1, x, y), (1, cx, sy))
            self._union((-1, x, y), (-1, cx, cy))
            self._union((-1, x, y), (-1, sx, sy))
            self._union((-1, x, y), (-1, sx, cy))

    def _find(self, k):
        p = self._parent
        while p[k] != k:
            p[k] = p[p[k]]
            k = p[k]
        return k

    def _union(self, a, b):
        ra, rb = self._find(a), self._find(b)
        if ra != rb:
            self._parent[max(ra, rb)] = min(ra, rb)

    def cls(self, sector: int, x: int, y: int):
        """Canonical class id of (x, y) in the quotient of the given sector."""
        return self._find((sector, x, y))

    def classes(self, sector: int) -> set:
        n = self.b.size
        return {
            self.cls(sector, x, y)
            for x, y in itertools.product(range(n), repeat=2)
        }

    def involute(self, cid):
        """(x,y)* = (y,x), swapping sectors; well-defined on classes."""
        sector, x, y = cid
        return self.cls(-sector, y, x)


def incident_pair(d: GaussDiagram, v: int, coloring: dict) -> tuple[int, int]:
    """(incoming over color, incoming under color) at the crossing v."""
    (ct, pt), (ch, ph) = dg.arrow_positions(d, v)
    kt = len(d.components[ct].ends)
    kh = len(d.components[ch].ends)
    o_in = (ct, (pt - 1) % kt if d.components[ct].kind == CLOSED else pt)
    u_in = (ch, (ph - 1) % kh if d.components[ch].kind == CLOSED else ph)
    return coloring[o_in], coloring[u_in]


def biquandle_index(
    d: GaussDiagram,
    v: int,
    b: FiniteBiquandle,
    tb: Optional[TildeB] = None,
    cols: Optional[list] = None,
) -> tuple:
    """Multiset of TildeB classes of the incident color pairs over all colorings."""
    if tb is None:
        tb = TildeB(b)
    if cols is None:
        cols = colorings(d, b)
    sector = d.sign_map[v] if d.flavor == VIRTUAL else 1
    counts: dict = {}
    for c in cols:
        x, y = incident_pair(d, v, c)
        cid = tb.cls(sector, x, y)
        counts[cid] = counts.get(cid, 0) + 1
    return tuple(sorted(counts.items()))


def biquandle_index_involution(tb: TildeB, value: tuple) -> tuple:
    counts: dict = {}
    for cid, k in value:
        counts[tb.involute(cid)] = counts.get(tb.involute(cid), 0) + k
    return tuple(sorted(counts.items()))
