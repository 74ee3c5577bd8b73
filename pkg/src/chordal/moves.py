"""Reidemeister moves on Gauss diagrams, canonical forms, and move-graph search.

Move instances are value objects; applying one returns a new diagram plus the
crossing correspondence (all moves here keep surviving labels fixed, so the
correspondences are identity injections).  Chord labels are never reused
along a trajectory.

The R3 pattern table is generated at import time from an explicit planar
three-line model: one strand over both others, one under both, one mixed,
with all orientation combinations, both chiralities, and the moving strand
on either side of the opposite crossing.  A pattern records, for each of the
three strand segments, the order of its two crossing passages plus the
crossing signs; applying the move swaps each adjacent passage pair.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .diagram import (
    CLOSED,
    Component,
    FLAT,
    FREE,
    GaussDiagram,
    HEAD,
    LONG,
    TAIL,
    VIRTUAL,
    WrongFlavor,
    relabel,
    relabel_first_visit,
    serialize,
    validate,
)


class StaleMove(ValueError):
    """The move instance does not apply to this diagram."""


class UnsupportedFlavor(WrongFlavor):
    """Wrapping of order >= 2 is only defined for virtual and flat diagrams."""


@dataclass(frozen=True)
class MoveInstance:
    kind: str  # r1add | r1rem | r2add | r2rem | r3
    site: tuple
    variant: tuple = ()

    def to_json(self) -> str:
        return json.dumps(
            {"kind": self.kind, "site": self.site, "variant": self.variant},
            separators=(",", ":"),
        )

    @staticmethod
    def from_json(text: str) -> "MoveInstance":
        raw = json.loads(text)

        def detuple(x):
            return tuple(detuple(e) for e in x) if isinstance(x, list) else x

        return MoveInstance(raw["kind"], detuple(raw["site"]), detuple(raw["variant"]))


@dataclass(frozen=True)
class Correspondence:
    """Bijection between surviving crossings of source and target."""

    dom: frozenset
    mapping: Optional[tuple] = None  # None = identity on dom

    def __call__(self, label: int) -> int:
        if label not in self.dom:
            raise KeyError(label)
        if self.mapping is None:
            return label
        return dict(self.mapping)[label]

    def as_dict(self) -> dict[int, int]:
        if self.mapping is None:
            return {l: l for l in self.dom}
        return dict(self.mapping)

    def compose(self, later: "Correspondence") -> "Correspondence":
        left = self.as_dict()
        right = later.as_dict()
        chained = {a: right[b] for a, b in left.items() if b in right}
        if all(a == b for a, b in chained.items()):
            return Correspondence(frozenset(chained), None)
        return Correspondence(frozenset(chained), tuple(sorted(chained.items())))


@dataclass(frozen=True)
class BasedDiagram:
    """Diagram with a distinguished crossing; the mark must be a chord label."""

    diagram: GaussDiagram
    mark: int


def fresh_labels(d: GaussDiagram, k: int) -> list[int]:
    base = max(d.chord_ends, default=0)
    return [base + i + 1 for i in range(k)]


# -- adjacency scanning ---------------------------------------------------------


def _adjacent_pairs(d: GaussDiagram):
    """All (ci, p, end_at_p, end_at_p+1) with the two slots adjacent."""
    out = []
    for ci, comp in enumerate(d.components):
        k = len(comp.ends)
        if comp.kind == CLOSED:
            span = range(k) if k >= 2 else ()
        else:
            span = range(k - 1)
        for p in span:
            q = (p + 1) % k
            out.append((ci, p, comp.ends[p], comp.ends[q]))
    return out


def _insert(d: GaussDiagram, inserts: dict, signs_new: dict) -> GaussDiagram:
    """Splice new ends into components; inserts[(ci, slot)] = [ends...]."""
    comps = []
    for ci, comp in enumerate(d.components):
        k = len(comp.ends)
        ends = []
        for idx in range(k + 1):
            ends.extend(inserts.get((ci, idx), ()))
            if idx < k:
                ends.append(comp.ends[idx])
        comps.append(Component(comp.kind, tuple(ends)))
    signs = d.signs
    if d.flavor == VIRTUAL:
        signs = tuple(sorted(list(d.signs) + sorted(signs_new.items())))
    return GaussDiagram(d.flavor, tuple(comps), signs)


# -- R1 ---------------------------------------------------------------------------

# internal loop-type labels, pinned by the pairing tests of loop_values:
# l+ = head-first positive, l- = tail-first negative,
# r+ = tail-first positive, r- = head-first negative.
R1_VARIANTS_VIRTUAL = (
    ("l+", HEAD, 1),
    ("l-", TAIL, -1),
    ("r+", TAIL, 1),
    ("r-", HEAD, -1),
)
R1_VARIANTS_FLAT = (("l", HEAD), ("r", TAIL))


def _r1_slots(comp: Component):
    k = len(comp.ends)
    if comp.kind == CLOSED:
        return range(max(k, 1))
    return range(k + 1)


def _enum_r1add(d: GaussDiagram):
    for ci, comp in enumerate(d.components):
        for slot in _r1_slots(comp):
            if d.flavor == VIRTUAL:
                for name, first, s in R1_VARIANTS_VIRTUAL:
                    yield MoveInstance("r1add", (ci, slot), (name, first, s))
            elif d.flavor == FLAT:
                for name, first in R1_VARIANTS_FLAT:
                    yield MoveInstance("r1add", (ci, slot), (name, first))
            else:
                yield MoveInstance("r1add", (ci, slot), ("k", 0))


def _apply_r1add(d: GaussDiagram, m: MoveInstance):
    ci, slot = m.site
    if ci >= len(d.components) or slot > len(d.components[ci].ends):
        raise StaleMove(f"{m} out of range")
    (new,) = fresh_labels(d, 1)
    first = m.variant[1]
    ends = [(new, first), (new, 1 - first)] if d.flavor != FREE else [(new, 0), (new, 1)]
    signs = {new: m.variant[2]} if d.flavor == VIRTUAL else {}
    out = _insert(d, {(ci, slot): ends}, signs)
    return out, Correspondence(frozenset(d.chord_ends)), new


def kink_chords(d: GaussDiagram) -> list[int]:
    """Chords whose two ends are adjacent: the R1-removable loops."""
    out = []
    for (_, _, e1, e2) in _adjacent_pairs(d):
        if e1[0] == e2[0]:
            out.append(e1[0])
    return sorted(set(out))


def _enum_r1rem(d: GaussDiagram):
    for label in kink_chords(d):
        yield MoveInstance("r1rem", (label,))


def _apply_r1rem(d: GaussDiagram, m: MoveInstance):
    (label,) = m.site
    if label not in kink_chords(d):
        raise StaleMove(f"chord {label} is not an isolated loop")
    comps = tuple(
        Component(c.kind, tuple(e for e in c.ends if e[0] != label))
        for c in d.components
    )
    signs = tuple((l, s) for l, s in d.signs if l != label)
    out = GaussDiagram(d.flavor, comps, signs)
    return out, Correspondence(frozenset(d.chord_ends) - {label})


def loop_type(d: GaussDiagram, label: int) -> str:
    """Loop-type tag of a kink chord, matching the R1 variant labels.

    For a lone kink on its own circle both rotations are isomorphic and the
    reported type is the stored one.
    """
    (ci, p), (cj, q) = d.chord_ends[label]
    comp = d.components[ci]
    k = len(comp.ends)
    first_pos = p if (q - p) % k == 1 else q
    first_role = comp.ends[first_pos][1]
    if d.flavor == VIRTUAL:
        s = d.sign_map[label]
        for name, first, sv in R1_VARIANTS_VIRTUAL:
            if first == first_role and sv == s:
                return name
    elif d.flavor == FLAT:
        for name, first in R1_VARIANTS_FLAT:
            if first == first_role:
                return name
    return "k"


# -- R2 ---------------------------------------------------------------------------


def _flat_role(virtual_role: int, sgn: int) -> int:
    return virtual_role if sgn > 0 else 1 - virtual_role


def _r2_insert_ends(flavor: str, u: int, w: int, co: bool, s: int):
    """(ends on over strand, ends on under strand) for the created pair."""
    over_v = [(u, TAIL), (w, TAIL)]
    under_v = [(u, HEAD), (w, HEAD)] if co else [(w, HEAD), (u, HEAD)]
    if flavor == VIRTUAL:
        return over_v, under_v
    if flavor == FLAT:
        sgn = {u: s, w: -s}
        conv = lambda e: (e[0], _flat_role(e[1], sgn[e[0]]))
        return [conv(e) for e in over_v], [conv(e) for e in under_v]
    return [(e[0], 0) for e in over_v], [(e[0], 1) for e in under_v]


def _enum_r2add(d: GaussDiagram):
    slots = [
        (ci, slot)
        for ci, comp in enumerate(d.components)
        for slot in _r1_slots(comp)
    ]
    chirs = (1, -1) if d.flavor != FREE else (1,)
    for (ca, sa), (cb, sb) in itertools.product(slots, repeat=2):
        same = (ca, sa) == (cb, sb)
        for co in (True, False):
            for s in chirs:
                if same:
                    for over_first in (True, False):
                        yield MoveInstance(
                            "r2add", (ca, sa, cb, sb), (co, s, over_first)
                        )
                else:
                    yield MoveInstance("r2add", (ca, sa, cb, sb), (co, s, True))


def _apply_r2add(d: GaussDiagram, m: MoveInstance):
    ca, sa, cb, sb = m.site
    co, s, over_first = m.variant
    for ci, slot in ((ca, sa), (cb, sb)):
        if ci >= len(d.components) or slot > len(d.components[ci].ends):
            raise StaleMove(f"{m} out of range")
    u, w = fresh_labels(d, 2)
    over_ends, under_ends = _r2_insert_ends(d.flavor, u, w, co, s)
    if (ca, sa) == (cb, sb):
        seq = over_ends + under_ends if over_first else under_ends + over_ends
        inserts = {(ca, sa): seq}
    else:
        inserts = {(ca, sa): over_ends, (cb, sb): under_ends}
    signs = {u: s, w: -s} if d.flavor == VIRTUAL else {}
    out = _insert(d, inserts, signs)
    if d.flavor == FREE:
        from .diagram import _normalize_free_roles

        out = _normalize_free_roles(out)
    return out, Correspondence(frozenset(d.chord_ends)), (u, w)


def _ordered_adjacency(d: GaussDiagram):
    """Set of ordered adjacent end pairs (end_first, end_second)."""
    return {(e1, e2) for (_, _, e1, e2) in _adjacent_pairs(d)}


def i2_pairs(d: GaussDiagram) -> list[tuple[int, int]]:
    """All unordered chord pairs to which a decreasing R2 move applies."""
    adj = _ordered_adjacency(d)
    found = set()
    labels = sorted(d.chord_ends)
    for u, w in itertools.combinations(labels, 2):
        if _is_i2_pair(d, adj, u, w):
            found.add((u, w))
    return sorted(found)


def _is_i2_pair(d: GaussDiagram, adj, u: int, w: int) -> bool:
    if d.flavor == VIRTUAL:
        if d.sign_map[u] == d.sign_map[w]:
            return False
        for a, b in ((u, w), (w, u)):
            over = ((a, TAIL), (b, TAIL))
            if over not in adj:
                continue
            if ((a, HEAD), (b, HEAD)) in adj or ((b, HEAD), (a, HEAD)) in adj:
                return True
        return False
    if d.flavor == FLAT:
        for a, b in ((u, w), (w, u)):
            if ((a, TAIL), (b, HEAD)) in adj:
                if ((a, HEAD), (b, TAIL)) in adj or ((b, TAIL), (a, HEAD)) in adj:
                    return True
        return False
    # free: any two disjoint adjacent pairs covering the four ends
    sites = [
        (e1, e2)
        for (_, _, e1, e2) in _adjacent_pairs(d)
        if {e1[0], e2[0]} == {u, w}
    ]
    for (a1, a2), (b1, b2) in itertools.combinations(sites, 2):
        if not {a1, a2} & {b1, b2}:
            return True
    return False


def _enum_r2rem(d: GaussDiagram):
    for pair in i2_pairs(d):
        yield MoveInstance("r2rem", pair)


def _apply_r2rem(d: GaussDiagram, m: MoveInstance):
    u, w = m.site
    if (min(u, w), max(u, w)) not in i2_pairs(d):
        raise StaleMove(f"({u},{w}) is not an i2 pair")
    comps = tuple(
        Component(c.kind, tuple(e for e in c.ends if e[0] not in (u, w)))
        for c in d.components
    )
    signs = tuple((l, s) for l, s in d.signs if l not in (u, w))
    out = GaussDiagram(d.flavor, comps, signs)
    return out, Correspondence(frozenset(d.chord_ends) - {u, w})


# -- R3 ---------------------------------------------------------------------------


def _r3_model_patterns():
    """Generate valid R3 configurations from the planar three-line model."""

    def det(p, q):
        return p[0] * q[1] - p[1] * q[0]

    def dot(p, q):
        return p[0] * q[0] + p[1] * q[1]

    patterns = set()
    for chir in (0, 1):
        da0 = (1, 1) if chir == 0 else (1, -1)
        db0 = (1, -1) if chir == 0 else (1, 1)
        dc0 = (1, 0)
        for cy in (-1, 1):  # moving strand below or above the TM crossing
            u = (0, 0)
            # a: y = +-x; c: y = cy
            va = (cy, cy) if chir == 0 else (-cy, cy)
            vb = (-va[0], va[1])
            pts = {"TM": u, "TB": va, "MB": vb}
            over = {"TM": "a", "TB": "a", "MB": "b"}
            strands = {"a": ("TM", "TB"), "b": ("TM", "MB"), "c": ("TB", "MB")}
            base = {"a": da0, "b": db0, "c": dc0}
            for sa, sb, sc in itertools.product((1, -1), repeat=3):
                mult = {"a": sa, "b": sb, "c": sc}
                dirs = {s: (mult[s] * base[s][0], mult[s] * base[s][1]) for s in "abc"}
                orders = {}
                for s in "abc":
                    x, y = strands[s]
                    tx, ty = dot(pts[x], dirs[s]), dot(pts[y], dirs[s])
                    orders[s] = (x, y) if tx < ty else (y, x)
                signs = {}
                for tag, pt in pts.items():
                    s_over = over[tag]
                    s_under = ({"TM": "ab", "TB": "ac", "MB": "bc"}[tag]).replace(
                        s_over, ""
                    )
                    signs[tag] = 1 if det(dirs[s_over], dirs[s_under]) > 0 else -1
                patterns.add(
                    (
                        orders["a"],
                        orders["b"],
                        orders["c"],
                        signs["TM"],
                        signs["TB"],
                        signs["MB"],
                    )
                )
    return frozenset(patterns)


R3_PATTERNS_VIRTUAL = _r3_model_patterns()

# the move flips all three passage orders; the table must contain both states
assert all(
    (ta[::-1], tb[::-1], tc[::-1], s1, s2, s3) in R3_PATTERNS_VIRTUAL
    for (ta, tb, tc, s1, s2, s3) in R3_PATTERNS_VIRTUAL
)


def _flat_project_pattern(pat):
    """Virtual R3 pattern -> flat pattern (arrow roles instead of signs)."""
    ta, tb, tc, s_tm, s_tb, s_mb = pat
    sgn = {"TM": s_tm, "TB": s_tb, "MB": s_mb}
    over = {"TM": "a", "TB": "a", "MB": "b"}

    def side(strand, order):
        out = []
        for tag in order:
            vrole = TAIL if over[tag] == strand else HEAD
            out.append((tag, _flat_role(vrole, sgn[tag])))
        return tuple(out)

    return (side("a", ta), side("b", tb), side("c", tc))


R3_PATTERNS_FLAT = frozenset(_flat_project_pattern(p) for p in R3_PATTERNS_VIRTUAL)
R3_PATTERNS_FREE = frozenset((p[0], p[1], p[2]) for p in R3_PATTERNS_VIRTUAL)


def _enum_r3(d: GaussDiagram):
    pairs = _adjacent_pairs(d)
    cand = [(ci, p, e1, e2) for (ci, p, e1, e2) in pairs if e1[0] != e2[0]]
    by_chords: dict[frozenset, list] = {}
    for entry in cand:
        key = frozenset((entry[2][0], entry[3][0]))
        by_chords.setdefault(key, []).append(entry)
    seen = set()
    for key_xy, key_yz, key_zx in itertools.combinations(by_chords, 3):
        chords = key_xy | key_yz | key_zx
        if len(chords) != 3:
            continue
        if key_xy | key_yz != chords or key_yz | key_zx != chords:
            continue
        for p1, p2, p3 in itertools.product(
            by_chords[key_xy], by_chords[key_yz], by_chords[key_zx]
        ):
            positions = {(p1[0], p1[1]), (p2[0], p2[1]), (p3[0], p3[1])}
            slots = set()
            ok = True
            for (ci, p, e1, e2) in (p1, p2, p3):
                k = len(d.components[ci].ends)
                for q in (p, (p + 1) % k):
                    if (ci, q) in slots:
                        ok = False
                    slots.add((ci, q))
            if not ok or len(positions) != 3:
                continue
            variant = _match_r3(d, (p1, p2, p3))
            if variant is None:
                continue
            site = tuple(sorted(positions))
            if site in seen:
                continue
            seen.add(site)
            yield MoveInstance("r3", site, variant)


def _match_r3(d: GaussDiagram, sides):
    """Try to assign the three adjacent pairs to the model strands (a, b, c)."""
    for perm in itertools.permutations(sides):
        pa, pb, pc = perm
        # tags: TM = chord shared by a,b; TB by a,c; MB by b,c
        ca = {pa[2][0], pa[3][0]}
        cb = {pb[2][0], pb[3][0]}
        cc = {pc[2][0], pc[3][0]}
        tm_set, tb_set, mb_set = ca & cb, ca & cc, cb & cc
        if not (len(tm_set) == len(tb_set) == len(mb_set) == 1):
            continue
        tm, tb, mb = tm_set.pop(), tb_set.pop(), mb_set.pop()
        if len({tm, tb, mb}) != 3:
            continue
        tag_of = {tm: "TM", tb: "TB", mb: "MB"}
        orders = tuple(
            tuple(tag_of[e[0]] for e in (side[2], side[3])) for side in perm
        )
        if d.flavor == VIRTUAL:
            # strand a is over at both its crossings, c under at both
            roles = {
                "a": (pa, {("TM", TAIL), ("TB", TAIL)}),
                "b": (pb, {("TM", HEAD), ("MB", TAIL)}),
                "c": (pc, {("TB", HEAD), ("MB", HEAD)}),
            }
            ok = all(
                {(tag_of[e[0]], e[1]) for e in (side[2], side[3])} == want
                for side, want in roles.values()
            )
            if not ok:
                continue
            key = (
                orders[0],
                orders[1],
                orders[2],
                d.sign_map[tm],
                d.sign_map[tb],
                d.sign_map[mb],
            )
            if key in R3_PATTERNS_VIRTUAL:
                return ("abc", key[3], key[4], key[5])
        elif d.flavor == FLAT:
            key = tuple(
                tuple((tag_of[e[0]], e[1]) for e in (side[2], side[3]))
                for side in perm
            )
            if key in R3_PATTERNS_FLAT:
                return ("abc",)
        else:
            if orders in R3_PATTERNS_FREE:
                return ("abc",)
    return None


def _apply_r3(d: GaussDiagram, m: MoveInstance):
    comps = [list(c.ends) for c in d.components]
    for (ci, p) in m.site:
        k = len(comps[ci])
        q = (p + 1) % k
        comps[ci][p], comps[ci][q] = comps[ci][q], comps[ci][p]
    out = GaussDiagram(
        d.flavor,
        tuple(Component(c.kind, tuple(ends)) for c, ends in zip(d.components, comps)),
        d.signs,
    )
    return out, Correspondence(frozenset(d.chord_ends))


# -- umbrella ---------------------------------------------------------------------


def enumerate_moves(d: GaussDiagram, kinds: Optional[Iterable[str]] = None):
    """All applicable move instances, optionally restricted to some kinds."""
    gens = {
        "r1add": _enum_r1add,
        "r1rem": _enum_r1rem,
        "r2add": _enum_r2add,
        "r2rem": _enum_r2rem,
        "r3": _enum_r3,
    }
    wanted = tuple(gens) if kinds is None else tuple(kinds)
    out = []
    for kind in wanted:
        out.extend(gens[kind](d))
    return out


def apply_move(d: GaussDiagram, m: MoveInstance):
    """Apply a move; returns (diagram, correspondence)."""
    if m.kind == "r1add":
        out, corr, _ = _apply_r1add(d, m)
        return out, corr
    if m.kind == "r1rem":
        return _apply_r1rem(d, m)
    if m.kind == "r2add":
        out, corr, _ = _apply_r2add(d, m)
        return out, corr
    if m.kind == "r2rem":
        return _apply_r2rem(d, m)
    if m.kind == "r3":
        if _match_r3_site(d, m.site) is None:
            raise StaleMove(f"{m} no longer matches")
        return _apply_r3(d, m)
    raise StaleMove(f"unknown move kind {m.kind}")


def _match_r3_site(d: GaussDiagram, site):
    entries = []
    for (ci, p) in site:
        if ci >= len(d.components):
            return None
        comp = d.components[ci]
        k = len(comp.ends)
        if p >= k:
            return None
        entries.append((ci, p, comp.ends[p], comp.ends[(p + 1) % k]))
    return _match_r3(d, tuple(entries))


def created_chords(d: GaussDiagram, m: MoveInstance, result: GaussDiagram) -> list[int]:
    return sorted(set(result.chord_ends) - set(d.chord_ends))


# -- random walks ------------------------------------------------------------------


@dataclass
class Trajectory:
    start: GaussDiagram
    steps: list  # (MoveInstance, Correspondence, GaussDiagram)

    def diagrams(self):
        return [self.start] + [s[2] for s in self.steps]

    def surviving(self) -> frozenset:
        alive = frozenset(self.start.chord_ends)
        for (_, corr, _) in self.steps:
            alive = frozenset(l for l in alive if l in corr.dom)
        return alive


def random_walk(
    d: GaussDiagram, steps: int, seed: int, max_crossings: int
) -> Trajectory:
    """Seeded random move sequence; never exceeds the crossing cap."""
    if max_crossings < len(d):
        raise ValueError("cap below the current crossing count")
    rng = random.Random(seed)
    cur = d
    out = []
    for _ in range(steps):
        moves = []
        weights = []
        near_cap = len(cur) >= max_crossings - 1
        for m in enumerate_moves(cur):
            delta = {"r1add": 1, "r2add": 2}.get(m.kind, 0)
            if m.kind == "r3":
                delta = 0
            removal = m.kind in ("r1rem", "r2rem")
            if len(cur) + delta > max_crossings:
                continue
            moves.append(m)
            weights.append(5 if (near_cap and removal) else 1)
        if not moves:
            break
        m = rng.choices(moves, weights)[0]
        nxt, corr = apply_move(cur, m)
        out.append((m, corr, nxt))
        cur = nxt
    return Trajectory(d, out)


# -- canonical forms ---------------------------------------------------------------


def _encode_rotation(d: GaussDiagram, offsets: tuple[int, ...], mark: Optional[int]):
    mapping: dict[int, int] = {}
    rows = []
    free = d.flavor == FREE
    for ci, comp in enumerate(d.components):
        k = len(comp.ends)
        off = offsets[ci]
        row = []
        for i in range(k):
            label, role = comp.ends[(off + i) % k]
            if free:
                role = 0 if label not in mapping else 1
            new = mapping.setdefault(label, len(mapping) + 1)
            if d.flavor == VIRTUAL:
                row.append((new, role, d.sign_map[label]))
            else:
                row.append((new, role))
        rows.append((comp.kind, tuple(row)))
    key = tuple(rows)
    if mark is None:
        return key, mapping
    return (key, mapping[mark]), mapping


def _rotation_choices(d: GaussDiagram):
    choices = []
    for comp in d.components:
        k = len(comp.ends)
        if comp.kind == CLOSED and k > 1:
            choices.append(range(k))
        else:
            choices.append(range(1))
    return choices


def canonicalize(d: GaussDiagram, mark: Optional[int] = None):
    """Least encoding over base-slot rotations; returns (key, label map)."""
    best = None
    best_map = None
    for offsets in itertools.product(*_rotation_choices(d)):
        key, mapping = _encode_rotation(d, offsets, mark)
        if best is None or key < best:
            best, best_map = key, mapping
    return best, best_map


def canonical_key(d: GaussDiagram):
    cached = d.__dict__.get("_canon_key")
    if cached is None:
        cached = canonicalize(d)[0]
        d.__dict__["_canon_key"] = cached
    return cached


def canonical_based_key(b: BasedDiagram):
    cache = b.diagram.__dict__.setdefault("_canon_based", {})
    hit = cache.get(b.mark)
    if hit is None:
        hit = canonicalize(b.diagram, b.mark)[0]
        cache[b.mark] = hit
    return hit


# -- wrapping ----------------------------------------------------------------------


def wrap(b: BasedDiagram, n: int) -> BasedDiagram:
    """Rotate the overpass of the mark by n counterclockwise half-turns.

    Each half-turn flips the central crossing and threads the two overpass
    arms across the understrand, adding two crossings of the original sign.
    The unbased diagrams of b and wrap(b, n) present the same tangle.
    """
    if n == 0:
        return b
    d, v = b.diagram, b.mark
    if d.flavor == FREE:
        if abs(n) > 1:
            raise UnsupportedFlavor("free wrapping is only defined for orders 0 and 1")
        return BasedDiagram(_wrap_once(d, v, 1), v)
    if d.flavor == FLAT:
        lift = GaussDiagram(VIRTUAL, d.components, tuple((l, 1) for l in d.chord_ends))
        cur = wrap(BasedDiagram(lift, v), n).diagram
        from .diagram import to_flat

        return BasedDiagram(to_flat(cur), v)
    cur = d
    for _ in range(abs(n)):
        cur = _wrap_once(cur, v, 1 if n > 0 else -1)
    return BasedDiagram(cur, v)


def _wrap_once(d: GaussDiagram, v: int, direction: int) -> GaussDiagram:
    if d.flavor == FREE:
        (ct, pt), (ch, ph) = d.chord_ends[v]
    else:
        from .diagram import arrow_positions

        (ct, pt), (ch, ph) = arrow_positions(d, v)
    a, bb = fresh_labels(d, 2)
    under_before, under_after = (a, bb) if direction > 0 else (bb, a)
    inserts: dict[tuple[int, int], list] = {}

    def put(ci, slot, end):
        inserts.setdefault((ci, slot), []).append(end)

    # "after" slots first so collided arcs read leave-arm then approach-arm
    put(ct, pt + 1, (bb, TAIL))
    put(ch, ph + 1, (under_after, HEAD))
    put(ct, pt, (a, TAIL))
    put(ch, ph, (under_before, HEAD))
    if d.flavor == VIRTUAL:
        s = d.sign_map[v]
        out = _insert(d, inserts, {a: s, bb: s})
        signs = tuple(sorted((l, -sv if l == v else sv) for l, sv in out.signs))
        out = GaussDiagram(VIRTUAL, out.components, signs)
    else:
        out = _insert(d, inserts, {})
        from .diagram import _normalize_free_roles

        out = _normalize_free_roles(out)
    validate(out)
    return out


# -- bounded search over the based move graph ---------------------------------------


def based_moves(b: BasedDiagram, max_crossings: int, move_filter=None):
    """Moves applicable to b that keep the mark alive and respect the cap."""
    out = []
    for m in enumerate_moves(b.diagram):
        delta = {"r1add": 1, "r2add": 2}.get(m.kind, 0)
        if len(b.diagram) + delta > max_crossings:
            continue
        if m.kind == "r1rem" and m.site[0] == b.mark:
            continue
        if m.kind == "r2rem" and b.mark in m.site:
            continue
        if move_filter is not None and not move_filter(m):
            continue
        out.append(m)
    return out


def apply_based(b: BasedDiagram, m: MoveInstance) -> BasedDiagram:
    out, _ = apply_move(b.diagram, m)
    return BasedDiagram(out, b.mark)


@dataclass
class SearchOutcome:
    path: Optional[list]  # replayable records, None if exhausted
    expanded: int
    depth_reached: int

    def found(self) -> bool:
        return self.path is not None


def bounded_bfs(
    b1: BasedDiagram,
    b2: BasedDiagram,
    max_crossings: int,
    max_depth: int,
    move_filter=None,
    max_states: int = 2_000_000,
) -> SearchOutcome:
    """Search for a based-morphism path b1 -> b2 within the budget.

    Runs bidirectional breadth-first searches at escalating crossing caps up
    to ``max_crossings`` (a path found under a small cap is a fortiori a
    certificate for the stated budget); the final iteration is exhaustive up
    to the full budget.  A missing path is a budget answer, not a disproof.
    The returned path is a list of JSON-able records replayable by
    :func:`replay_path`.
    """
    floor = max(len(b1.diagram), len(b2.diagram))
    expanded = 0
    depth_seen = 0
    caps = sorted({floor, floor + 1, floor + 2, max_crossings})
    for cap in caps:
        if cap > max_crossings:
            break
        out = _bfs_at_cap(b1, b2, cap, max_depth, move_filter, max_states)
        expanded += out.expanded
        depth_seen = max(depth_seen, out.depth_reached)
        if out.found():
            return SearchOutcome(out.path, expanded, out.depth_reached)
    return SearchOutcome(None, expanded, depth_seen)


def _bfs_at_cap(
    b1: BasedDiagram,
    b2: BasedDiagram,
    cap: int,
    max_depth: int,
    move_filter,
    max_states: int,
) -> SearchOutcome:
    k1, k2 = canonical_based_key(b1), canonical_based_key(b2)
    sides = [
        {k1: (b1, None, None)},  # key -> (concrete, parent key, move)
        {k2: (b2, None, None)},
    ]
    frontiers = [[k1], [k2]]
    depths = [0, 0]
    expanded = 0
    if k1 == k2:
        return SearchOutcome(_assemble(sides, k1, b1, b2, cap), expanded, 0)
    while frontiers[0] and frontiers[1] and depths[0] + depths[1] < max_depth:
        side = 0 if len(frontiers[0]) <= len(frontiers[1]) else 1
        depths[side] += 1
        nxt = []
        seen = sides[side]
        other = sides[1 - side]
        for key in frontiers[side]:
            rep = seen[key][0]
            for m in based_moves(rep, cap, move_filter):
                child = apply_based(rep, m)
                ck = canonical_based_key(child)
                if ck in seen:
                    continue
                seen[ck] = (child, key, m)
                nxt.append(ck)
                expanded += 1
                if ck in other:
                    return SearchOutcome(
                        _assemble(sides, ck, b1, b2, cap), expanded, sum(depths)
                    )
                if expanded >= max_states:
                    return SearchOutcome(None, expanded, sum(depths))
        frontiers[side] = nxt
    return SearchOutcome(None, expanded, sum(depths))


def _chain(side: dict, key):
    """Keys from the root out to ``key`` with the moves between them."""
    links = []
    while True:
        rep, parent, move = side[key]
        if parent is None:
            links.append((key, rep, None))
            break
        links.append((key, rep, move))
        key = parent
    return list(reversed(links))


def _assemble(sides, meet, b1: BasedDiagram, b2: BasedDiagram, cap: int):
    fwd = _chain(sides[0], meet)
    bwd = _chain(sides[1], meet)
    records = []
    cur = b1
    for (_, rep, move) in fwd[1:]:
        cur = apply_based(cur, move)
        records.append(
            {"move": move.to_json(), "diagram": serialize(cur.diagram), "mark": cur.mark}
        )
    # splice onto the backward chain: retarget through canonical keys
    for (key, rep, move) in reversed(bwd[1:]):
        parent_key = sides[1][key][1]
        target = sides[1][parent_key][0]
        tk = canonical_based_key(target)
        step = _find_step(cur, tk, cap)
        if step is None:
            raise AssertionError("backward edge has no forward inverse")
        cur = apply_based(cur, step)
        records.append(
            {"move": step.to_json(), "diagram": serialize(cur.diagram), "mark": cur.mark}
        )
    records.append({"iso_to": serialize(b2.diagram), "mark": b2.mark})
    assert canonical_based_key(cur) == canonical_based_key(b2)
    return records


def _find_step(b: BasedDiagram, target_key, cap: int) -> Optional[MoveInstance]:
    for m in based_moves(b, cap):
        if canonical_based_key(apply_based(b, m)) == target_key:
            return m
    return None


def replay_path(b1: BasedDiagram, records: list) -> BasedDiagram:
    """Re-run a path from bounded_bfs, checking each recorded waypoint."""
    cur = b1
    for rec in records:
        if "iso_to" in rec:
            from .diagram import parse_gauss_code

            target = BasedDiagram(
                parse_gauss_code(rec["iso_to"]), rec["mark"]
            )
            if canonical_based_key(cur) != canonical_based_key(target):
                raise AssertionError("isomorphism waypoint mismatch")
            cur = target
            continue
        m = MoveInstance.from_json(rec["move"])
        cur = apply_based(cur, m)
        if serialize(cur.diagram) != rec["diagram"] or cur.mark != rec["mark"]:
            raise AssertionError("replay diverged from the recorded path")
    return cur


def explore_crossing_graph(
    b: BasedDiagram, max_crossings: int, max_depth: int
) -> set:
    """Reachable (canonical based diagram, I2-parity) states.

    Edges are based moves (parity preserved) and in-diagram I2 pairs through
    the mark (parity flipped).  Both parities of a state are listed when both
    are reachable within budget.
    """
    start = canonical_based_key(b)
    seen = {(start, 0): b}
    frontier = [(start, 0)]
    depth = 0
    while frontier and depth < max_depth:
        depth += 1
        nxt = []
        for key, parity in frontier:
            rep = seen[(key, parity)]
            steps = [
                (apply_based(rep, m), parity) for m in based_moves(rep, max_crossings)
            ]
            for (u, w) in i2_pairs(rep.diagram):
                partner = None
                if u == rep.mark:
                    partner = w
                elif w == rep.mark:
                    partner = u
                if partner is not None:
                    steps.append((BasedDiagram(rep.diagram, partner), parity ^ 1))
            for child, cp in steps:
                ck = (canonical_based_key(child), cp)
                if ck in seen:
                    continue
                seen[ck] = child
                nxt.append(ck)
        frontier = nxt
    return {(key, parity) for (key, parity) in seen}
