"""Gauss diagrams of virtual/flat/free tangles and elementary diagram surgery.

A diagram is a disjoint union of oriented circles ("c") and intervals ("l")
carrying chord endpoints.  Each chord joins two endpoints; in the virtual
flavor it carries an arrow (tail at the overpass, head at the underpass) and
a sign, in the flat flavor an arrow only, in the free flavor nothing.

The text format is the one used throughout the package and by the CLI
catalog files::

    diagram   := component (";" component)*
    component := ("c:" | "l:") token*
    token     := ("O"|"U") <label> ("+"|"-")     virtual
               | ("H"|"T") <label>               flat   (H = arrow head)
               | "E" <label>                     free

Tokens are whitespace separated and labels are positive integers, each
appearing exactly twice.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional

VIRTUAL = "virtual"
FLAT = "flat"
FREE = "free"

TAIL = 0  # overpass end / arrow tail
HEAD = 1  # underpass end / arrow head

CLOSED = "c"
LONG = "l"


class GaussCodeError(ValueError):
    """Malformed Gauss code text."""


class UnbalancedLabel(GaussCodeError):
    """A chord label does not appear exactly twice."""


class RoleConflict(GaussCodeError):
    """Both ends of a chord claim the same role, or its signs disagree."""


class SignMissing(GaussCodeError):
    """A virtual token lacks its +/- sign."""


class BadComponentKind(GaussCodeError):
    """Component prefix is neither "c:" nor "l:"."""


class WrongFlavor(ValueError):
    """Operation not defined for this diagram flavor."""


class NotSelfCrossing(ValueError):
    """The chord has endpoints on two distinct components."""


class NotLongComponent(ValueError):
    """The chord does not live on a long component."""


class WrongComponentCount(ValueError):
    """The diagram has the wrong number of components for this operation."""


@dataclass(frozen=True)
class Component:
    """One circle or interval with its ordered chord-end sequence."""

    kind: str  # CLOSED or LONG
    ends: tuple[tuple[int, int], ...]  # (chord label, role)

    def __post_init__(self):
        if self.kind not in (CLOSED, LONG):
            raise BadComponentKind(f"bad component kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class GaussDiagram:
    """Immutable signed arrow chord diagram.

    ``signs`` maps chord labels to +-1 and is only populated for the
    virtual flavor.  Equality is structural: flavor, component kinds and
    the canonical (first-visit relabelled) serialization must agree.
    """

    flavor: str
    components: tuple[Component, ...]
    signs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.flavor not in (VIRTUAL, FLAT, FREE):
            raise ValueError(f"unknown flavor {self.flavor!r}")

    # -- derived lookup tables ------------------------------------------------

    @cached_property
    def sign_map(self) -> dict[int, int]:
        return dict(self.signs)

    @cached_property
    def chord_ends(self) -> dict[int, tuple[tuple[int, int], tuple[int, int]]]:
        """label -> ((ci, pos) of tail end, (ci, pos) of head end).

        For the free flavor the two slots are ordered by first visit.
        """
        seen: dict[int, list] = {}
        for ci, comp in enumerate(self.components):
            for pos, (label, role) in enumerate(comp.ends):
                seen.setdefault(label, []).append((role, (ci, pos)))
        table = {}
        for label, entries in seen.items():
            if len(entries) != 2:
                raise UnbalancedLabel(f"chord {label} has {len(entries)} ends")
            if self.flavor is FREE or self.flavor == FREE:
                table[label] = (entries[0][1], entries[1][1])
            else:
                byrole = dict(entries)
                if len(byrole) != 2:
                    raise RoleConflict(f"chord {label} ends share a role")
                table[label] = (byrole[TAIL], byrole[HEAD])
        return table

    @cached_property
    def labels(self) -> tuple[int, ...]:
        return tuple(sorted(self.chord_ends))

    def __len__(self) -> int:
        return len(self.chord_ends)

    def _key(self):
        return (self.flavor, tuple(c.kind for c in self.components), serialize(self))

    def __eq__(self, other):
        if not isinstance(other, GaussDiagram):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"GaussDiagram({serialize(self)!r})"


def tangle_type(d: GaussDiagram) -> tuple[int, int]:
    """(closed component count, long component count)."""
    m = sum(1 for c in d.components if c.kind == CLOSED)
    return (m, len(d.components) - m)


def validate(d: GaussDiagram) -> None:
    """Raise if any structural invariant fails."""
    ends = d.chord_ends  # checks balance and roles
    if d.flavor == VIRTUAL:
        missing = set(ends) - set(d.sign_map)
        if missing:
            raise SignMissing(f"chords without sign: {sorted(missing)}")
        bad = [v for v, s in d.sign_map.items() if s not in (-1, 1)]
        if bad:
            raise SignMissing(f"bad signs on {bad}")
    elif d.signs:
        raise WrongFlavor("only virtual chords carry signs")
    for (a, b) in ends.values():
        if a == b:
            raise GaussCodeError("chord with coincident ends")


# -- text format ---------------------------------------------------------------

_VIRTUAL_TOKEN = re.compile(r"([OU])(\d+)([+-])$")
_VIRTUAL_NOSIGN = re.compile(r"([OU])(\d+)$")
_FLAT_TOKEN = re.compile(r"([HT])(\d+)$")
_FREE_TOKEN = re.compile(r"E(\d+)$")


def parse_gauss_code(text: str, flavor: Optional[str] = None) -> GaussDiagram:
    """Parse Gauss code text; the flavor is inferred from the tokens unless given.

    An all-empty code (no tokens anywhere) defaults to the virtual flavor.
    """
    comps = []
    tokens_seen = False
    inferred = flavor
    signs: dict[int, int] = {}
    for part in text.split(";"):
        part = part.strip()
        if part.startswith("c:"):
            kind, body = CLOSED, part[2:]
        elif part.startswith("l:"):
            kind, body = LONG, part[2:]
        else:
            raise BadComponentKind(f"component must start with 'c:' or 'l:': {part!r}")
        ends = []
        for tok in body.split():
            tokens_seen = True
            if m := _VIRTUAL_TOKEN.match(tok):
                tok_flavor = VIRTUAL
                role = TAIL if m.group(1) == "O" else HEAD
                label = int(m.group(2))
                s = 1 if m.group(3) == "+" else -1
                if signs.setdefault(label, s) != s:
                    raise RoleConflict(f"chord {label} has conflicting signs")
            elif _VIRTUAL_NOSIGN.match(tok):
                raise SignMissing(f"virtual token {tok!r} lacks a sign")
            elif m := _FLAT_TOKEN.match(tok):
                tok_flavor = FLAT
                role = TAIL if m.group(1) == "T" else HEAD
                label = int(m.group(2))
            elif m := _FREE_TOKEN.match(tok):
                tok_flavor = FREE
                label = int(m.group(1))
                role = 0
            else:
                raise GaussCodeError(f"bad token {tok!r}")
            if inferred is None:
                inferred = tok_flavor
            elif inferred != tok_flavor:
                raise GaussCodeError(f"token {tok!r} does not match flavor {inferred}")
            if label <= 0:
                raise GaussCodeError(f"labels must be positive: {tok!r}")
            ends.append((label, role))
        comps.append(Component(kind, tuple(ends)))
    if inferred is None:
        inferred = VIRTUAL if not tokens_seen else inferred
    d = GaussDiagram(inferred, tuple(comps), tuple(sorted(signs.items())))
    if inferred == FREE:
        d = _normalize_free_roles(d)
    validate(d)
    return d


def _normalize_free_roles(d: GaussDiagram) -> GaussDiagram:
    """Free chords have unordered ends; store role 0 at the first visit."""
    seen: set[int] = set()
    comps = []
    for comp in d.components:
        ends = []
        for label, _ in comp.ends:
            role = 0 if label not in seen else 1
            seen.add(label)
            ends.append((label, role))
        comps.append(Component(comp.kind, tuple(ends)))
    return GaussDiagram(FREE, tuple(comps))


def _role_token(d: GaussDiagram, label: int, role: int) -> str:
    if d.flavor == VIRTUAL:
        sig = "+" if d.sign_map[label] > 0 else "-"
        return ("O" if role == TAIL else "U") + str(label) + sig
    if d.flavor == FLAT:
        return ("T" if role == TAIL else "H") + str(label)
    return "E" + str(label)


def relabel_first_visit(d: GaussDiagram) -> dict[int, int]:
    """Canonical relabelling: chords numbered 1.. by first visit in stored order."""
    mapping: dict[int, int] = {}
    for comp in d.components:
        for label, _ in comp.ends:
            if label not in mapping:
                mapping[label] = len(mapping) + 1
    return mapping


def relabel(d: GaussDiagram, mapping: dict[int, int]) -> GaussDiagram:
    comps = tuple(
        Component(c.kind, tuple((mapping[l], r) for l, r in c.ends)) for c in d.components
    )
    signs = tuple(sorted((mapping[l], s) for l, s in d.signs))
    return GaussDiagram(d.flavor, comps, signs)


def serialize(d: GaussDiagram) -> str:
    """Canonical text: stored component order and base slots, first-visit labels."""
    mapping = relabel_first_visit(d)
    parts = []
    for comp in d.components:
        toks = [comp.kind + ":"]
        for label, role in comp.ends:
            if d.flavor == VIRTUAL:
                sig = "+" if d.sign_map[label] > 0 else "-"
                toks.append(("O" if role == TAIL else "U") + str(mapping[label]) + sig)
            elif d.flavor == FLAT:
                toks.append(("T" if role == TAIL else "H") + str(mapping[label]))
            else:
                toks.append("E" + str(mapping[label]))
        parts.append(" ".join(toks))
    return " ; ".join(parts)


# -- elementary queries ----------------------------------------------------------


def sign(d: GaussDiagram, v: int) -> int:
    if d.flavor != VIRTUAL:
        raise WrongFlavor("signs exist only on virtual diagrams")
    return d.sign_map[v]


def is_self_crossing(d: GaussDiagram, v: int) -> bool:
    (c1, _), (c2, _) = d.chord_ends[v]
    return c1 == c2


def arrow_positions(d: GaussDiagram, v: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """((ci,pos) of the arrow tail, (ci,pos) of the arrow head)."""
    if d.flavor == FREE:
        raise WrongFlavor("free chords carry no arrow")
    return d.chord_ends[v]


def _cyclic_between(pos: int, lo: int, hi: int, n: int) -> bool:
    """True if pos lies strictly inside the cyclic interval (lo, hi)."""
    if lo == hi:
        return False
    off = (pos - lo) % n
    return 0 < off < (hi - lo) % n


def half_contains(d: GaussDiagram, v: int, where: tuple[int, int]) -> bool:
    """Is the slot ``where`` strictly inside the left half of the self-crossing v?

    The left half runs from the arrow head forward along the component to the
    arrow tail.  Long components are read cyclically through their closure.
    """
    (ct, pt), (ch, ph) = arrow_positions(d, v)
    if ct != ch:
        raise NotSelfCrossing(f"chord {v} joins two components")
    ci, pos = where
    if ci != ct:
        return False
    return _cyclic_between(pos, ph, pt, len(d.components[ci].ends))


def linked(d: GaussDiagram, v: int, w: int) -> bool:
    """True iff the ends of w separate the ends of v on a common component."""
    if v == w:
        return False
    (c1, p1), (c2, p2) = d.chord_ends[v]
    (c3, q1), (c4, q2) = d.chord_ends[w]
    if not (c1 == c2 == c3 == c4):
        return False
    n = len(d.components[c1].ends)
    return _cyclic_between(q1, p1, p2, n) != _cyclic_between(q2, p1, p2, n)


def lk_pair(d: GaussDiagram, v: int, w: int) -> int:
    """Antisymmetric linking sign of two chords.

    +1 when w is linked with v and the arrow head of w lies on the left half
    of v, -1 when its tail does, 0 for unlinked chords.
    """
    if d.flavor == FREE:
        raise WrongFlavor("lk needs arrows; flatten first")
    if not linked(d, v, w):
        return 0
    _, head_w = arrow_positions(d, w)
    return 1 if half_contains(d, v, head_w) else -1


def component_index(d: GaussDiagram, v: int) -> tuple[int, int]:
    """(i, j) where component i overcrosses component j at v; 1-based."""
    if d.flavor != VIRTUAL:
        raise WrongFlavor("component index needs over/under data")
    (ct, _), (ch, _) = d.chord_ends[v]
    return (ct + 1, ch + 1)


def flat_component_index(d: GaussDiagram, v: int) -> tuple[int, int]:
    """(arrow tail component, arrow head component) for flat or virtual diagrams."""
    if d.flavor == VIRTUAL:
        (ct, _), (ch, _) = d.chord_ends[v]
        if d.sign_map[v] < 0:
            ct, ch = ch, ct
        return (ct + 1, ch + 1)
    (ct, _), (ch, _) = arrow_positions(d, v)
    return (ct + 1, ch + 1)


def order_index(d: GaussDiagram, v: int) -> int:
    """-1 for an early undercrossing, +1 for an early overcrossing."""
    (ct, pt), (ch, ph) = arrow_positions(d, v)
    if ct != ch:
        raise NotSelfCrossing(f"chord {v} joins two components")
    if d.components[ct].kind != LONG:
        raise NotLongComponent(f"chord {v} does not sit on a long component")
    return -1 if ph < pt else 1


# -- flavor projections and chord moves -------------------------------------------


def to_flat(d: GaussDiagram) -> GaussDiagram:
    """Forget signs; a negative chord's arrow is reversed (flat convention)."""
    if d.flavor == FLAT:
        return d
    if d.flavor != VIRTUAL:
        raise WrongFlavor("cannot lift a free diagram to flat")
    comps = []
    for comp in d.components:
        ends = []
        for label, role in comp.ends:
            if d.sign_map[label] < 0:
                role = 1 - role
            ends.append((label, role))
        comps.append(Component(comp.kind, tuple(ends)))
    return GaussDiagram(FLAT, tuple(comps))


def to_free(d: GaussDiagram) -> GaussDiagram:
    """Forget arrows and signs."""
    comps = tuple(
        Component(c.kind, tuple((l, 0) for l, _ in c.ends)) for c in d.components
    )
    return _normalize_free_roles(GaussDiagram(FREE, comps))


def crossing_change(d: GaussDiagram, v: int) -> GaussDiagram:
    """Reverse the arrow of v and flip its sign."""
    if d.flavor != VIRTUAL:
        raise WrongFlavor("crossing change needs over/under data")
    comps = tuple(
        Component(
            c.kind,
            tuple((l, (1 - r) if l == v else r) for l, r in c.ends),
        )
        for c in d.components
    )
    signs = tuple(sorted((l, -s if l == v else s) for l, s in d.signs))
    return GaussDiagram(VIRTUAL, comps, signs)


def virtualize(d: GaussDiagram, v: int) -> GaussDiagram:
    """Delete the chord v (its crossing becomes virtual)."""
    return delete_chords(d, {v})


def delete_chords(d: GaussDiagram, dead: Iterable[int]) -> GaussDiagram:
    dead = set(dead)
    comps = tuple(
        Component(c.kind, tuple(e for e in c.ends if e[0] not in dead))
        for c in d.components
    )
    signs = tuple((l, s) for l, s in d.signs if l not in dead)
    return GaussDiagram(d.flavor, comps, signs)


def reverse_component(d: GaussDiagram, ci: int) -> GaussDiagram:
    """Reverse the orientation of one component.

    Chords with exactly one end on the reversed component flip sign (virtual)
    or arrow (flat); chords with both ends there keep their data.
    """
    half_chords = set()
    for label, ((c1, _), (c2, _)) in d.chord_ends.items():
        if (c1 == ci) != (c2 == ci):
            half_chords.add(label)
    comps = []
    for i, comp in enumerate(d.components):
        if i != ci:
            comps.append(comp)
            continue
        ends = tuple(reversed(comp.ends))
        comps.append(Component(comp.kind, ends))
    if d.flavor == VIRTUAL:
        signs = tuple(sorted((l, -s if l in half_chords else s) for l, s in d.signs))
        return GaussDiagram(VIRTUAL, tuple(comps), signs)
    if d.flavor == FLAT:
        out = []
        for comp in comps:
            ends = tuple(
                (l, (1 - r) if l in half_chords else r) for l, r in comp.ends
            )
            out.append(Component(comp.kind, ends))
        return GaussDiagram(FLAT, tuple(out))
    return _normalize_free_roles(GaussDiagram(FREE, tuple(comps)))


# -- smoothings -------------------------------------------------------------------


def _split_positions(d: GaussDiagram, v: int):
    (ct, pt), (ch, ph) = d.chord_ends[v]
    return ct, pt, ch, ph


def oriented_smoothing(d: GaussDiagram, v: int) -> tuple[GaussDiagram, dict[str, int]]:
    """Remove v and reconnect respecting orientation.

    For a self-crossing the component splits; the left half (head to tail)
    becomes the first of the two new components and the half map tags the
    new component indices.  Smoothing a crossing between two closed
    components merges them and the half map is empty.
    """
    if d.flavor == FREE:
        raise WrongFlavor("smoothing needs an arrow to name the halves")
    (ct, pt), (ch, ph) = arrow_positions(d, v)
    comps = list(d.components)
    signs = tuple((l, s) for l, s in d.signs if l != v)
    if ct == ch:
        comp = comps[ct]
        n = len(comp.ends)
        left = [comp.ends[(ph + 1 + i) % n] for i in range((pt - ph - 1) % n)]
        right = [comp.ends[(pt + 1 + i) % n] for i in range((ph - pt - 1) % n)]
        if comp.kind == LONG:
            # the half that wraps through the closure keeps the free ends
            wrap_left = ph > pt
            lk = LONG if wrap_left else CLOSED
            rk = CLOSED if wrap_left else LONG
            if wrap_left:
                split = (n - 1) - ph  # re-cut the wrapped half at the old seam
                left = left[split:] + left[:split]
            else:
                split = (n - 1) - pt
                right = right[split:] + right[:split]
        else:
            lk = rk = CLOSED
        comps[ct : ct + 1] = [Component(lk, tuple(left)), Component(rk, tuple(right))]
        half = {"left": ct, "right": ct + 1}
        if d.flavor == VIRTUAL:
            s = d.sign_map[v]
            half["plus"] = half["left"] if s > 0 else half["right"]
            half["minus"] = half["right"] if s > 0 else half["left"]
        out = GaussDiagram(d.flavor, tuple(comps), signs)
        validate(out)
        return out, half
    # crossing between two components: orientation-respecting reconnection
    ca, cb = comps[ct], comps[ch]
    na, nb = len(ca.ends), len(cb.ends)
    tail_rest = [ca.ends[(pt + 1 + i) % na] for i in range(na - 1)]
    head_rest = [cb.ends[(ph + 1 + i) % nb] for i in range(nb - 1)]
    if ca.kind == CLOSED and cb.kind == CLOSED:
        merged = Component(CLOSED, tuple(head_rest + tail_rest))
        comps[min(ct, ch)] = merged
        del comps[max(ct, ch)]
        out = GaussDiagram(d.flavor, tuple(comps), signs)
        validate(out)
        return out, {}
    raise NotSelfCrossing(
        "cross-component smoothing is supported for closed components only"
    )


def unoriented_smoothing(d: GaussDiagram, v: int) -> GaussDiagram:
    """Remove v and reconnect against orientation.

    The arc running from the arrow tail passage to the arrow head passage is
    traversed backwards in the result; chords with exactly one end on it flip
    sign (virtual) or arrow (flat).  On long components the reversed arc is
    the interior one (it never runs through the boundary).
    """
    if d.flavor == FLAT:
        lift = GaussDiagram(VIRTUAL, d.components, tuple((l, 1) for l in d.chord_ends))
        return to_flat(unoriented_smoothing(lift, v))
    if d.flavor == FREE:
        (ct, pt), (ch, ph) = d.chord_ends[v]
    else:
        (ct, pt), (ch, ph) = arrow_positions(d, v)
    if ct != ch:
        return _unoriented_merge(d, v)
    comp = d.components[ct]
    n = len(comp.ends)
    if comp.kind == LONG:
        lo, hi = (pt, ph) if pt < ph else (ph, pt)
        inner = comp.ends[lo + 1 : hi]
        new_ends = comp.ends[:lo] + tuple(reversed(inner)) + comp.ends[hi + 1 :]
    else:
        inner = tuple(comp.ends[(pt + 1 + i) % n] for i in range((ph - pt - 1) % n))
        outer = tuple(comp.ends[(ph + 1 + i) % n] for i in range((pt - ph - 1) % n))
        new_ends = tuple(reversed(inner)) + outer
    flip = {l for l, _ in inner}
    flip -= {l for l in flip if sum(1 for e, _ in inner if e == l) == 2}
    comps = list(d.components)
    comps[ct] = Component(comp.kind, new_ends)
    if d.flavor == VIRTUAL:
        signs = tuple(sorted((l, -s if l in flip else s) for l, s in d.signs if l != v))
        out = GaussDiagram(VIRTUAL, tuple(comps), signs)
    else:
        out = _normalize_free_roles(GaussDiagram(FREE, tuple(comps)))
    validate(out)
    return out


def _unoriented_merge(d: GaussDiagram, v: int) -> GaussDiagram:
    """Unoriented smoothing across two closed components: merge, reversing one."""
    if d.flavor == FREE:
        (ct, pt), (ch, ph) = d.chord_ends[v]
    else:
        (ct, pt), (ch, ph) = arrow_positions(d, v)
    comps = list(d.components)
    ca, cb = comps[ct], comps[ch]
    if ca.kind != CLOSED or cb.kind != CLOSED:
        raise NotSelfCrossing("unoriented cross-component smoothing needs closed components")
    na, nb = len(ca.ends), len(cb.ends)
    tail_rest = [ca.ends[(pt + 1 + i) % na] for i in range(na - 1)]
    head_rev = [cb.ends[(ph - 1 - i) % nb] for i in range(nb - 1)]
    flip = set()
    for label, ((c1, _), (c2, _)) in d.chord_ends.items():
        if label != v and (c1 == ch) != (c2 == ch):
            flip.add(label)
    merged = Component(CLOSED, tuple(head_rev + tail_rest))
    comps[min(ct, ch)] = merged
    del comps[max(ct, ch)]
    if d.flavor == VIRTUAL:
        signs = tuple(sorted((l, -s if l in flip else s) for l, s in d.signs if l != v))
        out = GaussDiagram(VIRTUAL, tuple(comps), signs)
    else:
        out = _normalize_free_roles(GaussDiagram(FREE, tuple(comps)))
    validate(out)
    return out


def half_cycle(d: GaussDiagram, v: int, tag: str) -> tuple[tuple[int, int], ...]:
    """Slot sequence of one smoothing half of the self-crossing v.

    Tags: "left", "right", "plus", "minus" (signed tags need the virtual
    flavor).  The sequence lists the chord-end slots the half passes, in
    traversal order.
    """
    (ct, pt), (ch, ph) = arrow_positions(d, v)
    if ct != ch:
        raise NotSelfCrossing(f"chord {v} joins two components")
    if tag in ("plus", "minus"):
        s = sign(d, v)
        tag = ("left" if s > 0 else "right") if tag == "plus" else (
            "right" if s > 0 else "left"
        )
    n = len(d.components[ct].ends)
    if tag == "left":
        span = range((pt - ph - 1) % n)
        start = ph
    elif tag == "right":
        span = range((ph - pt - 1) % n)
        start = pt
    else:
        raise ValueError(f"unknown half tag {tag!r}")
    return tuple((ct, (start + 1 + i) % n) for i in span)
