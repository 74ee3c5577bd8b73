"""Crossing indices: the axioms framework and the concrete index catalogue.

Provides the Gaussian indices n and Ind, adapters between signed and
unsigned indices, loop values, index polynomials (Cheng's f, Turaev's u,
wriggle numbers), smoothing fingerprints, the VKP combined index, secondary
indices, derived parities, weak parities with projection-induced indices,
and the oriented-parity axiom checker used by the fuzz harness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import gcd
from typing import Callable, Optional

from . import diagram as dg
from . import moves as mv
from . import surface as sf
from .algebra import IndexPolynomial, IntMod, QuotientVec, value_key, zpoly_str
from .diagram import (
    FLAT,
    FREE,
    GaussDiagram,
    VIRTUAL,
    WrongComponentCount,
    WrongFlavor,
)


# -- Gaussian indices ---------------------------------------------------------------


def gaussian_n(d: GaussDiagram, v: int) -> int:
    """Turaev's index n(v): the diagram class paired with the left half.

    Computed chord-combinatorially; agrees with the homological pairing on
    the Carter surface (cross-checked in the test suite).
    """
    if d.flavor == FREE:
        raise WrongFlavor("n needs arrows")
    total = 0
    for w, (tail, head) in d.chord_ends.items():
        if w == v:
            continue
        s = d.sign_map[w] if d.flavor == VIRTUAL else 1
        hin = dg.half_contains(d, v, head)
        tin = dg.half_contains(d, v, tail)
        total += s * (int(hin) - int(tin))
    return total


def gaussian_n_homological(d: GaussDiagram, v: int) -> int:
    """Independent route to n(v) through the Carter surface."""
    rg, hs = sf.surface_data(d)
    return hs.pairing(hs.coords(rg.diagram_cycle()), sf.half_class(d, v, "left"))


def gaussian_ind(d: GaussDiagram, v: int) -> int:
    """The index Ind(v) = sgn(v) * n(v) of virtual knot theory."""
    if d.flavor != VIRTUAL:
        raise WrongFlavor("Ind needs crossing signs")
    if not dg.is_self_crossing(d, v):
        raise dg.NotSelfCrossing(f"chord {v} joins two components")
    return d.sign_map[v] * gaussian_n(d, v)


# -- evaluator framework --------------------------------------------------------------


@dataclass
class IndexEvaluator:
    """A named crossing trait with an optional involution on its values.

    ``signed`` selects the (I2+) check (involuted values on I2 pairs) over
    the unsigned (I2) check.  ``local_only`` marks evaluators whose values
    are not comparable across diagrams (per-diagram coefficient groups);
    they are exempt from the cross-diagram (I0) fuzz check.
    """

    name: str
    evaluate: Callable[[GaussDiagram, int], object]
    signed: bool = False
    involution: Callable[[object], object] = lambda x: x
    flavors: tuple = (VIRTUAL,)
    defined_on: Callable[[GaussDiagram, int], bool] = lambda d, v: True
    local_only: bool = False

    def applies(self, d: GaussDiagram) -> bool:
        return d.flavor in self.flavors


def _self_crossing(d, v):
    return dg.is_self_crossing(d, v)


def hat_adapter(sigma: IndexEvaluator) -> IndexEvaluator:
    """Signed index -> index, twisting by the crossing sign."""

    def ev(d, v):
        x = sigma.evaluate(d, v)
        return x if d.sign_map[v] > 0 else sigma.involution(x)

    return IndexEvaluator(
        f"hat({sigma.name})",
        ev,
        signed=False,
        flavors=(VIRTUAL,),
        defined_on=sigma.defined_on,
        local_only=sigma.local_only,
    )


def tilde_adapter(iota: IndexEvaluator) -> IndexEvaluator:
    """Index -> signed index by recording the crossing sign."""

    def ev(d, v):
        return (iota.evaluate(d, v), d.sign_map[v])

    return IndexEvaluator(
        f"tilde({iota.name})",
        ev,
        signed=True,
        involution=lambda p: (p[0], -p[1]),
        flavors=(VIRTUAL,),
        defined_on=iota.defined_on,
        local_only=iota.local_only,
    )


def bar_adapter(sigma: IndexEvaluator) -> IndexEvaluator:
    """Signed index -> index with values in the involution quotient."""

    def ev(d, v):
        x = sigma.evaluate(d, v)
        y = sigma.involution(x)
        return min((value_key(x), x), (value_key(y), y))[1]

    return IndexEvaluator(
        f"bar({sigma.name})",
        ev,
        signed=False,
        flavors=sigma.flavors,
        defined_on=sigma.defined_on,
        local_only=sigma.local_only,
    )


# -- loop values ----------------------------------------------------------------------


class PairingViolation(AssertionError):
    """An alleged index takes inconsistent values on paired loop types."""


def loop_values(evaluator: IndexEvaluator, d: GaussDiagram, component: int) -> dict:
    """Evaluate the index on each R1-inserted kink type on one component.

    Checks the loop pairing laws (l+ with r-, l- with r+ for signed
    evaluators; equal values for unsigned ones) and returns type -> value.
    """
    slot = 0
    out = {}
    for m in mv.enumerate_moves(d, kinds=("r1add",)):
        if m.site != (component, slot):
            continue
        d2, _ = mv.apply_move(d, m)
        (new,) = set(d2.chord_ends) - set(d.chord_ends)
        out[m.variant[0]] = evaluator.evaluate(d2, new)
    if d.flavor == VIRTUAL:
        pairs = (("l+", "r-"), ("l-", "r+"))
    elif d.flavor == FLAT:
        pairs = (("l", "r"),)
    else:
        pairs = ()
    for a, b in pairs:
        want = evaluator.involution(out[a]) if evaluator.signed else out[a]
        if value_key(out[b]) != value_key(want):
            raise PairingViolation(
                f"{evaluator.name}: {b} value {out[b]!r} != dual of {a} value {out[a]!r}"
            )
    return out


def theory_loop_values(evaluator: IndexEvaluator, d: GaussDiagram) -> set:
    """Serialization keys of all loop values of this diagram's components."""
    keys = set()
    for ci in range(len(d.components)):
        for val in loop_values(evaluator, d, ci).values():
            keys.add(value_key(val))
    return keys


# -- index polynomials ----------------------------------------------------------------


def lk_polynomial(
    d: GaussDiagram, sigma: IndexEvaluator, loop_keys: Optional[set] = None
) -> IndexPolynomial:
    """The linking invariant: the class of the sum of values off the loop set."""
    if loop_keys is None:
        loop_keys = theory_loop_values(sigma, d)
    poly = IndexPolynomial()
    inv = sigma.involution if sigma.signed else (lambda x: x)
    for v in d.chord_ends:
        if not sigma.defined_on(d, v):
            continue
        x = sigma.evaluate(d, v)
        if value_key(x) in loop_keys:
            continue
        poly.add(x, inv)
    return poly


def cheng_f(d: GaussDiagram) -> dict[int, int]:
    """Cheng's odd index polynomial in Z[Z \\ {0}]: sum of sgn(v) t^Ind(v)."""
    if d.flavor != VIRTUAL:
        raise WrongFlavor("f needs signs")
    out: dict[int, int] = {}
    for v in d.chord_ends:
        if not dg.is_self_crossing(d, v):
            continue
        ind = gaussian_ind(d, v)
        if ind == 0:
            continue
        out[ind] = out.get(ind, 0) + d.sign_map[v]
        if not out[ind]:
            del out[ind]
    return out


def turaev_u(d: GaussDiagram) -> dict[int, int]:
    """Turaev's u-polynomial of a flat knot: sum of sgn(n(v)) t^|n(v)|."""
    if d.flavor != FLAT:
        raise WrongFlavor("u is defined on flat diagrams; use to_flat first")
    out: dict[int, int] = {}
    for v in d.chord_ends:
        if not dg.is_self_crossing(d, v):
            continue
        n = gaussian_n(d, v)
        if n == 0:
            continue
        e = abs(n)
        out[e] = out.get(e, 0) + (1 if n > 0 else -1)
        if not out[e]:
            del out[e]
    return out


def wriggle(d: GaussDiagram) -> int:
    """Wriggle number of a 2-component link diagram.

    Counts cross-component crossings, +1 when the (flat) arrow head lies on
    the first component; with this convention n(v) equals the wriggle number
    of the oriented smoothing at v.
    """
    if len(d.components) != 2:
        raise WrongComponentCount("wriggle needs exactly two components")
    if d.flavor == FREE:
        raise WrongFlavor("wriggle needs arrows")
    total = 0
    for v in d.chord_ends:
        if dg.is_self_crossing(d, v):
            continue
        i, j = dg.flat_component_index(d, v)
        total += 1 if (i, j) == (2, 1) else -1
    return total


# -- smoothing fingerprints -------------------------------------------------------------


@dataclass(frozen=True)
class Fingerprint:
    """Sound-but-incomplete invariant tuple of a smoothed diagram.

    Equality fields are move-invariant; the genus is a per-diagram
    diagnostic only and excluded from comparisons.
    """

    components: int
    u_polys: tuple
    wriggles: tuple
    matrix: Optional[tuple]
    genus: int = field(compare=False, default=0)


def _fingerprint(d: GaussDiagram) -> Fingerprint:
    flat = dg.to_flat(d) if d.flavor == VIRTUAL else d
    nc = len(flat.components)
    upolys = []
    for ci in range(nc):
        poly: dict[int, int] = {}
        for v in flat.chord_ends:
            (c1, _), (c2, _) = flat.chord_ends[v]
            if c1 != ci or c2 != ci:
                continue
            n = gaussian_n(flat, v)
            if n:
                e = abs(n)
                poly[e] = poly.get(e, 0) + (1 if n > 0 else -1)
                if not poly[e]:
                    del poly[e]
        upolys.append(tuple(sorted(poly.items())))
    wr = []
    for i, j in itertools.combinations(range(nc), 2):
        total = 0
        for v in flat.chord_ends:
            cs = {flat.chord_ends[v][0][0], flat.chord_ends[v][1][0]}
            if cs != {i, j}:
                continue
            a, b = dg.flat_component_index(flat, v)
            total += 1 if (a, b) == (j + 1, i + 1) else -1
        wr.append(((i, j), total))
    matrix = None
    if nc == 1:
        from .based_matrix import unbased_matrix_of, reduce_primitive_unbased

        matrix = reduce_primitive_unbased(unbased_matrix_of(flat))
    return Fingerprint(nc, tuple(upolys), tuple(wr), matrix, sf.genus(flat))


def smoothing_fingerprint(d: GaussDiagram, v: int, kind: str):
    """Value of the smoothing index at v as a (fingerprint, dual) pair.

    kind "or": oriented smoothing; the dual renumbers the two halves.
    kind "un": unoriented smoothing; the dual reverses the component.
    """
    if kind == "or":
        sm, half = dg.oriented_smoothing(d, v)
        if half:
            i, j = half["left"], half["right"]
            comps = list(sm.components)
            comps[i], comps[j] = comps[j], comps[i]
            swapped = GaussDiagram(sm.flavor, tuple(comps), sm.signs)
        else:
            swapped = sm  # merged components: the renumbering involution is trivial
        return (_fingerprint(sm), _fingerprint(swapped))
    if kind == "un":
        sm = dg.unoriented_smoothing(d, v)
        (ci, _), _ = d.chord_ends[v]
        return (_fingerprint(sm), _fingerprint(dg.reverse_component(sm, ci)))
    raise ValueError(f"unknown smoothing kind {kind!r}")


def vkp_index(d: GaussDiagram, v: int, m: int) -> tuple[int, int]:
    """Combined index (Ind(v), m-th coefficient of u of the unoriented smoothing)."""
    ind = gaussian_ind(d, v)
    sm = dg.to_flat(dg.unoriented_smoothing(d, v))
    u = turaev_u(sm)
    return (ind, u.get(m, 0))


# -- oriented parities ------------------------------------------------------------------


@dataclass
class OrientedParity:
    """Signed index with values in an abelian group (ints or wrapped values)."""

    name: str
    evaluate: Callable[[GaussDiagram, int], object]
    flavors: tuple = (VIRTUAL,)
    local_only: bool = False
    integer_valued: bool = False

    def applies(self, d: GaussDiagram) -> bool:
        return d.flavor in self.flavors


def _as_int(x) -> int:
    if isinstance(x, IntMod):
        return x.value
    return int(x)


def _is_zero(x) -> bool:
    if hasattr(x, "is_zero"):
        return x.is_zero()
    return x == 0


def gaussian_parity() -> OrientedParity:
    return OrientedParity(
        "n", gaussian_n, flavors=(VIRTUAL, FLAT), integer_valued=True
    )


def homological_parity_evaluator() -> OrientedParity:
    def ev(d, v):
        rep, k = sf.homological_parity(d, v)
        return QuotientVec(rep, k)

    return OrientedParity("hp", ev, flavors=(VIRTUAL, FLAT), local_only=True)


class AxiomViolation(AssertionError):
    """An oriented-parity axiom failed on a concrete move site."""


def check_oriented_parity(p: OrientedParity, trajectory: mv.Trajectory) -> dict:
    """Verify (P0) on kinks and (P3+) on R3 sites along a trajectory.

    The incidence convention: the crossing between the top and bottom
    strands of the triangle carries -1, the other two +1 (this is the unique
    assignment, up to global sign, under which the Gaussian parity passes on
    exhaustive small-case R3 instances).
    """
    checked = {"P0": 0, "P3": 0}
    for d in trajectory.diagrams():
        if not p.applies(d):
            continue
        for label in mv.kink_chords(d):
            if not _is_zero(p.evaluate(d, label)):
                raise AxiomViolation(f"(P0) fails for {p.name} at {label} in {d!r}")
            checked["P0"] += 1
        for m in mv.enumerate_moves(d, kinds=("r3",)):
            tags = _r3_tags(d, m)
            vals = {t: p.evaluate(d, c) for t, c in tags.items()}
            acc = vals["TM"] + (-vals["TB"]) + vals["MB"]
            if not _is_zero(acc):
                raise AxiomViolation(
                    f"(P3+) fails for {p.name} at {tags} in {d!r}"
                )
            checked["P3"] += 1
    return checked


def _r3_tags(d: GaussDiagram, m: mv.MoveInstance) -> dict[str, int]:
    """Chord labels of an R3 site keyed by triangle role (TM, TB, MB)."""
    entries = []
    for (ci, pos) in m.site:
        comp = d.components[ci]
        k = len(comp.ends)
        entries.append((ci, pos, comp.ends[pos], comp.ends[(pos + 1) % k]))
    for perm in itertools.permutations(entries):
        pa, pb, pc = perm
        ca = {pa[2][0], pa[3][0]}
        cb = {pb[2][0], pb[3][0]}
        cc = {pc[2][0], pc[3][0]}
        tm, tb, mb = ca & cb, ca & cc, cb & cc
        if not (len(tm) == len(tb) == len(mb) == 1):
            continue
        tm, tb, mb = tm.pop(), tb.pop(), mb.pop()
        if len({tm, tb, mb}) != 3:
            continue
        tag_of = {tm: "TM", tb: "TB", mb: "MB"}
        if d.flavor == VIRTUAL:
            want = {
                0: {("TM", dg.TAIL), ("TB", dg.TAIL)},
                1: {("TM", dg.HEAD), ("MB", dg.TAIL)},
                2: {("TB", dg.HEAD), ("MB", dg.HEAD)},
            }
            ok = all(
                {(tag_of[e[0]], e[1]) for e in (side[2], side[3])} == want[i]
                for i, side in enumerate(perm)
            )
            if not ok:
                continue
        elif d.flavor == FLAT:
            key = tuple(
                tuple((tag_of[e[0]], e[1]) for e in (side[2], side[3]))
                for side in perm
            )
            if key not in mv.R3_PATTERNS_FLAT:
                continue
        return {"TM": tm, "TB": tb, "MB": mb}
    raise ValueError("site is not an R3 triangle")


# -- secondary index ---------------------------------------------------------------------


def secondary_index(d: GaussDiagram, v: int, p: OrientedParity):
    """The secondary index of v: a sum of lk-weighted parity cosets.

    Values live in Z[A/<p(v)>]; the zero coset is dropped (the paper's
    worked values require it and the axioms are preserved).  Returns
    (modulus, ((coset, coefficient), ...)) with nonnegative coset
    representatives.
    """
    if not p.integer_valued:
        raise WrongFlavor("secondary index needs an integer-valued parity")
    flat = dg.to_flat(d) if d.flavor == VIRTUAL else d
    modulus = abs(_as_int(p.evaluate(flat, v)))
    terms: dict[int, int] = {}
    for w in flat.chord_ends:
        if w == v:
            continue
        lk = dg.lk_pair(flat, v, w)
        if lk == 0:
            continue
        coset = lk * _as_int(p.evaluate(flat, w))
        coset = coset % modulus if modulus else coset
        if coset == 0:
            continue
        terms[coset] = terms.get(coset, 0) + lk
        if not terms[coset]:
            del terms[coset]
    return (modulus, tuple(sorted(terms.items())))


def secondary_involution(value):
    modulus, terms = value
    out: dict[int, int] = {}
    for coset, coeff in terms:
        neg = (-coset) % modulus if modulus else -coset
        out[neg] = out.get(neg, 0) - coeff
    return (modulus, tuple(sorted((k, c) for k, c in out.items() if c)))


# -- derived parities --------------------------------------------------------------------


def derived_values(d: GaussDiagram, order: int, base: Optional[OrientedParity] = None):
    """Iterated derived parities of the Gaussian parity on a virtual knot.

    Returns (modulus, {v: IntMod}) for the requested derivative order; the
    modulus chain divides out <sum p(v) Ind(v)> at each step.
    """
    if d.flavor != VIRTUAL:
        raise WrongFlavor("derived parities live on virtual knot diagrams")
    p = base or gaussian_parity()
    if not p.integer_valued:
        raise WrongFlavor("derived parities need an integer-valued parity")
    labels = [v for v in d.chord_ends if dg.is_self_crossing(d, v)]
    vals = {v: _as_int(p.evaluate(d, v)) for v in labels}
    modulus = 0
    rg, hs = sf.surface_data(d)
    left = {v: sf.half_class(d, v, "left") for v in labels}
    minus = {v: sf.half_class(d, v, "minus") for v in labels}
    ind = {v: gaussian_ind(d, v) for v in labels}
    for _ in range(order):
        step = sum(vals[v] * ind[v] for v in labels)
        modulus = gcd(modulus, step)
        nxt = {}
        for v in labels:
            total = sum(vals[w] * hs.pairing(left[v], minus[w]) for w in labels)
            nxt[v] = total % modulus if modulus else total
        vals = nxt
    return modulus, {v: IntMod(x, modulus) for v, x in vals.items()}


def derived_parity(order: int, base: Optional[OrientedParity] = None) -> OrientedParity:
    name = "n" + "'" * order if base is None else base.name + "'" * order

    def ev(d, v):
        _, vals = derived_values(d, order, base)
        return vals[v]

    return OrientedParity(name, ev, flavors=(VIRTUAL,), integer_valued=True)


# -- weak parity and projection ------------------------------------------------------------


def weak_parity_of(p: OrientedParity) -> Callable[[GaussDiagram, int], int]:
    """psi_p(v) = 1 iff p(v) is nonzero."""

    def psi(d, v):
        return 0 if _is_zero(p.evaluate(d, v)) else 1

    return psi


def ind_mod_parity(n_mod: int) -> OrientedParity:
    def ev(d, v):
        return IntMod(gaussian_ind(d, v), n_mod)

    return OrientedParity(f"Ind_{n_mod}", ev, flavors=(VIRTUAL,), integer_valued=True)


def parity_projection(d: GaussDiagram, psi) -> tuple[GaussDiagram, mv.Correspondence]:
    """Replace odd crossings by virtual ones (delete their chords)."""
    odd = {v for v in d.chord_ends if psi(d, v)}
    out = dg.delete_chords(d, odd)
    return out, mv.Correspondence(frozenset(out.chord_ends))


BULLET = "•"


def induced_index(iota: IndexEvaluator, psi) -> IndexEvaluator:
    """Index induced through the parity projection of psi.

    Odd crossings get the absorbing value; even crossings are evaluated in
    the projected diagram.
    """

    def ev(d, v):
        if psi(d, v):
            return BULLET
        proj, _ = parity_projection(d, psi)
        return iota.evaluate(proj, v)

    return IndexEvaluator(
        f"induced({iota.name})",
        ev,
        signed=iota.signed,
        involution=lambda x: x if x == BULLET else iota.involution(x),
        flavors=iota.flavors,
        defined_on=iota.defined_on,
    )


def check_weak_parity(psi, trajectory: mv.Trajectory) -> int:
    """(Psi3): an R3 with two even crossings has an even third crossing."""
    checked = 0
    for d in trajectory.diagrams():
        for m in mv.enumerate_moves(d, kinds=("r3",)):
            tags = _r3_tags(d, m)
            bits = [psi(d, c) for c in tags.values()]
            if sorted(bits)[:2] == [0, 0] and bits != [0, 0, 0]:
                raise AxiomViolation(f"(Psi3) fails at {tags} in {d!r}")
            checked += 1
    return checked
