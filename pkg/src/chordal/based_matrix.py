"""Based matrices of knot crossings: excision moves, primitive reduction,
graded forms and the intersection index polynomials.

A based matrix is a skew-symmetric integer form on {s} and the crossing
labels, recording half-intersections; the distinguished element d marks the
based crossing.  Reading note for the excision definitions: core elements
satisfy b(g, h) = b(s, h) for all h, and complementary pairs b(g1, h) +
b(g2, h) = b(s, h) for all h (the s argument placement is forced by
invertibility of the extension moves).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from . import diagram as dg
from . import surface as sf
from .diagram import FLAT, GaussDiagram, VIRTUAL, WrongFlavor


class NotApplicable(ValueError):
    """The excision or N move does not apply to this element choice."""


class NotGraded(ValueError):
    """The operation needs a graded based matrix."""


@dataclass(frozen=True)
class BasedMatrix:
    """(G, s, d, b, eps) with optional grading.

    ``labels`` lists G without s; row/column 0 of ``b`` is s.  ``d_label``
    is None for the unbased variant used by smoothing fingerprints; ``eps``
    is 0 in that case.  ``grading`` maps positions of ``labels`` to +-1.
    """

    labels: tuple
    d_label: Optional[int]
    b: tuple
    eps: int
    grading: Optional[tuple] = None

    def __post_init__(self):
        n = len(self.labels) + 1
        if len(self.b) != n or any(len(r) != n for r in self.b):
            raise ValueError("matrix shape mismatch")
        for i in range(n):
            if self.b[i][i] != 0:
                raise ValueError("diagonal must vanish")
            for j in range(i + 1, n):
                if self.b[i][j] != -self.b[j][i]:
                    raise ValueError("matrix must be skew-symmetric")
        if self.d_label is not None and self.d_label not in self.labels:
            raise ValueError("d must be one of the labels")
        if self.grading is not None:
            if len(self.grading) != len(self.labels):
                raise ValueError("grading length mismatch")
            if self.d_label is not None:
                if self.eps != self.grading[self.labels.index(self.d_label)]:
                    raise ValueError("eps must equal the grading of d")

    def index_of(self, label) -> int:
        return self.labels.index(label) + 1

    def row(self, label) -> tuple:
        return self.b[self.index_of(label)]

    def entry(self, g, h) -> int:
        i = 0 if g == "s" else self.index_of(g)
        j = 0 if h == "s" else self.index_of(h)
        return self.b[i][j]

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "d": self.d_label,
            "b": [list(r) for r in self.b],
            "eps": self.eps,
            "grading": list(self.grading) if self.grading else None,
        }


def based_matrix_of(d: GaussDiagram, v: int, graded: bool = False) -> BasedMatrix:
    """The based matrix of a knot diagram at the crossing v.

    Entries pair left-half classes on the Carter surface; the s row holds
    the Gaussian index n.  Graded matrices carry the crossing signs and need
    the virtual flavor.
    """
    if d.flavor not in (VIRTUAL, FLAT):
        raise WrongFlavor("based matrices need arrows")
    if graded and d.flavor != VIRTUAL:
        raise NotGraded("grading needs crossing signs")
    if len(d.components) != 1:
        raise dg.WrongComponentCount("based matrices are for knot diagrams")
    labels = tuple(sorted(d.chord_ends))
    rg, hs = sf.surface_data(d)
    whole = hs.coords(rg.diagram_cycle())
    half = {w: sf.half_class(d, w, "left") for w in labels}
    n = len(labels) + 1
    b = [[0] * n for _ in range(n)]
    for i, w in enumerate(labels, start=1):
        b[0][i] = hs.pairing(whole, half[w])
        b[i][0] = -b[0][i]
    for (i, w), (j, x) in itertools.combinations(enumerate(labels, start=1), 2):
        b[i][j] = hs.pairing(half[w], half[x])
        b[j][i] = -b[i][j]
    if graded:
        grading = tuple(d.sign_map[w] for w in labels)
        eps = d.sign_map[v]
    else:
        grading = None
        eps = d.sign_map[v] if d.flavor == VIRTUAL else 1
    return BasedMatrix(labels, v, tuple(tuple(r) for r in b), eps, grading)


def unbased_matrix_of(d: GaussDiagram) -> BasedMatrix:
    """Turaev's based matrix of a knot diagram without a distinguished crossing."""
    if len([c for c in d.components]) != 1:
        raise dg.WrongComponentCount("unbased matrices need one component")
    labels = tuple(sorted(d.chord_ends))
    if not labels:
        return BasedMatrix((), None, ((0,),), 0, None)
    rg, hs = sf.surface_data(d)
    whole = hs.coords(rg.diagram_cycle())
    half = {w: sf.half_class(d, w, "left") for w in labels}
    n = len(labels) + 1
    b = [[0] * n for _ in range(n)]
    for i, w in enumerate(labels, start=1):
        b[0][i] = hs.pairing(whole, half[w])
        b[i][0] = -b[0][i]
    for (i, w), (j, x) in itertools.combinations(enumerate(labels, start=1), 2):
        b[i][j] = hs.pairing(half[w], half[x])
        b[j][i] = -b[i][j]
    return BasedMatrix(labels, None, tuple(tuple(r) for r in b), 0, None)


# -- special elements ----------------------------------------------------------------


def find_special(t: BasedMatrix) -> dict:
    """Classify G without s: annihilating / core elements and complementary pairs."""
    n = len(t.labels)
    ann = []
    core = []
    comp = []
    for i in range(1, n + 1):
        if all(t.b[i][j] == 0 for j in range(n + 1)):
            ann.append(t.labels[i - 1])
        if all(t.b[i][j] == t.b[0][j] for j in range(n + 1)):
            core.append(t.labels[i - 1])
    for i, j in itertools.combinations(range(1, n + 1), 2):
        if t.grading is not None and t.grading[i - 1] == t.grading[j - 1]:
            continue
        if all(t.b[i][k] + t.b[j][k] == t.b[0][k] for k in range(n + 1)):
            comp.append((t.labels[i - 1], t.labels[j - 1]))
    return {"annihilating": ann, "core": core, "complementary": comp}


def _fresh(t: BasedMatrix, k: int = 1):
    base = max((l for l in t.labels), default=0)
    return [base + i + 1 for i in range(k)]


def extend(t: BasedMatrix, move: str, params=None) -> BasedMatrix:
    """Apply an extension M1 (zero row), M2 (copy of s's row), or M3 (split).

    For M3, params is the new first row as a mapping over ["s"] + labels;
    the pair entry is forced by complementarity.
    """
    n = len(t.labels)
    if move in ("M1", "M2"):
        (g,) = _fresh(t)
        row = [0] * (n + 1) if move == "M1" else list(t.b[0])
        b = [list(r) + [-row[i]] for i, r in enumerate(t.b)]
        b.append(row + [0])
        grading = None
        if t.grading is not None:
            sgn = 1 if params is None else params
            grading = t.grading + (sgn,)
        return BasedMatrix(
            t.labels + (g,), t.d_label, tuple(tuple(r) for r in b), t.eps, grading
        )
    if move == "M3":
        g1, g2 = _fresh(t, 2)
        row = [params.get("s", 0)] + [params.get(l, 0) for l in t.labels]
        comp_row = [t.b[0][i] - row[i] for i in range(n + 1)]
        x = row[0]  # b(g1, g2) forced by complementarity at g2
        b = [list(r) + [-row[i], -comp_row[i]] for i, r in enumerate(t.b)]
        b.append(row + [0, x])
        b.append(comp_row + [-x, 0])
        grading = None
        if t.grading is not None:
            sgn = params.get("grading", 1)
            grading = t.grading + (sgn, -sgn)
        return BasedMatrix(
            t.labels + (g1, g2), t.d_label, tuple(tuple(r) for r in b), t.eps, grading
        )
    raise NotApplicable(f"unknown extension {move}")


def excise(t: BasedMatrix, move: str, element) -> BasedMatrix:
    """Inverse extensions; the distinguished element is never excised."""
    special = find_special(t)
    if move == "M1":
        if element not in special["annihilating"] or element == t.d_label:
            raise NotApplicable(f"{element} is not an excisable annihilating element")
        dead = {element}
    elif move == "M2":
        if element not in special["core"] or element == t.d_label:
            raise NotApplicable(f"{element} is not an excisable core element")
        dead = {element}
    elif move == "M3":
        pair = tuple(sorted(element))
        pairs = {tuple(sorted(p)) for p in special["complementary"]}
        if pair not in pairs or t.d_label in pair:
            raise NotApplicable(f"{element} is not an excisable complementary pair")
        dead = set(pair)
    else:
        raise NotApplicable(f"unknown excision {move}")
    keep = [0] + [i for i, l in enumerate(t.labels, start=1) if l not in dead]
    labels = tuple(l for l in t.labels if l not in dead)
    b = tuple(tuple(t.b[i][j] for j in keep) for i in keep)
    grading = None
    if t.grading is not None:
        grading = tuple(
            g for l, g in zip(t.labels, t.grading) if l not in dead
        )
    return BasedMatrix(labels, t.d_label, b, t.eps, grading)


def move_n(t: BasedMatrix, g) -> BasedMatrix:
    """Re-base at a complementary partner of d, flipping eps."""
    if t.d_label is None:
        raise NotApplicable("unbased matrix has no distinguished element")
    pairs = {tuple(sorted(p)) for p in find_special(t)["complementary"]}
    if tuple(sorted((t.d_label, g))) not in pairs:
        raise NotApplicable(f"{g} is not complementary with d")
    return BasedMatrix(t.labels, g, t.b, -t.eps, t.grading)


def reduce_primitive(t: BasedMatrix) -> BasedMatrix:
    """Greedy excision until no excisable element remains."""
    while True:
        special = find_special(t)
        ann = [g for g in special["annihilating"] if g != t.d_label]
        if ann:
            t = excise(t, "M1", ann[0])
            continue
        core = [g for g in special["core"] if g != t.d_label]
        if core:
            t = excise(t, "M2", core[0])
            continue
        pairs = [p for p in special["complementary"] if t.d_label not in p]
        if pairs:
            t = excise(t, "M3", pairs[0])
            continue
        return t


def reduce_primitive_unbased(t: BasedMatrix) -> tuple:
    """Primitive reduction + canonical form for unbased matrices."""
    return canonical_form(reduce_primitive(t))


# -- canonical forms --------------------------------------------------------------------


def _signature_refine(t: BasedMatrix):
    """Partition labels by iterated row signatures (canonical preprocessing)."""
    n = len(t.labels)
    idx = list(range(1, n + 1))
    sig = {
        i: (
            t.grading[i - 1] if t.grading is not None else 0,
            1 if t.labels[i - 1] == t.d_label else 0,
            t.b[i][0],
        )
        for i in idx
    }
    while True:
        order = {s: k for k, s in enumerate(sorted(set(sig.values())))}
        nxt = {
            i: (
                order[sig[i]],
                tuple(sorted((order[sig[j]], t.b[i][j]) for j in idx if j != i)),
            )
            for i in idx
        }
        if len(set(nxt.values())) == len(set(sig.values())):
            sig = nxt
            break
        sig = nxt
    groups: dict = {}
    for i in idx:
        groups.setdefault(sig[i], []).append(i)
    return [groups[s] for s in sorted(groups)]


def _matrix_key(t: BasedMatrix, perm):
    """Serialization under a permutation of the non-s indices."""
    order = [0] + list(perm)
    b = tuple(tuple(t.b[i][j] for j in order) for i in order)
    dpos = None
    if t.d_label is not None:
        dpos = perm.index(t.index_of(t.d_label)) + 1
    grading = None
    if t.grading is not None:
        grading = tuple(t.grading[i - 1] for i in perm)
    return (b, dpos, t.eps, grading)


def _least_permutation_key(t: BasedMatrix, limit: int = 40320):
    groups = _signature_refine(t)
    total = 1
    for g in groups:
        for k in range(2, len(g) + 1):
            total *= k
    if total > limit:
        raise RuntimeError("canonical form search space too large")
    best = None
    for parts in itertools.product(*[itertools.permutations(g) for g in groups]):
        perm = [i for part in parts for i in part]
        key = _matrix_key(t, perm)
        if best is None or key < best:
            best = key
    return best


def _eps_variants(t: BasedMatrix):
    """Orbit of t under N moves and the core/annihilating d-row swap."""
    out = {}
    stack = [t]
    while stack:
        m = stack.pop()
        key = (m.labels, m.d_label, m.b, m.eps, m.grading)
        if key in out:
            continue
        out[key] = m
        if m.d_label is None:
            continue
        special = find_special(m)
        for pair in special["complementary"]:
            if m.d_label in pair:
                g = pair[0] if pair[1] == m.d_label else pair[1]
                stack.append(BasedMatrix(m.labels, g, m.b, -m.eps, m.grading))
        i = m.index_of(m.d_label)
        if m.d_label in special["core"]:
            b = [list(r) for r in m.b]
            for j in range(len(m.labels) + 1):
                b[i][j] = 0
                b[j][i] = 0
            stack.append(
                BasedMatrix(m.labels, m.d_label, tuple(tuple(r) for r in b), -m.eps, m.grading)
            )
        if m.d_label in special["annihilating"]:
            b = [list(r) for r in m.b]
            for j in range(len(m.labels) + 1):
                if j != i:
                    b[i][j] = m.b[0][j]
                    b[j][i] = -m.b[0][j]
            try:
                stack.append(
                    BasedMatrix(
                        m.labels, m.d_label, tuple(tuple(r) for r in b), -m.eps, m.grading
                    )
                )
            except ValueError:
                pass
    return list(out.values())


def canonical_form(t: BasedMatrix):
    """Canonical key of the homology class of a primitive matrix.

    Minimizes the serialization over label permutations, N moves, and the
    replacement of a core d-row by an annihilating one (and back), as in the
    uniqueness statement for primitive matrices.
    """
    return min(_least_permutation_key(v) for v in _eps_variants(t))


# -- graded forms and the intersection index ----------------------------------------------


def b_alpha_beta(t: BasedMatrix, alpha: int, beta: int) -> tuple:
    """The sign-twisted form of a graded based matrix."""
    if t.grading is None:
        raise NotGraded("b^{ab} needs a graded matrix")
    n = len(t.labels)
    sgn = (0,) + t.grading  # 1-based positions
    out = [[0] * (n + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        out[i][0] = alpha * sgn[i] * t.b[i][0]
        out[0][i] = beta * sgn[i] * t.b[0][i]
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            out[i][j] = (
                alpha * beta * sgn[i] * sgn[j] * t.b[i][j]
                - (1 - alpha * sgn[i]) // 2 * t.b[i][0]
                - (1 - beta * sgn[j]) // 2 * t.b[0][j]
            )
    for i in range(1, n + 1):
        out[i][i] = (
            -(1 - alpha * sgn[i]) // 2 * t.b[i][0]
            - (1 - beta * sgn[i]) // 2 * t.b[0][i]
        )
    return tuple(tuple(r) for r in out)


def matrix_lk(t: BasedMatrix, alpha: int, beta: int) -> dict[int, int]:
    """Linking invariant of the matrix index iota(g) = b^{ab}(g, d).

    Loop values (the iota values a hypothetical M1- or M2-inserted element
    would take) are excluded, so M1/M2 extensions do not change the value,
    and M3 pairs cancel by the complementary-row relation.
    """
    if t.d_label is None:
        raise NotApplicable("needs a distinguished element")
    if t.grading is None:
        raise NotGraded("the intersection index needs a graded matrix")
    bab = b_alpha_beta(t, alpha, beta)
    dpos = t.index_of(t.d_label)
    sgn_d = t.grading[dpos - 1]
    b_sd = t.b[0][dpos]
    # M1 element: b(g,.) = 0; M2 element: b(g,.) = b(s,.), either grading
    loop = {-(1 - beta * sgn_d) // 2 * b_sd}
    for eps_new in (1, -1):
        loop.add(
            alpha * beta * eps_new * sgn_d * b_sd - (1 - beta * sgn_d) // 2 * b_sd
        )
    out: dict[int, int] = {}
    for i in range(1, len(t.labels) + 1):
        val = bab[i][dpos]
        if val in loop:
            continue
        out[val] = out.get(val, 0) + t.grading[i - 1]
        if not out[val]:
            del out[val]
    return out


def intersection_index(d: GaussDiagram, v: int, alpha: int, beta: int) -> dict[int, int]:
    """The intersection index of a crossing as an element of Z[Z]."""
    return matrix_lk(based_matrix_of(d, v, graded=True), alpha, beta)
