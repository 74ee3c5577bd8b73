"""Carter surface of a Gauss diagram: ribbon graph, genus, H1, intersections.

The diagram is realized on its minimal closed oriented surface: one disk per
crossing (with the cyclic port order dictated by the crossing's sign), one
band per arc, and disks capping the boundary circles.  First homology and the
skew intersection pairing are computed combinatorially; cycles are closed
walks along the diagram's arcs, possibly against orientation.

Long components are closed up through a crossing-free arc before the surface
is built.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .diagram import (
    FLAT,
    FREE,
    GaussDiagram,
    HEAD,
    NotSelfCrossing,
    TAIL,
    VIRTUAL,
    WrongFlavor,
    arrow_positions,
)

OVER_IN, OVER_OUT, UNDER_IN, UNDER_OUT = 0, 1, 2, 3

# counterclockwise port order around a crossing disk
_ROTATION_POS = (OVER_OUT, UNDER_OUT, OVER_IN, UNDER_IN)
_ROTATION_NEG = (OVER_OUT, UNDER_IN, OVER_IN, UNDER_OUT)

Step = tuple[int, int]  # (arc id, +1 forward / -1 backward)
Walk = tuple[Step, ...]


@dataclass(frozen=True)
class Arc:
    """A band of the ribbon graph: from one crossing port to another."""

    comp: int
    gap: int  # the arc following the gap-th end of the component
    tail: tuple[int, int]  # (chord label, port) where the arc starts
    head: tuple[int, int]  # (chord label, port) where it ends


class RibbonGraph:
    """Rotation-system realization of a virtual or flat Gauss diagram."""

    def __init__(self, diagram: GaussDiagram):
        if diagram.flavor == FREE:
            raise WrongFlavor("free diagrams have no canonical surface")
        self.diagram = diagram
        arcs = []
        for ci, comp in enumerate(diagram.components):
            k = len(comp.ends)
            for gap in range(k):
                l1, r1 = comp.ends[gap]
                l2, r2 = comp.ends[(gap + 1) % k]
                tail = (l1, OVER_OUT if r1 == TAIL else UNDER_OUT)
                head = (l2, OVER_IN if r2 == TAIL else UNDER_IN)
                arcs.append(Arc(ci, gap, tail, head))
        self.arcs = tuple(arcs)
        self._arc_by_gap = {(a.comp, a.gap): i for i, a in enumerate(arcs)}
        # port -> (arc id, end) with end 0 = arc tail, 1 = arc head
        self.port_arc: dict[tuple[int, int], tuple[int, int]] = {}
        for i, a in enumerate(arcs):
            self.port_arc[a.tail] = (i, 0)
            self.port_arc[a.head] = (i, 1)
        self.vertices = tuple(sorted(diagram.chord_ends))

    def rotation(self, label: int) -> tuple[int, ...]:
        if self.diagram.flavor == VIRTUAL and self.diagram.sign_map[label] < 0:
            return _ROTATION_NEG
        return _ROTATION_POS

    @cached_property
    def face_count(self) -> int:
        """Orbits of the boundary walk over all darts."""
        # dart = (arc id, end the dart points at); next: cross the vertex disk
        # to the clockwise-adjacent port and leave along its arc.
        darts = [(i, 1) for i in range(len(self.arcs))] + [
            (i, 0) for i in range(len(self.arcs))
        ]
        seen = set()
        faces = 0
        for start in darts:
            if start in seen:
                continue
            faces += 1
            cur = start
            while cur not in seen:
                seen.add(cur)
                arc_id, end = cur
                arc = self.arcs[arc_id]
                label, port = arc.head if end == 1 else arc.tail
                rot = self.rotation(label)
                nxt_port = rot[(rot.index(port) - 1) % 4]
                nxt_arc, nxt_end = self.port_arc[(label, nxt_port)]
                # leave along that arc, pointing away from this vertex
                cur = (nxt_arc, 1 - nxt_end)
        return faces

    @cached_property
    def genus(self) -> int:
        v = len(self.vertices)
        e = len(self.arcs)
        if e == 0:
            return 0
        pieces = self._connected_pieces()
        chi = v - e + self.face_count
        g2 = 2 * pieces - chi
        if g2 < 0 or g2 % 2:
            raise AssertionError("bad Euler characteristic")
        return g2 // 2

    def _connected_pieces(self) -> int:
        parent = {v: v for v in self.vertices}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a in self.arcs:
            ra, rb = find(a.tail[0]), find(a.head[0])
            parent[ra] = rb
        return len({find(v) for v in self.vertices})

    # -- walks along the diagram ------------------------------------------------

    def arc_id(self, comp: int, gap: int) -> int:
        return self._arc_by_gap[(comp, gap)]

    def component_walk(self, ci: int) -> Walk:
        k = len(self.diagram.components[ci].ends)
        return tuple((self.arc_id(ci, gap), 1) for gap in range(k))

    def diagram_cycle(self) -> list[Walk]:
        return [self.component_walk(ci) for ci in range(len(self.diagram.components))]

    def half_walk(self, v: int, tag: str) -> Walk:
        """The closed curve of one oriented-smoothing half at a self-crossing."""
        d = self.diagram
        (ct, pt), (ch, ph) = arrow_positions(d, v)
        if ct != ch:
            raise NotSelfCrossing(f"chord {v} joins two components")
        if tag in ("plus", "minus"):
            s = d.sign_map[v]
            tag = ("left" if s > 0 else "right") if tag == "plus" else (
                "right" if s > 0 else "left"
            )
        n = len(d.components[ct].ends)
        if tag == "left":
            gaps = [(ph + i) % n for i in range((pt - ph) % n)]
        elif tag == "right":
            gaps = [(pt + i) % n for i in range((ph - pt) % n)]
        else:
            raise ValueError(f"unknown half tag {tag!r}")
        return tuple((self.arc_id(ct, g), 1) for g in gaps)


def carter_surface(d: GaussDiagram) -> RibbonGraph:
    return RibbonGraph(d)


# -- intersection of closed walks ------------------------------------------------


def _corners(rg: RibbonGraph, curve: list[Walk], curve_idx: int, lanes: dict):
    """Corner chords of a pushed-off curve, grouped by crossing label.

    Each step occupies one lane of its band; lanes of curve 0 precede lanes
    of curve 1.  A corner joins the refined boundary point where a strand
    enters the crossing disk to the one where it leaves.
    """
    corners = []
    for wi, walk in enumerate(curve):
        if not walk:
            continue
        for si, (arc, dirn) in enumerate(walk):
            lane_in = lanes[(curve_idx, wi, si)]
            nxt = (si + 1) % len(walk)
            arc2, dirn2 = walk[nxt]
            lane_out = lanes[(curve_idx, wi, nxt)]
            head_end = 1 if dirn == 1 else 0
            tail_end = 0 if dirn2 == 1 else 1
            a = rg.arcs[arc]
            label = (a.head if head_end == 1 else a.tail)[0]
            p_in = (arc, head_end, lane_in)
            p_out = (arc2, tail_end, lane_out)
            corners.append((label, p_in, p_out))
    return corners


def walk_intersection(rg: RibbonGraph, c1: list[Walk], c2: list[Walk]) -> int:
    """Algebraic intersection number of two unions of closed walks.

    The curves are pushed into general position: strands sharing a band are
    kept parallel in fixed lanes, so all crossings happen inside crossing
    disks, where two corner chords cross iff their endpoints interleave on
    the disk boundary.  The sign is +1 when the (c1, c2) directions form a
    positive frame.
    """
    lanes: dict = {}
    band_load: dict[int, int] = {}
    for curve_idx, curve in enumerate((c1, c2)):
        for wi, walk in enumerate(curve):
            for si, (arc, _) in enumerate(walk):
                lanes[(curve_idx, wi, si)] = band_load.get(arc, 0)
                band_load[arc] = band_load.get(arc, 0) + 1

    corners1 = _corners(rg, c1, 0, lanes)
    corners2 = _corners(rg, c2, 1, lanes)
    by_label: dict[int, tuple[list, list]] = {}
    for label, p_in, p_out in corners1:
        by_label.setdefault(label, ([], []))[0].append((p_in, p_out))
    for label, p_in, p_out in corners2:
        by_label.setdefault(label, ([], []))[1].append((p_in, p_out))

    total = 0
    for label, (cs1, cs2) in by_label.items():
        if not cs1 or not cs2:
            continue
        boundary = _refined_boundary(rg, label, band_load)
        pos = {point: i for i, point in enumerate(boundary)}
        m = len(boundary)
        for a_in, a_out in cs1:
            ai, ao = pos[a_in], pos[a_out]
            for b_in, b_out in cs2:
                bi, bo = pos[b_in], pos[b_out]
                total += _chord_cross_sign(ai, ao, bi, bo, m)
    return total


def _refined_boundary(rg: RibbonGraph, label: int, band_load: dict[int, int]):
    """Refined boundary points of a crossing disk in counterclockwise order.

    Where a band leaves the vertex its lanes appear clockwise (reversed);
    where it arrives they appear counterclockwise (in lane order).
    """
    points = []
    for port in rg.rotation(label):
        arc, end = rg.port_arc[(label, port)]
        load = band_load.get(arc, 0)
        if end == 0:  # band oriented out of this vertex
            points.extend((arc, 0, lane) for lane in range(load - 1, -1, -1))
        else:
            points.extend((arc, 1, lane) for lane in range(load))
    return points


def _chord_cross_sign(ai: int, ao: int, bi: int, bo: int, m: int) -> int:
    """+1 / -1 if boundary chords ai->ao and bi->bo cross, else 0."""

    def between(x, lo, hi):
        return (x - lo) % m < (hi - lo) % m and x != lo

    in_a = between(bi, ai, ao)
    out_a = between(bo, ai, ao)
    if in_a == out_a:
        return 0
    # ccw order (a_in, b_in, a_out, b_out) is a positive frame
    return 1 if in_a and not out_a else -1


# -- integer skew normal form ------------------------------------------------------


def skew_normal_form(m: list[list[int]]):
    """Congruence-reduce a skew-symmetric integer matrix.

    Returns (blocks, u, uinv) with u @ m @ u.T block-diagonal: hyperbolic
    2x2 blocks with the listed positive pivots first, then zeros, and
    u @ uinv = identity.
    """
    n = len(m)
    a = [row[:] for row in m]
    u = [[int(i == j) for j in range(n)] for i in range(n)]
    uinv = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap(i, j):
        a[i], a[j] = a[j], a[i]
        for row in a:
            row[i], row[j] = row[j], row[i]
        u[i], u[j] = u[j], u[i]
        for row in uinv:
            row[i], row[j] = row[j], row[i]

    def add(i, j, c):
        # row/col i += c * row/col j
        a[i] = [x + c * y for x, y in zip(a[i], a[j])]
        for row in a:
            row[i] += c * row[j]
        u[i] = [x + c * y for x, y in zip(u[i], u[j])]
        for row in uinv:
            row[j] -= c * row[i]

    def negate(i):
        a[i] = [-x for x in a[i]]
        for row in a:
            row[i] = -row[i]
        u[i] = [-x for x in u[i]]
        for row in uinv:
            row[i] = -row[i]

    p = 0
    blocks = []
    while True:
        best = None
        for i in range(p, n):
            for j in range(p, n):
                if a[i][j] and (best is None or abs(a[i][j]) < abs(a[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        i, j = best
        if i != p:
            swap(i, p)
            if j == p:
                j = i
        if j != p + 1:
            swap(j, p + 1)
        if a[p][p + 1] < 0:
            negate(p + 1)
        while True:
            d = a[p][p + 1]
            dirty = None
            for k in range(p + 2, n):
                if a[p][k] % d:
                    add(k, p + 1, -(a[p][k] // d))
                    dirty = (p, k)
                    break
                if a[p + 1][k] % d:
                    add(k, p, a[p + 1][k] // d)
                    dirty = (p + 1, k)
                    break
            if dirty:
                i2, k = dirty
                swap(k, p + 1 if i2 == p else p)
                if i2 == p + 1:
                    swap(p, p + 1)
                    negate(p + 1)
                if a[p][p + 1] < 0:
                    negate(p + 1)
                continue
            for k in range(p + 2, n):
                if a[p][k]:
                    add(k, p + 1, -(a[p][k] // d))
                if a[p + 1][k]:
                    add(k, p, a[p + 1][k] // d)
            if all(a[p][k] == 0 and a[p + 1][k] == 0 for k in range(p + 2, n)):
                break
        blocks.append(a[p][p + 1])
        p += 2
    return blocks, u, uinv


# -- first homology ---------------------------------------------------------------


class HomologySpace:
    """H1 of the capped surface with its intersection form.

    Classes are coordinate tuples of length 2*genus; the pairing is the
    block-diagonal form produced by the skew normal form of the tree-loop
    intersection matrix.
    """

    def __init__(self, rg: RibbonGraph):
        self.rg = rg
        self._tree: dict[int, tuple] = {}
        adj: dict[int, list] = {v: [] for v in rg.vertices}
        for i, arc in enumerate(rg.arcs):
            adj[arc.tail[0]].append((arc.head[0], i, 1))
            adj[arc.head[0]].append((arc.tail[0], i, -1))
        tree_arcs = set()
        for root in rg.vertices:
            if root in self._tree:
                continue
            self._tree[root] = None
            stack = [root]
            while stack:
                x = stack.pop()
                for (y, arc, dirn) in adj[x]:
                    if y in self._tree:
                        continue
                    self._tree[y] = (x, arc, -dirn)  # step from y toward x
                    tree_arcs.add(arc)
                    stack.append(y)
        self.generators = [i for i in range(len(rg.arcs)) if i not in tree_arcs]
        self._gen_index = {arc: k for k, arc in enumerate(self.generators)}
        loops = [self._loop_walk(arc) for arc in self.generators]
        n = len(loops)
        mat = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                val = walk_intersection(rg, [loops[i]], [loops[j]])
                mat[i][j] = val
                mat[j][i] = -val
        blocks, u, uinv = skew_normal_form(mat)
        self.rank = 2 * len(blocks)
        self.blocks = blocks
        self._uinv = uinv
        form = [[0] * self.rank for _ in range(self.rank)]
        for k, d in enumerate(blocks):
            form[2 * k][2 * k + 1] = d
            form[2 * k + 1][2 * k] = -d
        self.form = form

    def _path_to_root(self, v: int) -> list[Step]:
        steps = []
        while self._tree[v] is not None:
            parent, arc, dirn = self._tree[v]
            steps.append((arc, dirn))
            v = parent
        return steps

    def _loop_walk(self, arc: int) -> Walk:
        a = self.rg.arcs[arc]
        head, tail = a.head[0], a.tail[0]
        back = self._path_to_root(head)
        fwd = [(i, -d) for (i, d) in reversed(self._path_to_root(tail))]
        return tuple([(arc, 1)] + back + fwd)

    def generator_coords(self, cycle: list[Walk]) -> list[int]:
        x = [0] * len(self.generators)
        for walk in cycle:
            for arc, dirn in walk:
                k = self._gen_index.get(arc)
                if k is not None:
                    x[k] += dirn
        return x

    def coords(self, cycle: list[Walk]) -> tuple[int, ...]:
        x = self.generator_coords(cycle)
        n = len(x)
        return tuple(
            sum(self._uinv[j][i] * x[j] for j in range(n)) for i in range(self.rank)
        )

    def pairing(self, y1, y2) -> int:
        total = 0
        for k, d in enumerate(self.blocks):
            total += d * (y1[2 * k] * y2[2 * k + 1] - y1[2 * k + 1] * y2[2 * k])
        return total


_SURFACE_CACHE: dict = {}


def surface_data(d: GaussDiagram) -> tuple[RibbonGraph, HomologySpace]:
    # key on exact fields: structural diagram equality ignores labels
    key = (d.flavor, d.components, d.signs)
    hit = _SURFACE_CACHE.get(key)
    if hit is None:
        rg = RibbonGraph(d)
        hit = (rg, HomologySpace(rg))
        if len(_SURFACE_CACHE) > 2048:
            _SURFACE_CACHE.clear()
        _SURFACE_CACHE[key] = hit
    return hit


def h1(rg: RibbonGraph) -> HomologySpace:
    return HomologySpace(rg)


def half_class(d: GaussDiagram, v: int, tag: str) -> tuple[int, ...]:
    """H1 class of the tagged oriented-smoothing half at the self-crossing v."""
    rg, hs = surface_data(d)
    return hs.coords([rg.half_walk(v, tag)])


def diagram_class(d: GaussDiagram) -> tuple[int, ...]:
    rg, hs = surface_data(d)
    return hs.coords(rg.diagram_cycle())


def inter(d: GaussDiagram, c1, c2) -> int:
    """Intersection pairing.

    A cycle is either an H1 coordinate tuple or a list of closed walks.
    """
    rg, hs = surface_data(d)

    def coerce(c):
        if isinstance(c, tuple):
            return c
        return hs.coords(c)

    return hs.pairing(coerce(c1), coerce(c2))


class GammaNotAdmissible(ValueError):
    """The test cycle does not annihilate the diagram class."""


def homological_parity(d: GaussDiagram, v: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Class of the left half in H1 modulo the diagram class.

    Returns (canonical representative, modulus vector); see
    :func:`reduce_mod_cyclic`.
    """
    k = diagram_class(d)
    x = half_class(d, v, "left")
    return reduce_mod_cyclic(x, k), k


def reduce_mod_cyclic(x: tuple[int, ...], k: tuple[int, ...]) -> tuple[int, ...]:
    """Canonical representative of x in Z^n / <k>."""
    j = next((i for i, val in enumerate(k) if val), None)
    if j is None:
        return tuple(x)
    r = x[j] % abs(k[j])
    t = (x[j] - r) // k[j]
    return tuple(a - t * b for a, b in zip(x, k))


def f_gamma(d: GaussDiagram, v: int, gamma) -> int:
    """Pair the left half of v with an admissible cycle gamma."""
    rg, hs = surface_data(d)
    g = gamma if isinstance(gamma, tuple) else hs.coords(gamma)
    if hs.pairing(hs.coords(rg.diagram_cycle()), g) != 0:
        raise GammaNotAdmissible("diagram class must annihilate gamma")
    return hs.pairing(half_class(d, v, "left"), g)


def genus(d: GaussDiagram) -> int:
    rg, _ = surface_data(d)
    return rg.genus
