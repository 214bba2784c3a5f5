"""Two-to-one correspondence between pointed quadrangulations and labelled maps.

``forward`` turns a quadrangulation with ``k`` sources and delays into a
rooted map with ``k`` indexed faces and integer vertex labels.  ``backward``
inverts it up to the orientation of the root, which is the extra bit passed
as ``flip``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

from .combmap import (
    CombinatorialMap,
    InvalidMapError,
    ValidationReport,
    canonical_relabelling,
    is_bipartite_quadrangulation,
    relabel,
    validate,
)
from .quad import PointedQuad, root_is_descending, tile_degree_census, voronoi_tiles


@dataclass(frozen=True)
class LabeledMap:
    """A rooted map with faces indexed ``1..k`` and integer vertex labels.

    Labels are only meaningful up to a global shift; constructors in this
    package normalise them so that the root vertex has label 0.
    """

    map: CombinatorialMap
    face_index: tuple
    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "face_index", tuple(self.face_index))
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def k(self) -> int:
        return len(self.face_index)

    @property
    def genus(self) -> int:
        return self.map.genus

    @property
    def n_edges(self) -> int:
        return self.map.n_edges

    def corner_label(self, h: int) -> int:
        return self.labels[self.map.vertex_of[h]]

    def face_with_index(self, i: int) -> int:
        return self.face_index.index(i)

    def normalized(self) -> "LabeledMap":
        base = self.labels[self.map.vertex_of[self.map.root]]
        return LabeledMap(self.map, self.face_index, [x - base for x in self.labels])

    @cached_property
    def key(self) -> tuple:
        """Isomorphism invariant: equal keys iff isomorphic as rooted labelled maps."""
        return labeled_key(self.map, self.labels, self.face_index)


def labeled_key(m: CombinatorialMap, labels, face_index) -> tuple:
    new = canonical_relabelling(m.sigma, m.root)
    sig = relabel(m.sigma, new)
    canon = CombinatorialMap(sig, 0)
    base = labels[m.vertex_of[m.root]]
    vlab = [0] * canon.n_vertices
    for h in range(m.n_half):
        vlab[canon.vertex_of[new[h]]] = labels[m.vertex_of[h]] - base
    fidx = [0] * canon.n_faces
    for h in range(m.n_half):
        fidx[canon.face_of[new[h]]] = face_index[m.face_of[h]]
    return sig, tuple(vlab), tuple(fidx)


def pointed_key(pq: PointedQuad) -> tuple:
    """Isomorphism invariant of a pointed quadrangulation."""
    q = pq.quad
    new = canonical_relabelling(q.sigma, q.root)
    sig = relabel(q.sigma, new)
    canon = CombinatorialMap(sig, 0)
    first = {}
    for h in range(q.n_half):
        first.setdefault(q.vertex_of[h], h)
    src = tuple(canon.vertex_of[new[first[x]]] for x in pq.sources)
    return sig, src, pq.delays


def validate_labeled(lm: LabeledMap) -> ValidationReport:
    return validate(lm.map, labels=lm.labels, face_index=lm.face_index)


def forward(pq: PointedQuad, check: bool = True) -> LabeledMap:
    """Labelled map with ``k`` faces built from a pointed quadrangulation."""
    return _forward(pq, check)[0]


def forward_with_correspondence(pq: PointedQuad, check: bool = True):
    """Like :func:`forward`, also returning the quadrangulation half-edge
    behind each half-edge of the labelled map."""
    return _forward(pq, check)


def _forward(pq: PointedQuad, check: bool):
    if check:
        from .quad import check_pointed
        check_pointed(pq)
    q = pq.quad
    part = voronoi_tiles(pq)
    desc = part.descending
    lab = part.labels
    vof = q.vertex_of

    # each face of q has two ascending sides; their reversals form one edge of m
    pairs = []
    for face in q.faces:
        up = [h ^ 1 for h in face if not desc[h]]
        if len(up) != 2:
            raise InvalidMapError("face of q without exactly two ascending sides")
        pairs.append((min(up), max(up)))
    pairs.sort()
    mindex = [-1] * q.n_half
    back = [0] * (2 * len(pairs))
    for j, (a, b) in enumerate(pairs):
        mindex[a], mindex[b] = 2 * j, 2 * j + 1
        back[2 * j], back[2 * j + 1] = a, b

    sig_q = q.sigma
    sig_m = [0] * len(back)
    for hm, h in enumerate(back):
        g = sig_q[h]
        while not desc[g]:
            g = sig_q[g]
        sig_m[hm] = mindex[g]

    r = q.root
    root_m = mindex[r] if desc[r] else mindex[r ^ 1]
    m = CombinatorialMap(tuple(sig_m), root_m)
    base = lab[vof[back[root_m]]]
    labels = [0] * m.n_vertices
    for v, cyc in enumerate(m.vertices):
        labels[v] = lab[vof[back[cyc[0]]]] - base
    face_index = []
    for face in m.faces:
        cols = {part.colour[back[h]] for h in face}
        if len(cols) != 1:
            raise InvalidMapError("face of m meets several Voronoi tiles")
        face_index.append(cols.pop())
    lm = LabeledMap(m, face_index, labels)
    if check and m.genus != q.genus:
        raise InvalidMapError("genus not preserved")
    return lm, back


def successors(lm: LabeledMap, face: Sequence[int]) -> list[int]:
    """Position of the successor of each corner in ``face`` (-1 for the
    extra vertex of the face).  The successor is the next corner along the
    face whose label is one less."""
    lab = [lm.labels[lm.map.vertex_of[h]] for h in face]
    d = len(face)
    out = [-1] * d
    stack = []
    # next strictly smaller element on the doubled cycle
    for t in range(2 * d - 1, -1, -1):
        x = lab[t % d]
        while stack and lab[stack[-1] % d] >= x:
            stack.pop()
        if t < d:
            out[t] = stack[-1] % d if stack else -1
        stack.append(t)
    return out


def backward(lm: LabeledMap, flip: bool = False, check: bool = True) -> PointedQuad:
    """Pointed quadrangulation from a labelled map.

    Every corner ``e`` of ``m`` gives a quadrangulation edge, half-edges
    ``2e`` (towards the successor) and ``2e + 1``.  ``flip`` chooses which of
    the two is the root, so ``backward(lm, False)`` and ``backward(lm, True)``
    are the two preimages of ``lm``.
    """
    m = lm.map
    if check:
        rep = validate_labeled(lm)
        if not rep.ok:
            raise InvalidMapError("; ".join(rep.errors))
    n = m.n_half
    k = m.n_faces
    face_of = m.face_of
    pos = [0] * n
    succ = [0] * n          # corner index, or -(f + 1) for the extra vertex of face f
    for f, face in enumerate(m.faces):
        s = successors(lm, face)
        for i, h in enumerate(face):
            pos[h] = i
            succ[h] = face[s[i]] if s[i] >= 0 else -(f + 1)

    incoming = [[] for _ in range(n)]
    to_extra = [[] for _ in range(k)]
    for f, face in enumerate(m.faces):
        for h in face:
            t = succ[h]
            if t >= 0:
                incoming[t].append(h)
            else:
                to_extra[f].append(h)
    faces = m.faces
    for t in range(n):
        if len(incoming[t]) > 1:
            d = len(faces[face_of[t]])
            pt = pos[t]
            incoming[t].sort(key=lambda e: (pos[e] - pt) % d)

    sig_q = [0] * (2 * n)
    for cyc in m.vertices:
        ring = []
        for e in cyc:
            ring.append(2 * e)
            ring.extend(2 * x + 1 for x in incoming[e])
        for a, b in zip(ring, ring[1:] + ring[:1]):
            sig_q[a] = b
    for f in range(k):
        ring = [2 * x + 1 for x in to_extra[f]]
        for a, b in zip(ring, ring[1:] + ring[:1]):
            sig_q[a] = b

    root = 2 * m.root + (1 if flip else 0)
    q = CombinatorialMap(tuple(sig_q), root)
    vof = q.vertex_of
    extra_vertex = [vof[2 * to_extra[f][0] + 1] for f in range(k)]
    extra_label = [min(lm.labels[m.vertex_of[h]] for h in faces[f]) - 1 for f in range(k)]
    order = sorted(range(k), key=lambda f: lm.face_index[f])
    sources = [extra_vertex[f] for f in order]
    d0 = extra_label[order[0]]
    delays = [extra_label[f] - d0 for f in order]
    pq = PointedQuad(q, sources, delays)
    if check:
        if not is_bipartite_quadrangulation(q) or q.genus != m.genus:
            raise InvalidMapError("construction did not give a quadrangulation of the same genus")
    return pq


def preimages(lm: LabeledMap, check: bool = True) -> list[PointedQuad]:
    return [backward(lm, False, check), backward(lm, True, check)]


def round_trip_ok(pq: PointedQuad) -> bool:
    """``backward(forward(pq))`` recovers ``pq`` with the matching root bit."""
    lm = forward(pq)
    flip = not root_is_descending(pq)
    back = backward(lm, flip)
    return pointed_key(back) == pointed_key(pq)


def labeled_round_trip_ok(lm: LabeledMap) -> bool:
    return all(forward(p).key == lm.key for p in preimages(lm))


def bij_properties(pq: PointedQuad, lm: LabeledMap | None = None) -> list[str]:
    """Failures of the three counting properties linking ``pq`` and its
    labelled map (empty when all hold):

    1. tile ``i`` has as many descending half-edges as face ``i`` has corners;
    2. the quadrangulation has ``k`` more vertices than the labelled map;
    3. in each tile, the number of half-edges whose tail is at distance
       ``d`` from the source equals the number of corners of face ``i``
       with label ``min + d - 1``.
    """
    lm = forward(pq) if lm is None else lm
    m = lm.map
    out = []
    if pq.quad.n_faces != m.n_edges:
        out.append(f"{pq.quad.n_faces} faces but {m.n_edges} edges")
    sizes, hists = tile_degree_census(pq)
    for i in range(pq.k):
        face = m.faces[lm.face_with_index(i + 1)]
        if sizes[i] != len(face):
            out.append(f"tile {i + 1} has {sizes[i]} half-edges, face has degree {len(face)}")
        labs = [lm.corner_label(h) for h in face]
        low = min(labs)
        if Counter(x - low + 1 for x in labs) != hists[i]:
            out.append(f"distance histogram of tile {i + 1} differs from its face labels")
    if pq.quad.n_vertices != m.n_vertices + pq.k:
        out.append(f"{pq.quad.n_vertices} vertices vs {m.n_vertices} + {pq.k}")
    return out


def check_two_to_one(quads: Sequence[PointedQuad], labeled: Sequence[LabeledMap]):
    """Compare the image of ``quads`` with the set ``labeled``.

    Returns a dict with the number of labelled maps hit once, twice and more,
    and the maps that were missed or are spurious.  The correspondence is
    two-to-one exactly when ``once == more == missed == spurious == 0``.
    """
    hits = Counter(forward(pq).key for pq in quads)
    want = {lm.key for lm in labeled}
    mult = Counter(hits.values())
    return {
        "quads": len(quads),
        "labeled": len(want),
        "twice": mult.get(2, 0),
        "once": mult.get(1, 0),
        "more": sum(c for m_, c in mult.items() if m_ > 2),
        "missed": len(want - hits.keys()),
        "spurious": len(hits.keys() - want),
    }


def face_interval(lm: LabeledMap, e1: int, e2: int) -> list[int]:
    """Half-edges ``e1, phi(e1), ..., e2`` of a common face."""
    phi = lm.map.phi
    out = [e1]
    h = e1
    while h != e2:
        h = phi[h]
        out.append(h)
        if h == e1:
            raise ValueError("half-edges are not on the same face")
    return out


def distance_bounds(lm: LabeledMap, e1: int, e2: int) -> tuple[int, int]:
    """Lower and upper bound on the distance between the tails of ``e1`` and
    ``e2``, two half-edges of the same face of ``lm``."""
    lab = lm.corner_label
    l1, l2 = lab(e1), lab(e2)
    a = min(lab(h) for h in face_interval(lm, e1, e2))
    b = min(lab(h) for h in face_interval(lm, e2, e1))
    return abs(l1 - l2), l1 + l2 - 2 * max(a, b) + 2


def distance_bound_check(pq: PointedQuad, e1: int, e2: int):
    """Check the distance bounds for two descending quadrangulation half-edges
    of the same tile.  Returns ``(lower, distance, upper, ok)``."""
    from .combmap import bfs_distances
    lm, back = forward_with_correspondence(pq)
    mindex = {h: i for i, h in enumerate(back)}
    if e1 not in mindex or e2 not in mindex:
        raise ValueError("half-edges must be descending")
    f1, f2 = mindex[e1], mindex[e2]
    if lm.map.face_of[f1] != lm.map.face_of[f2]:
        raise ValueError("half-edges lie in different tiles")
    lo, hi = distance_bounds(lm, f1, f2)
    vof = pq.quad.vertex_of
    d = bfs_distances(pq.quad, vof[e1])[vof[e2]]
    return lo, d, hi, lo <= d <= hi


def two_point_distance(lm: LabeledMap) -> int:
    """Distance between the two sources of a preimage of a two-face labelled map."""
    if lm.k != 2:
        raise ValueError("need exactly two faces")
    m = lm.map
    fo = m.face_of
    lab = lm.corner_label
    mins = [min(lab(h) for h in face) for face in m.faces]
    shared = min(lab(h) for h in range(m.n_half) if fo[h] != fo[h ^ 1])
    # each source sits one below the smallest label of its face
    return 2 * shared - mins[0] - mins[1] + 2
