"""Reductions of labelled maps and their encoding by walks and snakes.

Removing leaves repeatedly leaves the core of a map, where every vertex has
degree at least 2.  Merging the degree-2 chains of the core gives the
scheme.  A labelled map is then recorded as its scheme together with, for
every scheme half-edge ``h``:

``w[h]``
    the labels along the chain, relative to its first vertex,
``c[h]``
    the contour of the forest of trees hanging on the left of the chain,
``z[h]``
    the labels in that forest, relative to the root of each tree,

plus the position ``t_star`` of the original root.  Planar one-face maps
(trees) are a single snake, and planar two-face maps carry the tree holding
the root separately.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .bijection import LabeledMap
from .combmap import (
    CombinatorialMap,
    InvalidMapError,
    canonical_relabelling,
    from_permutations,
    relabel,
    validate,
)
from .enumeration import Scheme


@dataclass
class Reduction:
    """Core and scheme of a map.

    ``in_core[h]`` tells whether half-edge ``h`` of the original map
    survives leaf removal.  ``chains[s]`` lists the core half-edges merged
    into scheme half-edge ``s``.  ``core_root`` is the first core half-edge
    met from the root along its face.
    """

    in_core: list
    core: CombinatorialMap
    core_edges: list
    scheme: CombinatorialMap
    chains: list
    core_root: int


def core_half_edges(m: CombinatorialMap) -> list[bool]:
    deg = [len(c) for c in m.vertices]
    vof = m.vertex_of
    alive = [True] * m.n_half
    queue = deque(v for v, d in enumerate(deg) if d == 1)
    while queue:
        v = queue.popleft()
        if deg[v] != 1:
            continue
        h = next(h for h in m.vertices[v] if alive[h])
        alive[h] = alive[h ^ 1] = False
        deg[v] = 0
        w = vof[h ^ 1]
        deg[w] -= 1
        if deg[w] == 1:
            queue.append(w)
    return alive


def _restricted_rotation(m: CombinatorialMap, keep: Sequence[bool]) -> list[int]:
    """Rotation of the submap spanned by the kept half-edges (-1 elsewhere)."""
    sig = m.sigma
    out = [-1] * m.n_half
    for h in range(m.n_half):
        if keep[h]:
            g = sig[h]
            while not keep[g]:
                g = sig[g]
            out[h] = g
    return out


def reduce_map(m: CombinatorialMap) -> Reduction:
    """Core and scheme of ``m``.  Trees have neither and are rejected."""
    alive = core_half_edges(m)
    if not any(alive):
        raise InvalidMapError("a tree has no core")
    sig2 = _restricted_rotation(m, alive)
    phi = m.phi
    r = m.root
    while not alive[r]:
        r = phi[r]
    core_root = r
    core_edges = [h for h in range(m.n_half) if alive[h]]
    idx = {h: i for i, h in enumerate(core_edges)}
    core_sigma = [idx[sig2[h]] for h in core_edges]
    core_alpha = [idx[h ^ 1] for h in core_edges]
    core, new = from_permutations(core_sigma, core_alpha, idx[core_root])
    core_edges_new = [0] * len(core_edges)
    for i, h in enumerate(core_edges):
        core_edges_new[new[i]] = h

    vof = m.vertex_of
    deg2 = {}
    for h in core_edges:
        deg2[vof[h]] = deg2.get(vof[h], 0) + 1
    branch = {v for v, d in deg2.items() if d >= 3}

    def next_in_chain(h):
        return sig2[h ^ 1]

    if branch:
        starts = [h for h in core_edges if vof[h] in branch]
    else:
        # a single cycle: one chain each way, the forward one starting at the core root
        starts = [core_root, _cycle_last(core_root, next_in_chain) ^ 1]
    chains = []
    for s in starts:
        ch = [s]
        h = s
        while True:
            nxt = next_in_chain(h)
            if (branch and vof[nxt] in branch) or (not branch and nxt == s):
                break
            ch.append(nxt)
            h = nxt
        chains.append(ch)
    first_of = {ch[0]: i for i, ch in enumerate(chains)}
    n = len(chains)
    s_sigma = [0] * n
    s_alpha = [0] * n
    for i, ch in enumerate(chains):
        s_alpha[i] = first_of[ch[-1] ^ 1]
        s_sigma[i] = first_of[sig2[ch[0]]] if branch else s_alpha[i]
    root_chain = next(i for i, ch in enumerate(chains) if core_root in ch)
    scheme, snew = from_permutations(s_sigma, s_alpha, root_chain)
    cn = canonical_relabelling(scheme.sigma, scheme.root)
    scheme_c = CombinatorialMap(relabel(scheme.sigma, cn), 0)
    chains_c = [None] * n
    for i, ch in enumerate(chains):
        chains_c[cn[snew[i]]] = ch
    return Reduction(alive, core, core_edges_new, scheme_c, chains_c, core_root)


def _cycle_last(start, step):
    h = start
    while True:
        nxt = step(h)
        if nxt == start:
            return h
        h = nxt


@dataclass
class EncodedLabeledMap:
    """Scheme, per-half-edge ``(w, c, z)`` sequences and the root offset.

    ``scheme`` is None for planar one-face maps, whose encoding is the single
    snake ``tree``.  For planar two-face maps ``tree`` is the snake of the
    tree containing the root, and ``t_star`` points into it.
    """

    scheme: Scheme | None
    w: list
    c: list
    z: list
    t_star: int
    tree: tuple | None = None

    @property
    def size(self) -> int:
        """Sum of all contour durations: twice the number of edges, plus one
        for a lone tree snake, whose contour ends with a floor step."""
        total = sum(len(c) - 1 for c in self.c if c)
        if self.tree is not None:
            total += len(self.tree[0]) - 1
        return total

    def to_dict(self):
        d = {"t_star": self.t_star,
             "w": [list(x) for x in self.w],
             "c": [list(x) for x in self.c],
             "z": [list(x) for x in self.z]}
        if self.scheme is not None:
            d["scheme"] = {"n_half": self.scheme.map.n_half,
                           "sigma": list(self.scheme.map.sigma),
                           "root": self.scheme.map.root,
                           "face_index": list(self.scheme.face_index)}
        if self.tree is not None:
            d["tree"] = {"c": list(self.tree[0]), "z": list(self.tree[1])}
        return d

    @classmethod
    def from_dict(cls, d):
        scheme = None
        if "scheme" in d:
            s = d["scheme"]
            scheme = Scheme(CombinatorialMap(tuple(s["sigma"]), s["root"]), s["face_index"])
        tree = None
        if "tree" in d:
            tree = (tuple(d["tree"]["c"]), tuple(d["tree"]["z"]))
        return cls(scheme, [tuple(x) for x in d["w"]], [tuple(x) for x in d["c"]],
                   [tuple(x) for x in d["z"]], d["t_star"], tree)


def _depths(m: CombinatorialMap, in_core: Sequence[bool]) -> list[int]:
    """Distance from each vertex to the core (multi-source BFS)."""
    vof = m.vertex_of
    dist = [-1] * m.n_vertices
    queue = deque()
    for h in range(m.n_half):
        if in_core[h] and dist[vof[h]] < 0:
            dist[vof[h]] = 0
            queue.append(vof[h])
    adj = m.adjacency
    while queue:
        v = queue.popleft()
        for u in adj[v]:
            if dist[u] < 0:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def _chain_sequence(m: CombinatorialMap, in_core, chain):
    """Half-edges whose first core half-edge along the face lies on ``chain``,
    in face order, ending with the last chain edge."""
    phi, phi_inv = m.phi, m.phi_inv
    before = []
    h = phi_inv[chain[0]]
    while not in_core[h]:
        before.append(h)
        h = phi_inv[h]
    seq = before[::-1]
    last = chain[-1]
    h = chain[0]
    while True:
        seq.append(h)
        if h == last:
            break
        h = phi[h]
    return seq


def _snake(seq, floors, depth, lab, vof):
    """Contour and relative labels of a forest sequence."""
    c, z = [], []
    fset = set(floors)
    done = 0
    for h in seq:
        c.append(depth[vof[h]] - done)
        z.append(lab[vof[h]] - lab[vof[floors[done]]])
        if h in fset:
            done += 1
    c.append(-done)
    z.append(0)
    return tuple(c), tuple(z)


def encode(lm: LabeledMap) -> EncodedLabeledMap:
    m = lm.map
    lab = lm.labels
    vof = m.vertex_of
    if m.genus == 0 and m.n_faces == 1:
        depth = _tree_depths(m)
        phi = m.phi
        seq = [m.root]
        for _ in range(m.n_half - 1):
            seq.append(phi[seq[-1]])
        base = lab[vof[m.root]]
        c = tuple(depth[vof[h]] for h in seq) + (0, -1)
        z = tuple(lab[vof[h]] - base for h in seq) + (0, 0)
        return EncodedLabeledMap(None, [], [], [], 0, (c, z))

    red = reduce_map(m)
    depth = _depths(m, red.in_core)
    n_s = red.scheme.n_half
    seqs = [_chain_sequence(m, red.in_core, ch) for ch in red.chains]
    ws, cs, zs = [], [], []
    for ch, seq in zip(red.chains, seqs):
        base = lab[vof[ch[0]]]
        w = [lab[vof[h]] - base for h in ch] + [lab[vof[ch[-1] ^ 1]] - base]
        ws.append(tuple(w))
        c, z = _snake(seq, ch, depth, lab, vof)
        cs.append(c)
        zs.append(z)
    t_star = seqs[0].index(m.root)
    face_index = [0] * red.scheme.n_faces
    for s in range(n_s):
        face_index[red.scheme.face_of[s]] = lm.face_index[m.face_of[red.chains[s][0]]]
    scheme = Scheme(red.scheme, face_index)
    if not _has_branch_vertex(red.scheme):
        # planar two-face case: split off the tree holding the root
        cut = seqs[0].index(red.chains[0][0]) + 1
        if t_star >= cut:
            raise InvalidMapError("root tree convention violated")
        c0, z0 = cs[0], zs[0]
        tree = (c0[:cut] + (-1,), z0[:cut] + (0,))
        rest_c = tuple(x + 1 for x in c0[cut:])
        rest_z = z0[cut:]
        cs[0], zs[0] = rest_c, rest_z
        return EncodedLabeledMap(scheme, ws, cs, zs, t_star, tree)
    return EncodedLabeledMap(scheme, ws, cs, zs, t_star)


def _has_branch_vertex(s: CombinatorialMap) -> bool:
    return any(len(c) >= 3 for c in s.vertices)


def _tree_depths(m: CombinatorialMap) -> list[int]:
    from .combmap import bfs_distances
    return bfs_distances(m, m.vertex_of[m.root])


# ------------------------------------------------------------------ decode

def _check_walk(w, name):
    if not w or w[0] != 0:
        raise InvalidMapError(f"walk {name} must start at 0")
    if any(abs(b - a) > 1 for a, b in zip(w, w[1:])):
        raise InvalidMapError(f"walk {name} has a step larger than 1")


def _forest_structure(c, z, r, name):
    """Check that ``(c, z)`` is a snake on ``r`` trees and return, per time,
    the matching time of the reverse half-edge (-1 for floor steps)."""
    tau = len(c) - 1
    if len(z) != len(c):
        raise InvalidMapError(f"snake {name}: c and z lengths differ")
    if c[0] != 0 or z[0] != 0:
        raise InvalidMapError(f"snake {name} must start at 0")
    low = 0
    mate = [-1] * tau
    stack = []
    for i in range(tau):
        step = c[i + 1] - c[i]
        if abs(step) != 1:
            raise InvalidMapError(f"snake {name}: contour steps must be +-1")
        if step > 0:
            stack.append(i)
        elif c[i + 1] < low:
            if stack:
                raise InvalidMapError(f"snake {name}: malformed contour")
            low = c[i + 1]
            if z[i] != 0:
                raise InvalidMapError(f"snake {name}: tree root label must be 0")
        else:
            j = stack.pop()
            mate[i], mate[j] = j, i
        if abs(z[i + 1] - z[i]) > 1 and c[i + 1] >= low:
            raise InvalidMapError(f"snake {name}: label step larger than 1")
    if low != -r or c[tau] != -r or any(x <= -r for x in c[:tau]):
        raise InvalidMapError(f"snake {name}: contour must first reach -{r} at its end")
    if z[tau] != 0:
        raise InvalidMapError(f"snake {name}: final label must be 0")
    return mate


def _snake_vertices(c):
    """Vertex id visited at each integer time of a forest contour."""
    tau = len(c) - 1
    out = [0] * (tau + 1)
    stack = [0]
    nv = 1
    low = 0
    for i in range(tau):
        if c[i + 1] > c[i]:
            stack.append(nv)
            nv += 1
        elif c[i + 1] < low:
            low = c[i + 1]
            stack = [nv]
            nv += 1
        else:
            stack.pop()
        out[i + 1] = stack[-1]
    return out


def _check_snake_labels(c, z, name):
    verts = _snake_vertices(c)
    seen = {}
    for v, x in zip(verts, z):
        if seen.setdefault(v, x) != x:
            raise InvalidMapError(f"snake {name}: one vertex carries two labels")


def decode(enc: EncodedLabeledMap, check: bool = True) -> LabeledMap:
    """Labelled map described by an encoding; inverse of :func:`encode`."""
    if enc.scheme is None:
        return _decode_tree(enc, check)
    s = enc.scheme.map
    n_s = s.n_half
    if check:
        rep = validate(s, face_index=enc.scheme.face_index)
        if not rep.ok:
            raise InvalidMapError("scheme: " + "; ".join(rep.errors))
        if len(enc.w) != n_s or len(enc.c) != n_s or len(enc.z) != n_s:
            raise InvalidMapError("one (w, c, z) triple per scheme half-edge required")
    planar2 = enc.tree is not None
    if planar2 and (s.n_half != 2 or s.sigma != (1, 0)):
        raise InvalidMapError("a root tree is only used with the loop scheme")
    if not planar2 and check and any(len(v) < 3 for v in s.vertices):
        raise InvalidMapError("scheme has a vertex of degree less than 3")

    r = [len(w) - 1 for w in enc.w]
    for h in range(n_s):
        _check_walk(enc.w[h], h)
        if r[h] < 1 or r[h] != r[h ^ 1]:
            raise InvalidMapError(f"walk {h} and its reverse need equal positive lengths")
        w, wb = enc.w[h], enc.w[h ^ 1]
        if any(wb[t] != w[r[h] - t] - w[-1] for t in range(r[h] + 1)):
            raise InvalidMapError(f"walk {h ^ 1} is not the reversal of walk {h}")
    if planar2 and enc.w[0][-1] != 0:
        raise InvalidMapError("loop walk must return to 0")
    pot = _potential(s, [w[-1] for w in enc.w])

    # contour pieces per scheme half-edge
    pieces = []
    for h in range(n_s):
        c, z = enc.c[h], enc.z[h]
        comps = r[h] - 1 if planar2 and h == 0 else r[h]
        if planar2 and h == 0 and comps == 0:
            if c not in ((0,), ()) or z not in ((0,), ()):
                raise InvalidMapError("empty forest must be the zero path")
            c, z = (0,), (0,)
        _forest_structure(c, z, comps, h)
        _check_snake_labels(c, z, h)
        pieces.append((c, z))
    if planar2:
        tc, tz = enc.tree
        _forest_structure(tc, tz, 1, "root tree")
        _check_snake_labels(tc, tz, "root tree")
        if len(tc) - 1 < 1:
            raise InvalidMapError("root tree contour too short")
        rc, rz = pieces[0]
        pieces[0] = (tuple(tc[:-1]) + tuple(x - 1 for x in rc),
                     tuple(tz[:-1]) + tuple(rz))
        tau0 = len(tc) - 1
        if not 0 <= enc.t_star < tau0:
            raise InvalidMapError("t_star out of range")
    else:
        if not 0 <= enc.t_star < len(pieces[0][0]) - 1:
            raise InvalidMapError("t_star out of range")

    # slots (h, i) -> global index
    offset = [0] * (n_s + 1)
    for h in range(n_s):
        offset[h + 1] = offset[h] + len(pieces[h][0]) - 1
    total = offset[-1]
    phi = [0] * total
    alpha = [0] * total
    floors = []
    sphi = s.phi
    for h in range(n_s):
        c, _ = pieces[h]
        tau = len(c) - 1
        base = offset[h]
        for i in range(tau - 1):
            phi[base + i] = base + i + 1
        phi[base + tau - 1] = offset[sphi[h]]
        mate = _contour_mates(c)
        fl = []
        for i in range(tau):
            if mate[i] >= 0:
                alpha[base + i] = base + mate[i]
            else:
                fl.append(base + i)
        floors.append(fl)
    for h in range(n_s):
        fa, fb = floors[h], floors[h ^ 1]
        for j, x in enumerate(fa):
            alpha[x] = fb[len(fb) - 1 - j]
    phi_inv = [0] * total
    for x, y in enumerate(phi):
        phi_inv[y] = x
    sigma = [alpha[phi_inv[x]] for x in range(total)]
    m, new = from_permutations(sigma, alpha, offset[0] + enc.t_star)

    # labels
    labels = [None] * m.n_vertices
    for h in range(n_s):
        c, z = pieces[h]
        w = enc.w[h]
        base_lab = pot[s.vertex_of[h]]
        low = 0
        for i in range(len(c) - 1):
            low = min(low, c[i])
            x = base_lab + z[i] + w[-low]
            v = m.vertex_of[new[offset[h] + i]]
            if labels[v] is None:
                labels[v] = x
            elif labels[v] != x:
                raise InvalidMapError("inconsistent labels at a vertex")
    face_index = [0] * m.n_faces
    for h in range(n_s):
        if len(pieces[h][0]) > 1:
            face_index[m.face_of[new[offset[h]]]] = enc.scheme.face_index[s.face_of[h]]
    lm = LabeledMap(m, face_index, labels).normalized()
    if check:
        rep = validate(m, labels=lm.labels, face_index=lm.face_index)
        if not rep.ok:
            raise InvalidMapError("; ".join(rep.errors))
    return lm


def _contour_mates(c):
    tau = len(c) - 1
    mate = [-1] * tau
    stack = []
    low = 0
    for i in range(tau):
        if c[i + 1] > c[i]:
            stack.append(i)
        elif c[i + 1] < low:
            low = c[i + 1]
        else:
            j = stack.pop()
            mate[i], mate[j] = j, i
    return mate


def _potential(s: CombinatorialMap, incr):
    """Vertex potential with value 0 at the root vertex whose gradient is
    ``incr``; raises if the increments do not form a potential."""
    vof = s.vertex_of
    pot = [None] * s.n_vertices
    pot[vof[s.root]] = 0
    queue = deque([vof[s.root]])
    while queue:
        v = queue.popleft()
        for h in s.vertices[v]:
            u = vof[h ^ 1]
            x = pot[v] + incr[h]
            if pot[u] is None:
                pot[u] = x
                queue.append(u)
            elif pot[u] != x:
                raise InvalidMapError("walk increments do not form a potential")
    for h in range(s.n_half):
        if incr[h] != -incr[h ^ 1]:
            raise InvalidMapError("walk increments are not antisymmetric")
    return pot


def _decode_tree(enc: EncodedLabeledMap, check: bool) -> LabeledMap:
    from .combmap import plane_tree
    c, z = enc.tree
    tau = len(c) - 1
    if tau < 3:
        raise InvalidMapError("a tree snake needs at least one edge")
    if check:
        _forest_structure(c, z, 1, "tree")
        _check_snake_labels(c, z, "tree")
    steps = [c[i + 1] - c[i] for i in range(tau - 1)]
    t = plane_tree(steps)
    labels = [0] * t.n_vertices
    phi = t.phi
    h = t.root
    for i in range(tau - 1):
        labels[t.vertex_of[h]] = z[i]
        h = phi[h]
    return LabeledMap(t, (1,), labels)


def two_point_distance_encoded(enc: EncodedLabeledMap) -> int:
    """Distance between the two sources, read off a two-face encoding.

    Corner labels along each face are the walk potential plus the snake
    label processes; edges separating the two faces all lie on chains, so
    the shared minimum only needs the walks.
    """
    if enc.scheme is None or enc.scheme.map.n_faces != 2:
        raise ValueError("need a two-face encoding")
    s = enc.scheme.map
    pot = _potential(s, [w[-1] for w in enc.w])
    fo = s.face_of
    lows = [None, None]
    shared = None
    for h in range(s.n_half):
        c, z = enc.c[h], enc.z[h]
        if h == 0 and enc.tree is not None:
            tc, tz = enc.tree
            c = tuple(tc[:-1]) + tuple(x - 1 for x in c)
            z = tuple(tz[:-1]) + tuple(z)
        w = enc.w[h]
        base = pot[s.vertex_of[h]]
        low = 0
        best = None
        for i in range(len(c) - 1):
            low = min(low, c[i])
            x = base + z[i] + w[-low]
            best = x if best is None else min(best, x)
        f = fo[h]
        if best is not None:
            lows[f] = best if lows[f] is None else min(lows[f], best)
        if fo[h ^ 1] != f:
            chain_min = base + min(w[:-1])
            shared = chain_min if shared is None else min(shared, chain_min)
    return 2 * shared - lows[0] - lows[1] + 2
