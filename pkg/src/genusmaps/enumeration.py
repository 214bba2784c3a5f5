"""Exhaustive generation, exact counts and matrix-tree partition functions.

Small sets are generated by brute force with canonical-form deduplication.
Everything here is meant for desk-scale sizes; the functions refuse inputs
whose search space would blow up rather than silently running for hours.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from fractions import Fraction

import numpy as np
from scipy import integrate

from .bijection import LabeledMap, backward
from .combmap import (
    CombinatorialMap,
    canonical_form,
    from_permutations,
    is_bipartite_quadrangulation,
    plane_tree,
)
from .quad import PointedQuad, enumerate_delays


class BudgetExceeded(RuntimeError):
    pass


def perfect_matchings(elems):
    """All fixed-point-free involutions on ``elems`` as lists of pairs."""
    elems = list(elems)
    if not elems:
        yield []
        return
    a = elems[0]
    for i in range(1, len(elems)):
        b = elems[i]
        rest = elems[1:i] + elems[i + 1:]
        for m in perfect_matchings(rest):
            yield [(a, b)] + m


def _glue(face_sizes, matching):
    """Map obtained by gluing polygons along ``matching``.

    Polygon sides are numbered consecutively; ``phi`` walks each polygon.
    Returns the map with ``alpha = h ^ 1`` after relabelling.
    """
    n = sum(face_sizes)
    phi_inv = [0] * n
    start = 0
    for d in face_sizes:
        for i in range(d):
            phi_inv[start + i] = start + (i - 1) % d
        start += d
    alpha = [0] * n
    for a, b in matching:
        alpha[a], alpha[b] = b, a
    sigma = [alpha[phi_inv[h]] for h in range(n)]
    return from_permutations(sigma, alpha)[0]


def _rooted_classes(m: CombinatorialMap) -> set:
    return {canonical_form(m, r) for r in range(m.n_half)}


def exhaustive_quads(g: int, n: int, method: str = "gluing") -> list[CombinatorialMap]:
    """All rooted bipartite quadrangulations of genus ``g`` with ``n`` faces.

    ``method="gluing"`` glues ``n`` squares along every perfect matching of
    their sides.  ``method="bijection"`` collects the preimages of all
    labelled one-face maps instead.  Both return canonical maps sorted by
    rotation.
    """
    if n < 1:
        return []
    if method == "gluing":
        if n > 4:
            raise BudgetExceeded(f"gluing search limited to n <= 4, got {n}")
        found = set()
        for mt in perfect_matchings(range(4 * n)):
            m = _glue([4] * n, mt)
            if not m.is_connected() or m.genus != g:
                continue
            if not is_bipartite_quadrangulation(m):
                continue
            found |= _rooted_classes(m)
    elif method == "bijection":
        if n > 6:
            raise BudgetExceeded(f"bijection route limited to n <= 6, got {n}")
        found = set()
        for lm in labeled_maps(g, 1, n):
            for flip in (False, True):
                found.add(canonical_form(backward(lm, flip, check=False).quad))
    else:
        raise ValueError(f"unknown method {method!r}")
    return [CombinatorialMap(s, 0) for s in sorted(found)]


def planar_quad_count(n: int) -> int:
    """Closed-form number of rooted planar quadrangulations with ``n`` faces."""
    return 2 * 3 ** n * math.comb(2 * n, n) // ((n + 1) * (n + 2))


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def dyck_paths(n: int):
    """All Dyck words with ``n`` up-steps, as tuples of +1/-1."""
    def rec(path, up, down):
        if up == n and down == n:
            yield tuple(path)
            return
        if up < n:
            path.append(1)
            yield from rec(path, up + 1, down)
            path.pop()
        if down < up:
            path.append(-1)
            yield from rec(path, up, down + 1)
            path.pop()
    yield from rec([], 0, 0)


def rooted_maps(g: int, k: int, n: int) -> list[CombinatorialMap]:
    """All rooted maps with ``n`` edges, genus ``g`` and ``k`` faces."""
    if n < 1:
        return []
    if g == 0 and k == 1:
        return [CombinatorialMap(canonical_form(plane_tree(d)), 0) for d in dyck_paths(n)]
    if n > 5:
        raise BudgetExceeded(f"rooted map search limited to n <= 5, got {n}")
    found = set()
    for sig in itertools.permutations(range(2 * n)):
        m = CombinatorialMap(sig)
        if m.n_faces != k or m.genus != g or not m.is_connected():
            continue
        found.add(canonical_form(m))
    return [CombinatorialMap(s, 0) for s in sorted(found)]


def labelings(m: CombinatorialMap):
    """All vertex labellings with root label 0 and steps of at most 1 along edges."""
    nv = m.n_vertices
    adj = m.adjacency
    r = m.vertex_of[m.root]
    order = [r]
    seen = {r}
    queue = deque([r])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                order.append(w)
                queue.append(w)
    lab = [None] * nv

    def rec(i):
        if i == nv:
            yield tuple(lab)
            return
        v = order[i]
        ref = next(lab[w] for w in adj[v] if lab[w] is not None)
        for x in (ref - 1, ref, ref + 1):
            if all(lab[w] is None or abs(lab[w] - x) <= 1 for w in adj[v]):
                lab[v] = x
                yield from rec(i + 1)
        lab[v] = None

    lab[r] = 0
    yield from rec(1)


def face_indexings(m: CombinatorialMap):
    for perm in itertools.permutations(range(1, m.n_faces + 1)):
        yield perm


def labeled_maps(g: int, k: int, n: int) -> list[LabeledMap]:
    """All rooted labelled maps with ``n`` edges, genus ``g`` and ``k`` indexed faces."""
    out = []
    for m in rooted_maps(g, k, n):
        for fi in face_indexings(m):
            for lab in labelings(m):
                out.append(LabeledMap(m, fi, lab))
    return out


def pointed_quads(g: int, k: int, n: int, method: str = "gluing") -> list[PointedQuad]:
    """All rooted quadrangulations with ``n`` faces, ``k`` ordered distinct
    sources and a valid delay vector."""
    out = []
    for q in exhaustive_quads(g, n, method):
        for src in itertools.permutations(range(q.n_vertices), k):
            for d in enumerate_delays(q, src):
                out.append(PointedQuad(q, src, d))
    return out


# ----------------------------------------------------------------- schemes

def _partitions_min3(total, parts):
    """Non-increasing tuples of ``parts`` integers >= 3 summing to ``total``."""
    def rec(left, count, cap):
        if count == 0:
            if left == 0:
                yield ()
            return
        for x in range(min(cap, left - 3 * (count - 1)), 2, -1):
            for rest in rec(left - x, count - 1, x):
                yield (x,) + rest
    yield from rec(total, parts, total)


def _maps_with_vertex_degrees(degrees):
    """Connected maps whose vertices have the given degrees, all rootings."""
    n = sum(degrees)
    sigma = [0] * n
    start = 0
    for d in degrees:
        for i in range(d):
            sigma[start + i] = start + (i + 1) % d
        start += d
    for mt in perfect_matchings(range(n)):
        alpha = [0] * n
        for a, b in mt:
            alpha[a], alpha[b] = b, a
        yield from_permutations(sigma, alpha)[0]



class Scheme:
    """A rooted map with indexed faces, used as the skeleton of a labelled map."""

    __slots__ = ("map", "face_index")

    def __init__(self, m: CombinatorialMap, face_index):
        self.map = m
        self.face_index = tuple(face_index)

    @property
    def n_edges(self) -> int:
        return self.map.n_edges

    @property
    def is_trivalent(self) -> bool:
        return all(len(c) == 3 for c in self.map.vertices)

    @property
    def key(self):
        return self.map.sigma, self.face_index

    def graph(self):
        """``(n_vertices, edges)`` with one ``(u, v)`` pair per edge."""
        vof = self.map.vertex_of
        return self.map.n_vertices, [(vof[2 * j], vof[2 * j + 1]) for j in range(self.n_edges)]

    def __eq__(self, other):
        return isinstance(other, Scheme) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"Scheme(sigma={self.map.sigma}, face_index={self.face_index})"


def loop_schemes() -> list[Scheme]:
    """The two planar loop maps, which differ by the index of the root face."""
    m = CombinatorialMap((1, 0), 0)
    return [Scheme(m, (1, 2)), Scheme(m, (2, 1))]


def schemes(g: int, k: int) -> list[Scheme]:
    """All rooted maps of genus ``g`` with ``k`` indexed faces whose vertices
    all have degree at least 3.  For ``(g, k) = (0, 2)`` the two loop maps."""
    if (g, k) == (0, 2):
        return loop_schemes()
    max_e = 3 * k + 6 * g - 6
    if max_e < 1:
        raise ValueError(f"no scheme exists for (g, k) = ({g}, {k})")
    if 2 * max_e > 14:
        raise BudgetExceeded(f"scheme search for (g, k) = ({g}, {k}) needs {2 * max_e} half-edges")
    rooted = set()
    for e in range(1, max_e + 1):
        nv = 2 - 2 * g - k + e
        if nv < 1:
            continue
        for degrees in _partitions_min3(2 * e, nv):
            for m in _maps_with_vertex_degrees(degrees):
                if m.n_faces == k and m.is_connected():
                    rooted |= _rooted_classes(m)
    out = []
    for sig in sorted(rooted):
        m = CombinatorialMap(sig, 0)
        for fi in face_indexings(m):
            out.append(Scheme(m, fi))
    return out


def trivalent(items) -> list[Scheme]:
    return [s for s in items if s.is_trivalent]


# ------------------------------------------------------------- matrix-tree

def _check_graph(n_vertices, edges, weights):
    if len(edges) != len(weights):
        raise ValueError("one weight per edge")
    if any(w <= 0 for w in weights):
        raise ValueError("weights must be positive")
    parent = list(range(n_vertices))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        parent[find(u)] = find(v)
    if len({find(x) for x in range(n_vertices)}) != 1:
        raise ValueError("graph is disconnected")


def spanning_tree_polynomial(n_vertices, edges, weights, root=0) -> float:
    """Sum over spanning trees of the product of ``1 / r_e``, as the
    determinant of a reduced weighted Laplacian.  Loops never lie in a tree."""
    _check_graph(n_vertices, edges, weights)
    if n_vertices == 1:
        return 1.0
    lap = np.zeros((n_vertices, n_vertices))
    for (u, v), r in zip(edges, weights):
        if u == v:
            continue
        c = 1.0 / r
        lap[u, u] += c
        lap[v, v] += c
        lap[u, v] -= c
        lap[v, u] -= c
    keep = [i for i in range(n_vertices) if i != root]
    return float(np.linalg.det(lap[np.ix_(keep, keep)]))


def spanning_trees(n_vertices, edges) -> list[tuple]:
    """Edge index sets of all spanning trees, by brute force."""
    out = []
    for subset in itertools.combinations(range(len(edges)), n_vertices - 1):
        parent = list(range(n_vertices))

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x

        ok = True
        for i in subset:
            a, b = find(edges[i][0]), find(edges[i][1])
            if a == b:
                ok = False
                break
            parent[a] = b
        if ok:
            out.append(subset)
    return out


def spanning_tree_polynomial_bruteforce(n_vertices, edges, weights) -> float:
    _check_graph(n_vertices, edges, weights)
    return math.fsum(math.prod(1.0 / weights[i] for i in t)
                     for t in spanning_trees(n_vertices, edges))


def z_complement(n_vertices, edges, weights) -> float:
    """Sum over spanning trees of the product of ``2 pi r_e`` over edges
    outside the tree, computed from the Laplacian determinant."""
    det = spanning_tree_polynomial(n_vertices, edges, weights)
    scale = math.prod(2 * math.pi * r for r in weights)
    return scale * det / (2 * math.pi) ** (n_vertices - 1)


def z_complement_bruteforce(n_vertices, edges, weights) -> float:
    _check_graph(n_vertices, edges, weights)
    m = len(edges)
    total = 0.0
    for t in spanning_trees(n_vertices, edges):
        inside = set(t)
        total += math.prod(2 * math.pi * weights[i] for i in range(m) if i not in inside)
    return total


# ------------------------------------------------------------ constants

def simplex_volume(n_edges: int) -> float:
    """Mass of the simplex measure in dimension ``n_edges``: 1 / (n - 1)!."""
    return 1.0 / math.factorial(n_edges - 1)


def cg_prefactor(g: int) -> float:
    a = 5 * g - 3
    return 16 * (3 / 64) ** g * math.gamma(a) / ((6 * g - 3) * math.gamma(a / 2))


def _complement_monomials(scheme: Scheme):
    nv, edges = scheme.graph()
    m = len(edges)
    return [[i for i in range(m) if i not in set(t)] for t in spanning_trees(nv, edges)]


def _inv_sqrt_z(monos, u):
    """``1 / sqrt(Z(u))`` for a batch of points ``u`` of shape (N, |E|)."""
    z = np.zeros(u.shape[0])
    for mono in monos:
        z += np.prod(2 * np.pi * u[:, mono], axis=1)
    return 1.0 / np.sqrt(z)


def simplex_integral(scheme: Scheme, rng, n_samples: int):
    """Monte-Carlo estimate of the integral of ``Z^-1/2`` against the simplex
    measure.  Dirichlet points come in antithetic pairs; returns the
    estimate and its standard error."""
    monos = _complement_monomials(scheme)
    m = scheme.n_edges
    half = max(n_samples // 2, 1)
    v = rng.random((half, m))
    vals = []
    for x in (v, 1.0 - v):
        e = -np.log1p(-x)
        vals.append(_inv_sqrt_z(monos, e / e.sum(axis=1, keepdims=True)))
    pair = 0.5 * (vals[0] + vals[1])
    vol = simplex_volume(m)
    return vol * pair.mean(), vol * pair.std(ddof=1) / math.sqrt(half)


def simplex_integral_quadrature(scheme: Scheme) -> float:
    """Deterministic version for three-edge schemes, by nested quadrature."""

    monos = _complement_monomials(scheme)
    if scheme.n_edges != 3:
        raise ValueError("quadrature route only for three-edge schemes")

    def f(y, x):
        u = np.array([[x, y, 1.0 - x - y]])
        return float(_inv_sqrt_z(monos, u)[0])

    val, _ = integrate.dblquad(f, 0.0, 1.0, 0.0, lambda x: 1.0 - x, epsabs=1e-11, epsrel=1e-11)
    return val


def cg_constant(g: int, rel_err: float = 1e-3, seed: int = 0, batch: int = 200_000,
                max_samples: int = 50_000_000):
    """The asymptotic constant ``C_g`` and a standard error.

    ``C_0`` is returned in closed form.  For ``g >= 1`` the simplex integrals
    over the trivalent one-face schemes are estimated by Monte Carlo until the
    relative standard error drops below ``rel_err / 4``.
    Returns ``(value, stderr, samples)``.
    """
    if g == 0:
        return 2 / math.sqrt(math.pi), 0.0, 0
    tri = trivalent(schemes(g, 1))
    pref = cg_prefactor(g)
    seeds = np.random.SeedSequence(seed)
    sums = [[] for _ in tri]
    samples = 0
    while True:
        for i, s in enumerate(tri):
            rng = np.random.default_rng(seeds.spawn(1)[0])
            sums[i].append(simplex_integral(s, rng, batch))
        samples += batch
        est = var = 0.0
        for parts in sums:
            vals = np.array([p[0] for p in parts])
            errs = np.array([p[1] for p in parts])
            est += vals.mean()
            var += (errs ** 2).sum() / len(parts) ** 2
        value, err = pref * est, pref * math.sqrt(var)
        if err <= abs(value) * rel_err / 4:
            return value, err, samples
        if samples >= max_samples:
            raise RuntimeError(f"integration did not converge: C_{g} = {value} +- {err}")


def planar_ratio(n: int) -> float:
    """``|Q_0^n| 12^-n n^(5/2) / C_0`` from the exact count."""
    logq = math.log(2) + n * math.log(3) + math.lgamma(2 * n + 1) - 2 * math.lgamma(n + 1) \
        - math.log(n + 1) - math.log(n + 2)
    return math.exp(logq - n * math.log(12) + 2.5 * math.log(n)) / (2 / math.sqrt(math.pi))


# -------------------------------------------------------- snake weights

def ds_weight(tau: int, r: int) -> Fraction:
    return Fraction(1, 2 ** tau * 3 ** ((tau - r) // 2))


def forest_contours(r: int, tau: int):
    """Contours of forests with ``r`` trees and duration ``tau``: sequences of
    +1/-1 steps that first reach ``-r`` at time ``tau``."""
    if (tau - r) % 2 or tau < r:
        return
    ups = (tau - r) // 2

    def rec(path, h, u):
        t = len(path)
        if t == tau:
            yield tuple(path)
            return
        left = tau - t
        if u < ups:
            path.append(1)
            yield from rec(path, h + 1, u + 1)
            path.pop()
        downs_left = left - (ups - u)
        if downs_left > 0 and (h - 1 > -r or left == 1):
            path.append(-1)
            yield from rec(path, h - 1, u)
            path.pop()

    yield from rec([], 0, 0)


def snake_labelings(contour):
    """All label paths compatible with a forest contour: labels change by at
    most one along each tree edge and every tree root has label 0."""
    # vertex visited at each time, and the parent of each new vertex
    vertex = [0]
    parent = {}
    stack = [0]
    nv = 1
    for s in contour:
        if s > 0:
            parent[nv] = stack[-1]
            stack.append(nv)
            vertex.append(nv)
            nv += 1
        else:
            stack.pop()
            if not stack:
                stack.append(nv)
                parent[nv] = None
                nv += 1
            vertex.append(stack[-1])
    children = [v for v in range(nv) if parent.get(v) is not None]
    for incs in itertools.product((-1, 0, 1), repeat=len(children)):
        lab = {v: 0 for v in range(nv) if parent.get(v) is None}
        for v, d in zip(children, incs):
            lab[v] = lab[parent[v]] + d
        yield tuple(lab[v] for v in vertex)


def ds_series(r: int, max_tau: int, full_labels_upto: int = 11):
    """Coefficients of the snake size generating function, two ways.

    Returns ``{tau: (enumerated, series)}`` with exact fractions.  The
    enumerated side walks every forest contour and counts its label paths,
    explicitly up to ``full_labels_upto`` and as ``3^edges`` beyond.
    """
    if max_tau > 25:
        raise BudgetExceeded("forest enumeration limited to tau <= 25")
    base = [Fraction(0)] * (max_tau + 1)
    for n in range((max_tau - 1) // 2 + 1):
        base[2 * n + 1] = Fraction(catalan(n), 2 ** (2 * n + 1))
    power = [Fraction(0)] * (max_tau + 1)
    power[0] = Fraction(1)
    for _ in range(r):
        nxt = [Fraction(0)] * (max_tau + 1)
        for i, a in enumerate(power):
            if a:
                for j in range(1, max_tau + 1 - i):
                    if base[j]:
                        nxt[i + j] += a * base[j]
        power = nxt
    out = {}
    for tau in range(r, max_tau + 1):
        total = Fraction(0)
        for c in forest_contours(r, tau):
            edges = (tau - r) // 2
            if tau <= full_labels_upto:
                count = sum(1 for _ in snake_labelings(c))
            else:
                count = 3 ** edges
            total += count * ds_weight(tau, r)
        out[tau] = (total, power[tau])
    return out
