"""Finite metric measure spaces, Gromov-Hausdorff(-Prokhorov) distances and
the distance statistics of sampled quadrangulations.

Exact distances work on the compatibility graph of a distortion threshold
``t``: its vertices are the pairs ``(x, x')`` and two pairs are joined when
they distort distances by at most ``t``.  Correspondences of distortion at
most ``t`` are exactly the cliques of that graph that cover both sides, and
since enlarging a correspondence never lowers the coupling mass it can
carry, only maximal cliques need to be examined.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .bijection import forward, two_point_distance
from .combmap import CombinatorialMap

WEIGHT_TOL = 1e-12


class MetricSpaceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteMetricMeasureSpace:
    """Points ``0..n-1`` with a distance matrix and a probability vector."""

    dist: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "weights", w)
        check_metric(d, w)

    @classmethod
    def uniform(cls, dist) -> "FiniteMetricMeasureSpace":
        n = len(dist)
        return cls(np.asarray(dist, dtype=float), np.full(n, 1.0 / n))

    @property
    def n(self) -> int:
        return len(self.weights)

    @cached_property
    def diameter(self) -> float:
        return float(self.dist.max()) if self.n else 0.0

    @cached_property
    def eccentricities(self) -> np.ndarray:
        return self.dist.max(axis=1)

    def row(self, u: int):
        return self.dist[u]

    def neighbours(self, u: int):
        return np.flatnonzero(self.dist[u] == 1).tolist()

    def points(self):
        return range(self.n)


def check_metric(d, w=None) -> None:
    """Raise MetricSpaceError unless ``d`` is a metric (and ``w`` a
    probability vector of the right length)."""
    d = np.asarray(d, dtype=float)
    n = len(d)
    if d.shape != (n, n):
        raise MetricSpaceError("distance matrix must be square")
    if n == 0:
        raise MetricSpaceError("empty space")
    if np.any(np.diag(d) != 0):
        raise MetricSpaceError("non-zero diagonal")
    if not np.array_equal(d, d.T):
        raise MetricSpaceError("distance matrix is not symmetric")
    off = d[~np.eye(n, dtype=bool)]
    if np.any(off <= 0):
        raise MetricSpaceError("distinct points at distance <= 0")
    # d[i, k] <= d[i, j] + d[j, k] for all triples
    if np.any(d[:, None, :] > d[:, :, None] + d[None, :, :] + 1e-12):
        raise MetricSpaceError("triangle inequality fails")
    if w is not None:
        w = np.asarray(w, dtype=float)
        if w.shape != (n,) or np.any(w < 0):
            raise MetricSpaceError("weights must be a non-negative vector, one per point")
        if abs(w.sum() - 1) > WEIGHT_TOL:
            raise MetricSpaceError("weights must sum to 1")


def from_quad(quad: CombinatorialMap) -> FiniteMetricMeasureSpace:
    """Vertex set with the graph distance and the uniform measure."""
    dist = np.array([_bfs(quad.adjacency, v) for v in range(quad.n_vertices)], dtype=float)
    return FiniteMetricMeasureSpace.uniform(dist)


def _bfs(adj, source: int) -> list[int]:
    dist = [-1] * len(adj)
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


class GraphMetric:
    """Graph distance on the vertices of a map, one BFS per requested row.

    Stands in for a full distance matrix on large maps; offers the same
    ``row``/``neighbours`` interface as FiniteMetricMeasureSpace.
    """

    def __init__(self, m: CombinatorialMap):
        self.adj = m.adjacency
        self.n = m.n_vertices
        self._rows = {}
        heads = np.array([w for nb in self.adj for w in nb], dtype=np.int64)
        tails = np.repeat(np.arange(self.n), [len(nb) for nb in self.adj])
        self._csr = csr_matrix((np.ones(len(heads)), (tails, heads)), shape=(self.n, self.n))

    def row(self, u: int):
        if u not in self._rows:
            d = shortest_path(self._csr, unweighted=True, indices=u)
            self._rows[u] = d.astype(np.int64)
        return self._rows[u]

    def neighbours(self, u: int):
        return sorted(set(self.adj[u]))

    def points(self):
        return range(self.n)


# ------------------------------------------------------------ distortion

def distortion(X: FiniteMetricMeasureSpace, Y: FiniteMetricMeasureSpace, R) -> float:
    """``sup |d(x, y) - d'(x', y')|`` over pairs of related pairs."""
    R = list(R)
    if not R:
        return 0.0
    a = np.array([p for p, _ in R])
    b = np.array([q for _, q in R])
    return float(np.abs(X.dist[np.ix_(a, a)] - Y.dist[np.ix_(b, b)]).max())


def is_correspondence(X, Y, R) -> bool:
    R = set(R)
    return {p for p, _ in R} == set(range(X.n)) and {q for _, q in R} == set(range(Y.n))


def _candidate_thresholds(X, Y) -> list[float]:
    """Every value a distortion can take (0 included)."""
    vals = np.abs(X.dist.reshape(-1, 1) - Y.dist.reshape(1, -1))
    return sorted(set(np.round(vals.ravel(), 12).tolist()) | {0.0})


def compatibility_graph(X, Y, t: float) -> nx.Graph:
    """Pairs ``(x, x')`` joined when they distort distances by at most ``t``."""
    g = nx.Graph()
    pairs = [(p, q) for p in range(X.n) for q in range(Y.n)]
    g.add_nodes_from(pairs)
    for (p, q), (r, s) in itertools.combinations(pairs, 2):
        if abs(X.dist[p, r] - Y.dist[q, s]) <= t + 1e-12:
            g.add_edge((p, q), (r, s))
    return g


def covering_cliques(X, Y, t: float):
    """Maximal correspondences with distortion at most ``t``."""
    # a pair must be compatible with itself: d(x, x) = d'(x', x') = 0, always true
    for clique in nx.find_cliques(compatibility_graph(X, Y, t)):
        if is_correspondence(X, Y, clique):
            yield clique


def has_correspondence(X, Y, t: float) -> bool:
    return next(covering_cliques(X, Y, t), None) is not None


# ------------------------------------------------------------ GH distance

def gh_distance(X, Y, exact_limit: int = 7, exact: bool | None = None):
    """Gromov-Hausdorff distance, half the least distortion of a
    correspondence.

    Exact (a float) when both spaces have at most ``exact_limit`` points:
    binary search over the finitely many possible distortions, each step
    asking whether some maximal clique of the compatibility graph covers
    both sides.  Otherwise returns ``(lower, upper)`` bounds.  Passing
    ``exact=True`` beyond the limit raises.
    """
    big = max(X.n, Y.n) > exact_limit
    if exact and big:
        raise MetricSpaceError(f"exact mode needs at most {exact_limit} points")
    if big and not exact:
        return gh_bounds(X, Y)
    cands = _candidate_thresholds(X, Y)
    lo, hi = 0, len(cands) - 1          # the largest candidate always works
    while lo < hi:
        mid = (lo + hi) // 2
        if has_correspondence(X, Y, cands[mid]):
            hi = mid
        else:
            lo = mid + 1
    return cands[lo] / 2


def gh_bruteforce(X, Y) -> float:
    """Half the least distortion over every subset of ``X x Y`` (tiny spaces)."""
    pairs = [(p, q) for p in range(X.n) for q in range(Y.n)]
    if len(pairs) > 16:
        raise MetricSpaceError("brute force limited to 16 pairs")
    best = math.inf
    for mask in range(1, 1 << len(pairs)):
        R = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        if is_correspondence(X, Y, R):
            best = min(best, distortion(X, Y, R))
    return best / 2


def gh_bounds(X, Y) -> tuple[float, float]:
    """Certified bounds on the GH distance for spaces of any size.

    Lower: related points have eccentricities within the distortion, so the
    Hausdorff distance between the two sets of eccentricities is at most
    twice the GH distance (this covers the diameter and radius gaps).
    Upper: the distortion of the correspondence matching each point to the
    points of closest eccentricity, capped by half the larger diameter.
    """
    ex, ey = X.eccentricities, Y.eccentricities
    gap = np.abs(ex[:, None] - ey[None, :])
    lower = max(gap.min(axis=1).max(), gap.min(axis=0).max()) / 2
    R = {(p, int(gap[p].argmin())) for p in range(X.n)}
    R |= {(int(gap[:, q].argmin()), q) for q in range(Y.n)}
    upper = min(distortion(X, Y, R) / 2, max(X.diameter, Y.diameter) / 2)
    return float(lower), float(upper)


# --------------------------------------------------- couplings and GHP

def max_coupling_mass(mu, nu, allowed) -> float:
    """Largest mass a coupling of ``mu`` and ``nu`` can put on ``allowed``
    (a set of index pairs), as a max flow: source -> x with capacity
    ``mu[x]``, x -> x' for allowed pairs, x' -> sink with capacity
    ``nu[x']``."""
    g = nx.DiGraph()
    for p, m in enumerate(mu):
        g.add_edge("s", ("a", p), capacity=float(m))
    for q, m in enumerate(nu):
        g.add_edge(("b", q), "t", capacity=float(m))
    for p, q in allowed:
        g.add_edge(("a", p), ("b", q))          # no capacity attribute: unbounded
    if not g.has_node("s") or not g.has_node("t"):
        return 0.0
    return float(nx.maximum_flow_value(g, "s", "t"))


def _deficit(mass: float) -> float:
    """``1 - mass`` rounded like the distortion candidates, so that exact
    couplings give exactly 0."""
    return round(1.0 - mass, 12)


def transport_vertices(mu, nu):
    """Vertices of the transportation polytope of couplings of ``mu`` and
    ``nu``, by brute force over supports (meant for 2x2 and 3x3).

    A coupling is a vertex iff its support graph is a forest; each such
    support of size ``m + n - 1`` determines it by peeling leaves.
    """
    m, n = len(mu), len(nu)
    cells = [(i, j) for i in range(m) for j in range(n)]
    out = []
    for support in itertools.combinations(cells, m + n - 1):
        A = np.zeros((m + n, len(support)))
        for k, (i, j) in enumerate(support):
            A[i, k] = 1
            A[m + j, k] = 1
        b = np.concatenate([mu, nu])
        if np.linalg.matrix_rank(A) < m + n - 1:
            continue
        x, *_ = np.linalg.lstsq(A, b, rcond=None)
        if np.any(x < -1e-12) or np.abs(A @ x - b).max() > 1e-9:
            continue
        P = np.zeros((m, n))
        for k, (i, j) in enumerate(support):
            P[i, j] = max(x[k], 0.0)
        out.append(P)
    return out


def max_coupling_mass_vertices(mu, nu, allowed) -> float:
    """Same optimum as max_coupling_mass, by scanning polytope vertices."""
    mask = np.zeros((len(mu), len(nu)))
    for p, q in allowed:
        mask[p, q] = 1
    return max(float((P * mask).sum()) for P in transport_vertices(mu, nu))


def ghp_distance(X, Y, exact_limit: int = 5) -> float:
    """Gromov-Hausdorff-Prokhorov distance: the least ``eps`` such that some
    correspondence of distortion at most ``2 eps`` carries coupling mass at
    least ``1 - eps``.

    The best mass ``f(t)`` at distortion ``t`` is a step function, constant
    between consecutive candidate distortions ``t_i``, so the answer is
    ``min_i max(t_i / 2, 1 - f(t_i))``.
    """
    if max(X.n, Y.n) > exact_limit:
        raise MetricSpaceError(f"GHP computation limited to {exact_limit} points")
    best = math.inf
    for t in _candidate_thresholds(X, Y):
        if t / 2 >= best:
            break
        masses = [max_coupling_mass(X.weights, Y.weights, c) for c in covering_cliques(X, Y, t)]
        if masses:
            best = min(best, max(t / 2, _deficit(max(masses))))
    return max(best, 0.0)


# -------------------------------------------------------------- Prokhorov

def prokhorov(d, mu, nu) -> float:
    """Prokhorov distance between two measures on one finite metric space,
    from the definition: the least ``eps`` with ``mu(C) <= nu(C^eps) + eps``
    for every set ``C`` (``C^eps`` the open neighbourhood)."""
    d = np.asarray(d, dtype=float)
    n = len(d)
    if n > 16:
        raise MetricSpaceError("subset enumeration limited to 16 points")
    worst = 0.0
    for size in range(1, n + 1):
        for C in itertools.combinations(range(n), size):
            reach = d[list(C)].min(axis=0)          # distance of each point to C
            mc = float(sum(mu[i] for i in C))
            levels = sorted(set(reach.tolist()))
            # eps in (level_j, level_j+1]: the neighbourhood is {reach <= level_j}
            inf_c = min(max(lv, round(mc - float(nu[reach <= lv].sum()), 12)) for lv in levels)
            worst = max(worst, inf_c)
    return worst


def prokhorov_coupling(d, mu, nu) -> float:
    """Prokhorov distance by coupling: the least ``eps`` such that some
    coupling puts mass at most ``eps`` on pairs further apart than ``eps``."""
    d = np.asarray(d, dtype=float)
    levels = sorted(set(d.ravel().tolist()))
    best = math.inf
    for lv in levels:
        allowed = list(zip(*np.nonzero(d <= lv)))
        best = min(best, max(lv, _deficit(max_coupling_mass(mu, nu, allowed))))
    return max(best, 0.0)


# ----------------------------------------------------------- eps-isometries

def _one_sided(X, Y) -> float:
    """Least ``eps`` for which some map ``f: X -> Y`` is an eps-isometry with
    ``d_P(f_* mu, mu') <= eps``; exhaustive over all ``|Y|^|X|`` maps."""
    best = math.inf
    for f in itertools.product(range(Y.n), repeat=X.n):
        f = np.array(f)
        dis = float(np.abs(X.dist - Y.dist[np.ix_(f, f)]).max())
        if dis >= best:
            continue
        net = float(Y.dist[:, sorted(set(f.tolist()))].min(axis=1).max())
        if net >= best:
            continue
        push = np.bincount(f, weights=X.weights, minlength=Y.n)
        best = min(best, max(dis, net, prokhorov(Y.dist, push, Y.weights)))
    return best


def delta_ghp(X, Y, limit: int = 4) -> float:
    """Least ``eps`` such that the spaces are eps-close: eps-isometries both
    ways whose image measures are within eps of the targets."""
    if max(X.n, Y.n) > limit:
        raise MetricSpaceError(f"exhaustive eps-isometry search limited to {limit} points")
    return max(_one_sided(X, Y), _one_sided(Y, X))


def epsilon_net(X, eps: float) -> list[int]:
    """Greedy net: every point lies at distance < eps from a chosen one and
    chosen points are pairwise at least eps apart."""
    chosen = []
    for p in X.points():
        if all(X.row(c)[p] >= eps for c in chosen):
            chosen.append(p)
    return chosen


def canonical_space(X, digits: int = 12):
    """Isometry-class key of a small weighted space (all relabellings)."""
    d = np.round(X.dist, digits)
    w = np.round(X.weights, digits)
    best = None
    for perm in itertools.permutations(range(X.n)):
        p = list(perm)
        key = (tuple(d[np.ix_(p, p)].ravel().tolist()), tuple(w[p].tolist()))
        if best is None or key < best:
            best = key
    return best


def random_space(rng, n: int, max_dist: int = 4, weighted: bool = True):
    """Random metric on ``n`` points: shortest paths of random positive edge
    lengths on the complete graph; Dirichlet or uniform weights."""
    lengths = rng.integers(1, max_dist + 1, size=(n, n)).astype(float)
    lengths = np.triu(lengths, 1)
    lengths = lengths + lengths.T
    d = lengths.copy()
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    np.fill_diagonal(d, 0)
    w = rng.dirichlet(np.ones(n)) if weighted else np.full(n, 1.0 / n)
    w = w / w.sum()
    return FiniteMetricMeasureSpace(d, w)


# ----------------------------------------------- medians and geodesics

def median_quasi_geodesic(space, x: int, y: int, D: int, delta: float = 2):
    """Points ``z`` with ``d(x,z) - d(y,z) = D`` and ``d(x,z) + d(y,z) <=
    d(x,y) + delta``, and the diameter of that set (0 when it has at most one
    point)."""
    dx, dy = space.row(x), space.row(y)
    dxy = dx[y]
    if not -dxy < D < dxy:
        raise ValueError(f"D = {D} outside ({-dxy}, {dxy})")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    pts = [int(z) for z in np.flatnonzero((dx - dy == D) & (dx + dy <= dxy + delta))]
    diam = 0
    for i, z in enumerate(pts):
        row = space.row(z)
        for w in pts[i + 1:]:
            diam = max(diam, row[w])
    return pts, diam


def geodesic_count(space, x: int, y: int) -> int:
    """Number of shortest chains ``x = z_0, ..., z_d = y`` with unit steps."""
    dx = space.row(x)
    dxy = int(dx[y])
    dy = space.row(y)
    on = [int(z) for z in np.flatnonzero(dx + dy == dxy)]
    count = {x: 1}
    for z in sorted(on, key=lambda v: dx[v]):
        if z == x:
            continue
        count[z] = sum(count.get(w, 0) for w in space.neighbours(z) if dx[w] == dx[z] - 1)
    return count[y]


# ------------------------------------------------------------ statistics

SAMPLE_COLUMNS = ["sample_id", "n_faces", "V", "radius", "d_xy_bfs", "d_xy_formula",
                  "D", "delta", "medqg_diam"]
SUMMARY_COLUMNS = ["n", "median_radius", "q25", "q75"]


def sample_row(sample_id, pq, delta_scale: float = 1.0) -> dict:
    """Distance statistics of one pointed quadrangulation.

    The radius is the eccentricity of the first source.  With two sources
    the row also holds their distance by BFS and by the label formula, the
    delay gap ``D`` and the median quasi-geodesic diameter at slack
    ``delta = delta_scale * n^(1/4)``.
    """
    q = pq.quad
    gm = GraphMetric(q)
    x = pq.sources[0]
    row = {"sample_id": sample_id, "n_faces": q.n_faces, "V": q.n_vertices,
           "radius": int(gm.row(x).max()), "d_xy_bfs": "", "d_xy_formula": "",
           "D": "", "delta": "", "medqg_diam": ""}
    if pq.k == 2 and pq.delays is not None:
        y = pq.sources[1]
        delta = delta_scale * q.n_faces ** 0.25
        D = pq.delays[1] - pq.delays[0]
        row.update(d_xy_bfs=int(gm.row(x)[y]), d_xy_formula=two_point_distance(forward(pq)),
                   D=D, delta=round(delta, 6),
                   medqg_diam=int(median_quasi_geodesic(gm, x, y, D, delta)[1]))
    return row


def scaling_stats(samples, delta_scale: float = 1.0):
    """Per-sample rows, per-size summary and the log-log slope of the median
    radius against the face count.

    Raises ValueError on an empty batch or when the two routes to the
    two-point distance disagree.
    """
    rows = [sample_row(i, pq, delta_scale) for i, pq in enumerate(samples)]
    if not rows:
        raise ValueError("empty batch")
    for r in rows:
        if r["d_xy_bfs"] != r["d_xy_formula"]:
            raise ValueError(f"two-point distance mismatch in sample {r['sample_id']}")
    summary = summarize_radii(rows)
    return rows, summary, radius_slope(summary)


def grouped_median(values) -> float:
    """Median of integer data read as unit-width classes centred on the
    integers, interpolated inside the class holding the middle.

    The plain sample median of a lattice variable jumps by whole units, which
    swamps a log-log slope over a factor 8 in size; this one varies smoothly.
    """
    x = np.asarray(values)
    if len(x) == 0:
        raise ValueError("median of an empty sample")
    x = np.sort(x)
    mid = x[(len(x) - 1) // 2] if len(x) % 2 else x[len(x) // 2 - 1]
    below = int((x < mid).sum())
    at = int((x == mid).sum())
    return float(mid - 0.5 + (len(x) / 2 - below) / at)


def summarize_radii(rows) -> list[dict]:
    by_n = {}
    for r in rows:
        by_n.setdefault(r["n_faces"], []).append(r["radius"])
    out = []
    for n in sorted(by_n):
        q25, q75 = np.percentile(by_n[n], [25, 75])
        out.append({"n": n, "median_radius": grouped_median(by_n[n]),
                    "q25": float(q25), "q75": float(q75)})
    return out


def radius_slope(summary) -> float | None:
    """Least-squares slope of log median radius against log n."""
    if len(summary) < 2:
        return None
    n = np.log([s["n"] for s in summary])
    r = np.log([s["median_radius"] for s in summary])
    return float(np.polyfit(n, r, 1)[0])
