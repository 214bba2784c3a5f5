"""Random pointed quadrangulations through the labelled-map encoding.

Every labelled map with ``n`` edges gets weight ``12^-n``.  In the encoding
this weight factorises: each forest of ``r`` trees is a run of fair +-1
coin flips until the walk first hits ``-r`` (critical geometric
Galton-Watson trees), labels move by a uniform step in {-1, 0, 1} along each
tree edge, and every chain walk has uniform steps.  The sampler draws these
pieces and rejects until the walk increments form a potential.  Sizes are
either drawn from their exact masses (the total duration is a convolution
over scheme edges) or left to plain rejection against the window.  Either
way the output is exactly the weighted law restricted to the window; a fair
coin then picks one of the two preimages.

Seeds: sample ``i`` of a run with master seed ``s`` uses the stream
``numpy.random.SeedSequence(s, spawn_key=(i,))``, so results do not depend on
how samples are spread over processes.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .bijection import LabeledMap, backward
from .combmap import CombinatorialMap, plane_tree
from .decomp import EncodedLabeledMap, decode
from .enumeration import catalan, schemes
from .quad import PointedQuad, enumerate_delays


class RejectionBudgetExceeded(RuntimeError):
    pass


@dataclass
class SamplerConfig:
    """Parameters of a sampling run.

    ``tilt`` weights each chain length ``r`` by ``tilt^(r-1)``; 1 (the
    default, critical) gives the plain ``12^-n`` law, values in (0, 1) favour
    short chains and change the law accordingly.  ``vertex_bias`` reweights
    the output by ``V^(vertex_bias - k)``; None keeps the natural marking
    weight.  With ``method="exact"`` sizes are drawn from their exact masses
    (for trees: a size, then a uniform tree of that size), leaving only the
    potential condition on chain walks to rejection; "rejection" grows
    Galton-Watson forests freely and conditions on the window.
    """

    genus: int = 0
    k: int = 1
    faces_min: int = 1
    faces_max: int = 10
    seed: int = 0
    tilt: float = 1.0
    vertex_bias: float | None = None
    method: str = "exact"
    max_tries: int = 10_000_000

    def __post_init__(self):
        if self.faces_min < 1 or self.faces_max < self.faces_min:
            raise ValueError("size window must be non-empty with faces_min >= 1")
        if not 0 < self.tilt <= 1:
            raise ValueError("tilt must lie in (0, 1]")
        if self.k < 1 or self.genus < 0:
            raise ValueError("need k >= 1 and genus >= 0")
        if self.method not in ("exact", "rejection"):
            raise ValueError(f"unknown method {self.method!r}")


def rng_for(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


# --------------------------------------------------------------- forests

def _snake_labels(c, rng) -> tuple:
    """Root label 0 for every tree, uniform steps in {-1, 0, 1} on edges."""
    z = [0]
    stack = [0]          # labels along the current ancestral line
    low = 0
    for t in range(1, len(c)):
        if c[t] > c[t - 1]:
            stack.append(stack[-1] + int(rng.integers(-1, 2)))
        elif c[t] < low:
            low = c[t]
            stack = [0]
        else:
            stack.pop()
        z.append(stack[-1])
    return tuple(z)


def forest_snake(r: int, rng, budget: int):
    """Contour and labels of ``r`` independent critical geometric trees.

    Returns None when the contour duration would exceed ``budget``.
    """
    if r == 0:
        return (0,), (0,)
    c = [0]
    h = 0
    while h > -r:
        if len(c) > budget:          # one more step would exceed the budget
            return None
        h += 1 if rng.random() < 0.5 else -1
        c.append(h)
    return tuple(c), _snake_labels(c, rng)


def uniform_forest(r: int, tau: int, rng):
    """Uniform contour of ``r`` trees with duration ``tau``, plus labels.

    A uniform arrangement of the steps is rotated to one of the ``r``
    starting points from which the walk first reaches ``-r`` at the end.
    """
    if r == 0:
        if tau:
            raise ValueError("an empty forest has duration 0")
        return (0,), (0,)
    if tau < r or (tau - r) % 2:
        raise ValueError(f"no forest of {r} trees has duration {tau}")
    steps = np.array([1] * ((tau - r) // 2) + [-1] * ((tau + r) // 2))
    rng.shuffle(steps)
    walk = np.concatenate([[0], np.cumsum(steps)[:-1]])
    before = np.minimum.accumulate(np.concatenate([[1], walk[:-1]]))
    after = np.minimum.accumulate(walk[::-1])[::-1] + r
    good = np.flatnonzero((walk < before) & (walk < after))
    start = int(good[rng.integers(len(good))])
    rot = np.concatenate([steps[start:], steps[:start]])
    c = (0,) + tuple(int(x) for x in np.cumsum(rot))
    return c, _snake_labels(c, rng)


def uniform_dyck(n: int, rng) -> list[int]:
    """Uniform Dyck word with ``n`` up-steps, by the cycle lemma."""
    steps = np.array([1] * n + [-1] * (n + 1))
    rng.shuffle(steps)
    walk = np.cumsum(steps)
    cut = int(np.argmin(walk)) + 1          # first time the minimum is reached
    rot = np.concatenate([steps[cut:], steps[:cut]])
    return rot[:-1].tolist()


def uniform_labels_on_tree(t: CombinatorialMap, rng) -> list[int]:
    """Root label 0 and independent uniform steps in {-1, 0, 1} along edges."""
    lab = [None] * t.n_vertices
    vof = t.vertex_of
    lab[vof[t.root]] = 0
    phi = t.phi
    h = t.root
    for _ in range(t.n_half):
        u, v = vof[h], vof[h ^ 1]
        if lab[v] is None:
            lab[v] = lab[u] + int(rng.integers(-1, 2))
        h = phi[h]
    return lab


@lru_cache(maxsize=None)
def _planar_size_weights(lo: int, hi: int):
    logs = [math.log(catalan(n)) - n * math.log(4) if n < 500 else
            math.lgamma(2 * n + 1) - 2 * math.lgamma(n + 1) - math.log(n + 1) - n * math.log(4)
            for n in range(lo, hi + 1)]
    top = max(logs)
    w = np.exp(np.array(logs) - top)
    return w / w.sum()


def _vertex_bias_ok(cfg: SamplerConfig, n_vertices: int, rng) -> bool:
    if cfg.vertex_bias is None or cfg.vertex_bias == cfg.k:
        return True
    a = cfg.vertex_bias - cfg.k
    lo = cfg.faces_min + 2 - 2 * cfg.genus
    hi = cfg.faces_max + 2 - 2 * cfg.genus
    ref = hi if a > 0 else max(lo, 1)
    return rng.random() < (n_vertices / ref) ** a


def sample_labeled_tree(cfg: SamplerConfig, rng) -> LabeledMap:
    """Labelled plane tree with weight ``12^-n``, ``n`` edges in the window."""
    if cfg.method == "exact":
        w = _planar_size_weights(cfg.faces_min, cfg.faces_max)
        n = cfg.faces_min + int(rng.choice(len(w), p=w))
        t = plane_tree(uniform_dyck(n, rng))
        return LabeledMap(t, (1,), uniform_labels_on_tree(t, rng))
    for _ in range(cfg.max_tries):
        snake = forest_snake(1, rng, 2 * cfg.faces_max + 1)
        if snake is None:
            continue
        c, z = snake
        n = (len(c) - 2) // 2
        if cfg.faces_min <= n:
            enc = EncodedLabeledMap(None, [], [], [], 0, (c, z))
            return decode(enc, check=False)
    raise RejectionBudgetExceeded("tree size window never hit")


def sample_planar(cfg: SamplerConfig, rng=None) -> PointedQuad:
    """Pointed planar quadrangulation (one source) with faces in the window."""
    if cfg.genus != 0 or cfg.k != 1:
        raise ValueError("sample_planar needs genus 0 and k = 1")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    for _ in range(cfg.max_tries):
        lm = sample_labeled_tree(cfg, rng)
        pq = backward(lm, bool(rng.integers(2)), check=False)
        if _vertex_bias_ok(cfg, pq.quad.n_vertices, rng):
            return pq
    raise RejectionBudgetExceeded("vertex-bias rejection budget exhausted")


# --------------------------------------------------------------- schemes

@dataclass
class SchemeTable:
    """Schemes with their sampling masses for a given window and tilt."""

    schemes: list
    r_max: list
    t_cap: list
    masses: list = field(default_factory=list)

    @property
    def probabilities(self):
        total = sum(self.masses)
        return [m / total for m in self.masses]


def _length_mass(r_max: int, tilt: float) -> float:
    return sum(tilt ** (r - 1) for r in range(1, r_max + 1))


@lru_cache(maxsize=None)
def scheme_table(g: int, k: int, n_max: int, tilt: float) -> SchemeTable:
    """Proposal masses: (sum of chain-length weights)^edges times the cap on
    the root offset, so that accepting the offset with probability
    ``tau / cap`` is exact."""
    items = schemes(g, k)
    r_max, t_cap, masses = [], [], []
    for s in items:
        ne = s.n_edges
        if (g, k) == (0, 2):
            rm, cap = n_max, 2 * n_max - 1
        else:
            rm, cap = n_max - ne + 1, 2 * n_max - (2 * ne - 1)
        r_max.append(rm)
        t_cap.append(cap)
        masses.append(_length_mass(rm, tilt) ** ne * cap if rm >= 1 else 0.0)
    if not any(masses):
        raise ValueError("no scheme fits in the size window")
    return SchemeTable(items, r_max, t_cap, masses)


def _chain_length(r_max: int, tilt: float, rng) -> int:
    if tilt == 1.0:
        return int(rng.integers(1, r_max + 1))
    w = np.array([tilt ** (r - 1) for r in range(1, r_max + 1)])
    return 1 + int(rng.choice(r_max, p=w / w.sum()))


def _walk(r: int, rng) -> tuple:
    steps = rng.integers(-1, 2, size=r)
    return (0,) + tuple(int(x) for x in np.cumsum(steps))


def _is_potential(s: CombinatorialMap, incr) -> bool:
    vof = s.vertex_of
    pot = [None] * s.n_vertices
    pot[vof[s.root]] = 0
    stack = [vof[s.root]]
    while stack:
        v = stack.pop()
        for h in s.vertices[v]:
            u = vof[h ^ 1]
            x = pot[v] + incr[h]
            if pot[u] is None:
                pot[u] = x
                stack.append(u)
            elif pot[u] != x:
                return False
    return True


def _encoding_by_rejection(cfg: SamplerConfig, rng) -> EncodedLabeledMap:
    """Plain rejection: chain lengths uniform up to ``r_max``, forests grown
    until they close, everything thrown away when the size leaves the
    window or the root-offset coin fails."""
    table = scheme_table(cfg.genus, cfg.k, cfg.faces_max, cfg.tilt)
    probs = np.array(table.probabilities)
    planar2 = (cfg.genus, cfg.k) == (0, 2)
    lo, hi = 2 * cfg.faces_min, 2 * cfg.faces_max
    for _ in range(cfg.max_tries):
        i = int(rng.choice(len(probs), p=probs))
        sch = table.schemes[i]
        s = sch.map
        ne = s.n_edges
        rs = [_chain_length(table.r_max[i], cfg.tilt, rng) for _ in range(ne)]
        if sum(rs) > cfg.faces_max:
            continue
        walks = [None] * s.n_half
        for e, r in enumerate(rs):
            w = _walk(r, rng)
            walks[2 * e] = w
            walks[2 * e + 1] = tuple(w[r - t] - w[-1] for t in range(r + 1))
        if planar2:
            if walks[0][-1] != 0:
                continue
        elif not _is_potential(s, [w[-1] for w in walks]):
            continue
        # forests, with the size budget shrinking as we go
        need = [rs[h // 2] for h in range(s.n_half)]
        if planar2:
            need[0] -= 1
        used = 0
        floor = sum(need) + (1 if planar2 else 0)
        cs, zs = [None] * s.n_half, [None] * s.n_half
        tree = None
        ok = True
        if planar2:
            snake = forest_snake(1, rng, hi - floor + 1)
            if snake is None:
                continue
            tree = snake
            used += len(snake[0]) - 1
            floor -= 1
        for h in range(s.n_half):
            floor -= need[h]
            snake = forest_snake(need[h], rng, hi - used - floor)
            if snake is None:
                ok = False
                break
            cs[h], zs[h] = snake
            used += len(snake[0]) - 1
        if not ok or not lo <= used <= hi:
            continue
        tau_root = len(tree[0]) - 1 if planar2 else len(cs[0]) - 1
        if rng.random() * table.t_cap[i] >= tau_root:
            continue
        t_star = int(rng.integers(tau_root))
        return EncodedLabeledMap(sch, walks, cs, zs, t_star, tree)
    raise RejectionBudgetExceeded("rejection budget exhausted")


# ------------------------------------------------------- exact sizes

def _forest_weights(r: int, hi: int) -> np.ndarray:
    """``w[t]`` = probability that ``r`` fair-coin trees have duration ``t``."""
    w = np.zeros(hi + 1)
    if r == 0:
        w[0] = 1.0
        return w
    for t in range(r, hi + 1, 2):
        up, down = (t - r) // 2, (t + r) // 2
        w[t] = math.exp(math.log(r / t) + math.lgamma(t + 1) - math.lgamma(up + 1)
                        - math.lgamma(down + 1) - t * math.log(2))
    return w


def _conv(a, b, hi):
    return np.convolve(a, b)[: hi + 1]


@dataclass
class SizeTables:
    """Duration masses for one chain and its two forests, by chain length.

    ``edge[r]`` is the mass of the total duration of a plain scheme edge with
    chain length ``r``; ``root[r]`` the same for the root edge, whose first
    forest carries the extra factor ``tau`` that pays for the root offset.
    ``power[j]`` is the ``j``-fold convolution of the summed plain masses.
    """

    hi: int
    forests: list
    edge: np.ndarray
    root: np.ndarray
    power: list

    def __post_init__(self):
        self.root_sum = self.root.sum(axis=0)
        self._mass = {}
        self._cum = {}

    def scheme_mass(self, n_edges: int) -> np.ndarray:
        if n_edges not in self._mass:
            self._mass[n_edges] = _conv(self.root_sum, self.power[n_edges - 1], self.hi)
        return self._mass[n_edges]

    def cumulative(self, key) -> list:
        """Cumulative weights of the discrete laws used while drawing sizes,
        cached by ``key``: ("root", edges, total) and ("plain", edges, total)
        split a total between the first edge and the rest, ("total", edges, lo)
        is the total duration from ``lo`` up, ("r", root?, d)
        gives the chain length of an edge of duration ``d``."""
        if key not in self._cum:
            kind, a, b = key
            if kind == "root":
                w = self.root_sum[: b + 1] * self.power[a - 1][b::-1]
            elif kind == "total":
                w = self.scheme_mass(a)[b:]
            elif kind == "plain":
                w = self.power[1][: b + 1] * self.power[a - 1][b::-1]
            else:
                w = (self.root if a else self.edge)[:, b]
            self._cum[key] = np.cumsum(w).tolist()
        return self._cum[key]


@lru_cache(maxsize=None)
def size_tables(hi: int, tilt: float, planar2: bool, max_edges: int) -> SizeTables:
    r_max = hi // 2
    t = np.arange(hi + 1)
    forests = [_forest_weights(r, hi) for r in range(r_max + 2)]
    edge = np.zeros((r_max + 1, hi + 1))
    root = np.zeros((r_max + 1, hi + 1))
    for r in range(1, r_max + 1):
        f = forests[r]
        edge[r] = tilt ** (r - 1) * _conv(f, f, hi)
        if planar2:
            # separate root tree, r - 1 trees on one side, r on the other
            first = _conv(t * forests[1], forests[r - 1], hi)
            root[r] = tilt ** (r - 1) * _conv(first, f, hi)
        else:
            root[r] = tilt ** (r - 1) * _conv(t * f, f, hi)
    plain = edge.sum(axis=0)
    power = [np.eye(1, hi + 1)[0]]
    for _ in range(max_edges):
        power.append(_conv(power[-1], plain, hi))
    return SizeTables(hi, forests, edge, root, power)


def _pick(cum: list, rng) -> int:
    return bisect_right(cum, rng.random() * cum[-1])


def _draw(weights, rng) -> int:
    """Index drawn with probability proportional to ``weights``."""
    c = np.cumsum(weights)
    return int(np.searchsorted(c, rng.random() * c[-1], side="right"))


@lru_cache(maxsize=None)
def exact_scheme_table(g: int, k: int, lo: int, hi: int, tilt: float):
    """Schemes, their size tables and their masses in the window ``[lo, hi]``
    (durations, i.e. twice the edge count)."""
    items = schemes(g, k)
    tables = size_tables(hi, tilt, (g, k) == (0, 2), max(s.n_edges for s in items))
    masses = [float(tables.scheme_mass(s.n_edges)[lo:].sum()) for s in items]
    if not any(masses):
        raise ValueError("no scheme fits in the size window")
    return items, tables, masses


def _encoding_exact(cfg: SamplerConfig, rng) -> EncodedLabeledMap:
    """Draw sizes from their exact joint masses, then uniform forests of
    those sizes; only the potential condition is left to rejection."""
    lo, hi = 2 * cfg.faces_min, 2 * cfg.faces_max
    items, tab, masses = exact_scheme_table(cfg.genus, cfg.k, lo, hi, cfg.tilt)
    planar2 = (cfg.genus, cfg.k) == (0, 2)
    scheme_cum = np.cumsum(masses).tolist()
    for _ in range(cfg.max_tries):
        sch = items[_pick(scheme_cum, rng)]
        s = sch.map
        ne = s.n_edges
        total = lo + _pick(tab.cumulative(("total", ne, lo)), rng)
        # peel off the root edge, then the plain edges one at a time
        durations = [_pick(tab.cumulative(("root", ne, total)), rng)]
        left = total - durations[0]
        for j in range(ne - 1, 0, -1):
            x = _pick(tab.cumulative(("plain", j, left)), rng)
            durations.append(x)
            left -= x
        rs = [_pick(tab.cumulative(("r", e == 0, d)), rng) for e, d in enumerate(durations)]

        # all chain steps at once; walks are only built once they fit
        steps = rng.integers(-1, 2, size=sum(rs))
        starts = np.concatenate([[0], np.cumsum(rs)[:-1]])
        ends = np.add.reduceat(steps, starts).tolist()
        if planar2:
            if ends[0] != 0:
                continue
        elif not _is_potential(s, [x for y in ends for x in (y, -y)]):
            continue
        walks = [None] * s.n_half
        for e, (r, i) in enumerate(zip(rs, starts)):
            w = (0,) + tuple(np.cumsum(steps[i:i + r]).tolist())
            walks[2 * e] = w
            walks[2 * e + 1] = tuple(w[r - t] - w[-1] for t in range(r + 1))

        f = tab.forests
        cs, zs = [None] * s.n_half, [None] * s.n_half
        tree = None
        for e, (r, d) in enumerate(zip(rs, durations)):
            if e == 0 and planar2:
                first = _conv(np.arange(hi + 1) * f[1], f[r - 1], hi)
                x = _draw(first[: d + 1] * f[r][d::-1], rng)
                y = _draw(np.arange(x + 1) * f[1][: x + 1] * f[r - 1][x::-1], rng)
                tree = uniform_forest(1, y, rng)
                sides = ((r - 1, x - y), (r, d - x))
            else:
                w = f[r][: d + 1] * f[r][d::-1]
                x = _draw(np.arange(d + 1) * w if e == 0 else w, rng)
                sides = ((r, x), (r, d - x))
            for h, (rr, tt) in zip((2 * e, 2 * e + 1), sides):
                cs[h], zs[h] = uniform_forest(rr, tt, rng)
        tau_root = len(tree[0]) - 1 if planar2 else len(cs[0]) - 1
        t_star = int(rng.integers(tau_root))
        return EncodedLabeledMap(sch, walks, cs, zs, t_star, tree)
    raise RejectionBudgetExceeded("rejection budget exhausted")


def sample_encoding(cfg: SamplerConfig, rng) -> EncodedLabeledMap:
    """Encoding of a labelled map with weight ``12^-n`` (tilted by ``tilt``)
    and ``n`` edges in the window, for any ``(g, k) != (0, 1)``."""
    if cfg.method == "exact":
        return _encoding_exact(cfg, rng)
    return _encoding_by_rejection(cfg, rng)


def sample_genus(cfg: SamplerConfig, rng=None) -> PointedQuad:
    """Pointed quadrangulation of genus ``g`` with ``k`` sources and delays."""
    if (cfg.genus, cfg.k) == (0, 1):
        return sample_planar(cfg, rng)
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    for _ in range(cfg.max_tries):
        lm = decode(sample_encoding(cfg, rng), check=False)
        pq = backward(lm, bool(rng.integers(2)), check=False)
        if _vertex_bias_ok(cfg, pq.quad.n_vertices, rng):
            return pq
    raise RejectionBudgetExceeded("vertex-bias rejection budget exhausted")


def sample(cfg: SamplerConfig, index: int = 0) -> PointedQuad:
    """Sample number ``index`` of the run described by ``cfg``."""
    return sample_genus(cfg, rng_for(cfg.seed, index))


def sample_labeled(cfg: SamplerConfig, index: int = 0) -> LabeledMap:
    rng = rng_for(cfg.seed, index)
    if (cfg.genus, cfg.k) == (0, 1):
        return sample_labeled_tree(cfg, rng)
    return decode(sample_encoding(cfg, rng), check=False)


def attach_marks(quad: CombinatorialMap, k: int, rng) -> PointedQuad:
    """``k`` independent uniform vertices and a uniform valid delay vector.

    When the marks coincide or no delay vector exists, ``delays`` is None.
    """
    nv = quad.n_vertices
    src = [int(x) for x in rng.integers(nv, size=k)]
    if len(set(src)) < k:
        return PointedQuad(quad, src, None)
    ds = enumerate_delays(quad, src)
    if not ds:
        return PointedQuad(quad, src, None)
    return PointedQuad(quad, src, ds[int(rng.integers(len(ds)))])
