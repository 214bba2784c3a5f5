"""Bipartite quadrangulations with marked sources and delays.

Given sources ``x_1..x_k`` and integer delays ``d_1..d_k`` the label of a
vertex is ``min_i (d_i + dist(x, x_i))``.  Every edge joins labels that differ
by exactly one, so each edge has a descending orientation.  Following the
leftmost descending path from a half-edge ends at some source, and that
source colours the half-edge.  The colour classes are the Voronoi tiles.
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
    bfs_distances,
    is_bipartite_quadrangulation,
    validate,
)


@dataclass(frozen=True)
class PointedQuad:
    """A rooted bipartite quadrangulation with ``k`` sources and delays.

    ``sources`` are vertex ids of ``quad``.  ``delays`` are normalised so
    that ``delays[0] == 0``.
    """

    quad: CombinatorialMap
    sources: tuple
    delays: tuple | None

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if self.delays is not None:
            object.__setattr__(self, "delays", tuple(self.delays))

    @property
    def k(self) -> int:
        return len(self.sources)

    @property
    def n_faces(self) -> int:
        return self.quad.n_faces

    @cached_property
    def source_distances(self) -> list[list[int]]:
        return [bfs_distances(self.quad, x) for x in self.sources]

    @cached_property
    def labels(self) -> list[int]:
        return label_function(self)


def label_function(pq: PointedQuad) -> list[int]:
    """Per-vertex labels ``min_i (d_i + dist(x, x_i))``."""
    dists = pq.source_distances
    out = list(dists[0])
    for d, dist in zip(pq.delays[1:], dists[1:]):
        for v, dv in enumerate(dist):
            if d + dv < out[v]:
                out[v] = d + dv
    return out


def delay_constraints_hold(pair_dist, delays) -> bool:
    k = len(delays)
    for i in range(k):
        for j in range(i + 1, k):
            gap = pair_dist[i][j]
            diff = delays[i] - delays[j]
            if abs(diff) >= gap or (gap + diff) % 2:
                return False
    return True


def _pair_distances(quad: CombinatorialMap, sources: Sequence[int]):
    dists = [bfs_distances(quad, x) for x in sources]
    return [[dists[i][x] for x in sources] for i in range(len(sources))]


def enumerate_delays(quad: CombinatorialMap, sources: Sequence[int]) -> list[tuple]:
    """All valid delay vectors with first entry 0, in lexicographic order.

    A vector is valid when ``|d_i - d_j| < dist(x_i, x_j)`` and
    ``dist(x_i, x_j) + d_i - d_j`` is even for all ``i != j``.
    """
    k = len(sources)
    if k == 0:
        return []
    if len(set(sources)) < k:
        return []
    pd = _pair_distances(quad, sources)
    out = []
    cur = [0]

    def extend(i):
        if i == k:
            out.append(tuple(cur))
            return
        gap = pd[0][i]
        for d in range(-gap + 1, gap):
            if (gap + d) % 2:
                continue
            ok = True
            for j in range(1, i):
                g = pd[j][i]
                diff = d - cur[j]
                if abs(diff) >= g or (g + diff) % 2:
                    ok = False
                    break
            if ok:
                cur.append(d)
                extend(i + 1)
                cur.pop()

    extend(1)
    return out


def validate_pointed(pq: PointedQuad) -> ValidationReport:
    rep = validate(pq.quad)
    if not rep.ok:
        return rep
    if not is_bipartite_quadrangulation(pq.quad):
        rep.errors.append("not a bipartite quadrangulation")
    nv = pq.quad.n_vertices
    if pq.k == 0:
        rep.errors.append("need at least one source")
        return rep
    if any(not 0 <= x < nv for x in pq.sources):
        rep.errors.append("source out of range")
        return rep
    if len(set(pq.sources)) != pq.k:
        rep.errors.append("sources are not distinct")
        return rep
    if pq.delays is None:
        rep.errors.append("empty delay set")
    elif len(pq.delays) != pq.k:
        rep.errors.append("one delay per source required")
    elif pq.delays[0] != 0:
        rep.errors.append("delays must be normalised with d_1 = 0")
    elif not delay_constraints_hold(_pair_distances(pq.quad, pq.sources), pq.delays):
        rep.errors.append("delays violate the strict triangle or parity condition")
    return rep


def check_pointed(pq: PointedQuad) -> None:
    rep = validate_pointed(pq)
    if not rep.ok:
        raise InvalidMapError("; ".join(rep.errors))


@dataclass
class VoronoiPartition:
    """Descending half-edges and their tile colours.

    ``descending[h]`` says whether half-edge ``h`` goes down by one label.
    ``colour[h]`` is the 1-based source index for descending half-edges and
    0 otherwise.  ``next_on_path[h]`` is the next half-edge of the leftmost
    descending path (-1 once a source is reached).
    """

    labels: list
    descending: list
    colour: list
    next_on_path: list

    def tile(self, i: int) -> list[int]:
        return [h for h, c in enumerate(self.colour) if c == i]


def voronoi_tiles(pq: PointedQuad) -> VoronoiPartition:
    q = pq.quad
    lab = pq.labels
    vof = q.vertex_of
    sig_inv = q.sigma_inv
    n = q.n_half
    desc = [lab[vof[h ^ 1]] == lab[vof[h]] - 1 for h in range(n)]
    for h in range(0, n, 2):
        if desc[h] == desc[h + 1]:
            raise InvalidMapError("labels do not differ by one along an edge")
    src_index = {x: i + 1 for i, x in enumerate(pq.sources)}
    nxt = [-1] * n
    for h in range(n):
        if not desc[h]:
            continue
        g = sig_inv[h ^ 1]
        while not desc[g] and g != h ^ 1:
            g = sig_inv[g]
        nxt[h] = g if desc[g] else -1
    colour = [0] * n
    for h in sorted((h for h in range(n) if desc[h]), key=lambda h: lab[vof[h]]):
        g = nxt[h]
        if g < 0:
            head = vof[h ^ 1]
            if head not in src_index:
                raise InvalidMapError("descending path stops at a non-source vertex")
            colour[h] = src_index[head]
        else:
            colour[h] = colour[g]
    return VoronoiPartition(lab, desc, colour, nxt)


def tile_degree_census(pq: PointedQuad):
    """Per tile: number of descending half-edges and the histogram of the
    distance from their tails to the tile's source."""
    part = voronoi_tiles(pq)
    vof = pq.quad.vertex_of
    dists = pq.source_distances
    sizes = [0] * pq.k
    hist = [Counter() for _ in range(pq.k)]
    for h, c in enumerate(part.colour):
        if c:
            sizes[c - 1] += 1
            hist[c - 1][dists[c - 1][vof[h]]] += 1
    return sizes, [dict(sorted(hc.items())) for hc in hist]


def root_is_descending(pq: PointedQuad) -> bool:
    lab = pq.labels
    vof = pq.quad.vertex_of
    r = pq.quad.root
    return lab[vof[r ^ 1]] < lab[vof[r]]
