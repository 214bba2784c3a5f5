"""Combinatorial maps on half-edges.

A map with ``n_half`` half-edges is stored as its vertex rotation ``sigma``.
The edge involution is fixed to ``alpha(h) = h ^ 1`` so half-edges ``2j`` and
``2j + 1`` form edge ``j``.  The face permutation is ``phi = sigma^-1 o alpha``.

A half-edge ``h`` is directed from its tail ``h-`` (the vertex of ``h``) to
its head ``h+`` (the vertex of ``alpha(h)``).  The corner of ``h`` sits between
``h`` and ``sigma(h)``; it belongs to the face containing ``h``.

Vertex and face ids are the cycles of ``sigma`` and ``phi`` numbered in
increasing order of their smallest half-edge.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence


class InvalidMapError(ValueError):
    """Raised when an operation needs a valid map and gets something else."""


def alpha(h: int) -> int:
    return h ^ 1


def _cycles(perm: Sequence[int]) -> tuple[list[int], list[list[int]]]:
    """Cycle id per element and the cycles, ids ordered by smallest element."""
    n = len(perm)
    owner = [-1] * n
    cycles = []
    for start in range(n):
        if owner[start] >= 0:
            continue
        cid = len(cycles)
        cyc = []
        h = start
        while owner[h] < 0:
            owner[h] = cid
            cyc.append(h)
            h = perm[h]
        cycles.append(cyc)
    return owner, cycles


def _is_permutation(perm: Sequence[int]) -> bool:
    n = len(perm)
    seen = [False] * n
    for x in perm:
        if not isinstance(x, int) or x < 0 or x >= n or seen[x]:
            return False
        seen[x] = True
    return True


@dataclass(frozen=True)
class CombinatorialMap:
    """A rooted map given by its vertex rotation.

    Parameters
    ----------
    sigma : sequence of int
        ``sigma[h]`` is the half-edge following ``h`` counterclockwise
        around its vertex.
    root : int
        The root half-edge.

    The constructor does not check anything, so that malformed input can
    still be handed to :func:`validate`.  Everything else assumes a valid map.
    """

    sigma: tuple
    root: int = 0

    def __post_init__(self):
        if not isinstance(self.sigma, tuple):
            object.__setattr__(self, "sigma", tuple(self.sigma))

    @property
    def n_half(self) -> int:
        return len(self.sigma)

    @property
    def n_edges(self) -> int:
        return len(self.sigma) // 2

    @cached_property
    def sigma_inv(self) -> list[int]:
        inv = [0] * self.n_half
        for h, s in enumerate(self.sigma):
            inv[s] = h
        return inv

    @cached_property
    def phi(self) -> list[int]:
        inv = self.sigma_inv
        return [inv[h ^ 1] for h in range(self.n_half)]

    @cached_property
    def phi_inv(self) -> list[int]:
        sig = self.sigma
        return [sig[h] ^ 1 for h in range(self.n_half)]

    @cached_property
    def _vertex_data(self):
        return _cycles(self.sigma)

    @cached_property
    def _face_data(self):
        return _cycles(self.phi)

    @property
    def vertex_of(self) -> list[int]:
        """Vertex id of the tail of each half-edge."""
        return self._vertex_data[0]

    @property
    def vertices(self) -> list[list[int]]:
        """Half-edges around each vertex in ``sigma`` order."""
        return self._vertex_data[1]

    @property
    def face_of(self) -> list[int]:
        return self._face_data[0]

    @property
    def faces(self) -> list[list[int]]:
        """Half-edges along each face in ``phi`` order."""
        return self._face_data[1]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def head(self, h: int) -> int:
        return self.vertex_of[h ^ 1]

    def tail(self, h: int) -> int:
        return self.vertex_of[h]

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @property
    def genus(self) -> int:
        return (2 - self.euler_characteristic) // 2

    def degree(self, v: int) -> int:
        return len(self.vertices[v])

    def face_degree(self, f: int) -> int:
        return len(self.faces[f])

    @cached_property
    def adjacency(self) -> list[list[int]]:
        """Neighbour list per vertex, one entry per half-edge (multi-edges kept)."""
        vof = self.vertex_of
        adj = [[] for _ in range(self.n_vertices)]
        for h in range(self.n_half):
            adj[vof[h]].append(vof[h ^ 1])
        return adj

    def is_connected(self) -> bool:
        if self.n_half == 0:
            return False
        return _reach_all(self.sigma, 0)

    def with_root(self, root: int) -> "CombinatorialMap":
        return CombinatorialMap(self.sigma, root)

    def __repr__(self):
        return (f"CombinatorialMap(n_half={self.n_half}, genus={self.genus}, "
                f"V={self.n_vertices}, F={self.n_faces}, root={self.root})")


def _reach_all(sigma: Sequence[int], start: int) -> bool:
    n = len(sigma)
    seen = [False] * n
    seen[start] = True
    stack = [start]
    count = 1
    while stack:
        h = stack.pop()
        for g in (sigma[h], h ^ 1):
            if not seen[g]:
                seen[g] = True
                count += 1
                stack.append(g)
    return count == n


@dataclass
class ValidationReport:
    """Outcome of :func:`validate`.  ``ok`` is False iff ``errors`` is non-empty."""

    errors: list = field(default_factory=list)
    genus: int | None = None

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self):
        return {"ok": self.ok, "errors": list(self.errors), "genus": self.genus}


def validate(m: CombinatorialMap, labels=None, face_index=None) -> ValidationReport:
    """Check that ``m`` is a connected rooted map and that the optional
    per-vertex ``labels`` and per-face ``face_index`` are well formed."""
    rep = ValidationReport()
    sig = m.sigma
    n = len(sig)
    if n == 0 or n % 2:
        rep.errors.append(f"n_half must be positive and even, got {n}")
        return rep
    if not _is_permutation(sig):
        rep.errors.append("sigma is not a permutation of 0..n_half-1")
        return rep
    if not isinstance(m.root, int) or not 0 <= m.root < n:
        rep.errors.append(f"root {m.root!r} out of range")
    if not m.is_connected():
        rep.errors.append("map is not connected")
        return rep
    chi = m.euler_characteristic
    if chi % 2 or chi > 2:
        rep.errors.append(f"Euler characteristic {chi} is not 2 - 2g")
    else:
        rep.genus = m.genus
    if labels is not None:
        if len(labels) != m.n_vertices:
            rep.errors.append(f"expected {m.n_vertices} labels, got {len(labels)}")
        else:
            vof = m.vertex_of
            for h in range(0, n, 2):
                if abs(labels[vof[h]] - labels[vof[h + 1]]) > 1:
                    rep.errors.append(f"labels differ by more than 1 along edge {h // 2}")
                    break
    if face_index is not None:
        if sorted(face_index) != list(range(1, m.n_faces + 1)):
            rep.errors.append("face_index is not a bijection onto 1..k")
    return rep


def check_valid(m: CombinatorialMap, **kw) -> None:
    rep = validate(m, **kw)
    if not rep.ok:
        raise InvalidMapError("; ".join(rep.errors))


def from_permutations(sigma: Sequence[int], alpha_perm: Sequence[int], root: int = 0):
    """Relabel a map given by arbitrary ``(sigma, alpha)`` so that alpha becomes
    ``h ^ 1``.  Returns the map and the old-to-new relabelling."""
    n = len(sigma)
    new = [-1] * n
    nxt = 0
    for h in range(n):
        if new[h] < 0:
            a = alpha_perm[h]
            if a == h or alpha_perm[a] != h:
                raise InvalidMapError("alpha is not a fixed-point-free involution")
            new[h], new[a] = nxt, nxt + 1
            nxt += 2
    sig = [0] * n
    for h in range(n):
        sig[new[h]] = new[sigma[h]]
    return CombinatorialMap(tuple(sig), new[root]), new


def canonical_relabelling(sigma: Sequence[int], root: int) -> list[int]:
    """Old-to-new half-edge numbering obtained by breadth-first search from
    ``root``.  Two rooted maps are isomorphic iff their relabelled rotations
    coincide."""
    n = len(sigma)
    new = [-1] * n
    order = [root, root ^ 1]
    new[root], new[root ^ 1] = 0, 1
    i = 0
    while i < len(order):
        s = sigma[order[i]]
        if new[s] < 0:
            new[s] = len(order)
            order.append(s)
            new[s ^ 1] = len(order)
            order.append(s ^ 1)
        i += 1
    if len(order) != n:
        raise InvalidMapError("map is not connected")
    return new


def relabel(sigma: Sequence[int], new: Sequence[int]) -> tuple:
    out = [0] * len(sigma)
    for h, s in enumerate(sigma):
        out[new[h]] = new[s]
    return tuple(out)


def canonical_form(m: CombinatorialMap, root: int | None = None) -> tuple:
    """Canonical rotation of ``m`` rooted at ``root`` (the map's root by default)."""
    r = m.root if root is None else root
    return relabel(m.sigma, canonical_relabelling(m.sigma, r))


def canonical_map(m: CombinatorialMap) -> CombinatorialMap:
    return CombinatorialMap(canonical_form(m), 0)


def unrooted_canonical_form(m: CombinatorialMap) -> tuple:
    """Smallest canonical rotation over all rootings."""
    return min(canonical_form(m, r) for r in range(m.n_half))


def automorphism_count(m: CombinatorialMap) -> int:
    """Number of root-changing automorphisms of the unrooted map."""
    base = unrooted_canonical_form(m)
    return sum(canonical_form(m, r) == base for r in range(m.n_half))


def vertex_permutation(old_vertex_of: Sequence[int], new_vertex_of: Sequence[int],
                       new: Sequence[int]) -> list[int]:
    """Map old vertex ids to new vertex ids under a half-edge relabelling."""
    out = [-1] * (max(old_vertex_of) + 1 if old_vertex_of else 0)
    for h, v in enumerate(old_vertex_of):
        if out[v] < 0:
            out[v] = new_vertex_of[new[h]]
    return out


def is_bipartite_quadrangulation(m: CombinatorialMap) -> bool:
    """True iff every face has degree 4 and the vertex graph is 2-colourable."""
    if any(len(f) != 4 for f in m.faces):
        return False
    return bipartite_colouring(m) is not None


def bipartite_colouring(m: CombinatorialMap):
    adj = m.adjacency
    colour = [-1] * m.n_vertices
    for s in range(m.n_vertices):
        if colour[s] >= 0:
            continue
        colour[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if colour[w] < 0:
                    colour[w] = 1 - colour[v]
                    queue.append(w)
                elif colour[w] == colour[v]:
                    return None
    return colour


def bfs_distances(m: CombinatorialMap, source: int) -> list[int]:
    """Graph distances from vertex ``source`` to every vertex (-1 if unreachable)."""
    adj = m.adjacency
    dist = [-1] * m.n_vertices
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        dv = dist[v] + 1
        for w in adj[v]:
            if dist[w] < 0:
                dist[w] = dv
                queue.append(w)
    return dist


def plane_tree(dyck: Iterable[int]) -> CombinatorialMap:
    """Rooted plane tree from a Dyck word of +1/-1 steps.

    The contour follows ``phi`` starting at the root, which is the first
    up-step.  Requires at least one edge.
    """
    steps = list(dyck)
    n = len(steps) // 2
    if n == 0 or len(steps) != 2 * n:
        raise ValueError("need a non-empty Dyck word")
    # half-edge of step i; down steps reuse the edge of the matching up step
    half = [0] * len(steps)
    stack = []
    nxt = 0
    for i, s in enumerate(steps):
        if s > 0:
            half[i] = nxt
            stack.append(nxt)
            nxt += 2
        else:
            if not stack:
                raise ValueError("not a Dyck word")
            half[i] = stack.pop() ^ 1
    if stack:
        raise ValueError("not a Dyck word")
    phi = [0] * (2 * n)
    for i in range(2 * n):
        phi[half[i]] = half[(i + 1) % (2 * n)]
    # sigma = alpha o phi^-1
    sigma = [0] * (2 * n)
    for h in range(2 * n):
        sigma[phi[h]] = h ^ 1
    return CombinatorialMap(tuple(sigma), 0)
