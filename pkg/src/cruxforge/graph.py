"""Simple undirected graphs, balls, and induced subgraphs.

Vertices are dense integers ``0..n-1``.  Every graph carries ``labels``, the
root-graph id of each local vertex, so structures built inside induced
subgraphs can always be reported against the original input.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

VertexSet = frozenset


class GraphError(ValueError):
    """Raised for malformed graph data (self-loops, parallel edges, bad ids)."""


class Graph:
    """Immutable simple undirected graph.

    Parameters
    ----------
    n : int
        Number of vertices.
    edges : iterable of (u, v)
        Undirected edges; order inside a pair is irrelevant.
    labels : sequence of int, optional
        Root-graph id of every vertex. Defaults to the identity.
    """

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = (), labels: Sequence[int] | None = None):
        if n < 0:
            raise GraphError("vertex count must be non-negative")
        nbrs: list[set[int]] = [set() for _ in range(n)]
        count = 0
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if v in nbrs[u]:
                raise GraphError(f"duplicate edge ({min(u, v)}, {max(u, v)})")
            nbrs[u].add(v)
            nbrs[v].add(u)
            count += 1
        self._n = n
        self._m = count
        self._adj = tuple(tuple(sorted(s)) for s in nbrs)
        if labels is None:
            self._labels = tuple(range(n))
        else:
            if len(labels) != n:
                raise GraphError("labels must have one entry per vertex")
            self._labels = tuple(int(x) for x in labels)

    # basic accessors -----------------------------------------------------
    @property
    def n(self) -> int:
        return self._n

    @property
    def m(self) -> int:
        """Number of edges, e(G)."""
        return self._m

    @property
    def adj(self) -> tuple[tuple[int, ...], ...]:
        return self._adj

    @property
    def labels(self) -> tuple[int, ...]:
        return self._labels

    def __len__(self) -> int:
        return self._n

    def __repr__(self) -> str:
        return f"Graph(n={self._n}, m={self._m})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._n == other._n and self._adj == other._adj and self._labels == other._labels

    def __hash__(self) -> int:
        return hash((self._n, self._adj))

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    @cached_property
    def nbr_sets(self) -> tuple[frozenset, ...]:
        return tuple(frozenset(a) for a in self._adj)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.nbr_sets[u]

    def edges(self) -> list[tuple[int, int]]:
        """Edges as sorted ``(u, v)`` pairs with ``u < v``."""
        return [(u, v) for u in range(self._n) for v in self._adj[u] if u < v]

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self._adj)

    @property
    def max_degree(self) -> int:
        return max(self.degrees, default=0)

    @property
    def min_degree(self) -> int:
        return min(self.degrees, default=0)

    @property
    def vertices(self) -> frozenset:
        return frozenset(range(self._n))

    def root(self, v: int) -> int:
        return self._labels[v]

    def to_root(self, seq: Iterable[int]) -> list[int]:
        return [self._labels[v] for v in seq]

    @cached_property
    def masks(self) -> tuple[int, ...]:
        """Neighbourhood of each vertex as an int bitmask."""
        out = []
        for a in self._adj:
            mask = 0
            for u in a:
                mask |= 1 << u
            out.append(mask)
        return tuple(out)

    def edges_within(self, s: Iterable[int]) -> int:
        """e(G[s])."""
        s = s if isinstance(s, (set, frozenset)) else set(s)
        return sum(1 for u in s for v in self._adj[u] if v in s) // 2

    def neighborhood(self, w: Iterable[int], forbidden: Iterable[int] = ()) -> set[int]:
        """N(W) = (union of N(u), u in W) minus W, computed in G - forbidden."""
        w = w if isinstance(w, (set, frozenset)) else set(w)
        forb = forbidden if isinstance(forbidden, (set, frozenset)) else set(forbidden)
        out: set[int] = set()
        for u in w:
            for v in self._adj[u]:
                if v not in w and v not in forb:
                    out.add(v)
        return out


def average_degree(g: Graph) -> Fraction:
    """d(G) = 2 e(G) / v(G) as an exact fraction."""
    if g.n < 1:
        raise GraphError("average degree of the empty graph is undefined")
    return Fraction(2 * g.m, g.n)


def density_at_least(edges: int, order: int, ratio: Fraction, base_edges: int, base_order: int) -> bool:
    """Exact test of ``2*edges/order >= ratio * 2*base_edges/base_order``."""
    ratio = Fraction(ratio)
    if order <= 0:
        return False
    return edges * base_order * ratio.denominator >= ratio.numerator * base_edges * order


@dataclass(frozen=True)
class Ball:
    """BFS layers around a centre set; ``layers[i]`` is N^i(W)."""

    center: frozenset
    radius: int
    layers: tuple[frozenset, ...]

    @cached_property
    def vertices(self) -> frozenset:
        out: set[int] = set()
        for layer in self.layers:
            out |= layer
        return frozenset(out)

    @property
    def size(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def __contains__(self, v: int) -> bool:
        return any(v in layer for layer in self.layers)


def ball(g: Graph, w: Iterable[int], r: int, forbidden: Iterable[int] = frozenset()) -> Ball:
    """Ball of radius ``r`` around ``w`` in ``g - forbidden``.

    Layers obey N^{i+1} = N(N^i) minus N^{i-1}; empty trailing layers are kept so
    ``len(layers) == r + 1``.
    """
    w = frozenset(w)
    forb = forbidden if isinstance(forbidden, (set, frozenset)) else frozenset(forbidden)
    if w & forb:
        raise ValueError("centre set intersects the forbidden set")
    if r < 0:
        raise ValueError("radius must be non-negative")
    seen = set(w)
    layers = [w]
    frontier = sorted(w)
    adj = g.adj
    for _ in range(r):
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in seen and v not in forb:
                    seen.add(v)
                    nxt.append(v)
        layers.append(frozenset(nxt))
        frontier = sorted(nxt)
    return Ball(center=w, radius=r, layers=tuple(layers))


def induced(g: Graph, s: Iterable[int]) -> Graph:
    """G[s] with local ids in increasing order of ``s``; labels point to root ids."""
    verts = sorted(set(s))
    for v in verts:
        if not 0 <= v < g.n:
            raise GraphError(f"vertex {v} not in graph")
    index = {v: i for i, v in enumerate(verts)}
    edges = [(index[u], index[v]) for u in verts for v in g.adj[u] if v in index and u < v]
    return Graph(len(verts), edges, labels=[g.labels[v] for v in verts])


def remove_vertices(g: Graph, w: Iterable[int]) -> Graph:
    """G - W."""
    w = set(w)
    return induced(g, (v for v in range(g.n) if v not in w))


def bfs_distances(g: Graph, sources: Iterable[int], allowed: frozenset | set | None = None,
                  limit: int | None = None) -> dict[int, int]:
    """Hop distances from ``sources`` inside ``allowed`` (all vertices when None)."""
    dist = {}
    queue = deque()
    for s in sorted(set(sources)):
        if allowed is None or s in allowed:
            dist[s] = 0
            queue.append(s)
    adj = g.adj
    while queue:
        u = queue.popleft()
        du = dist[u]
        if limit is not None and du >= limit:
            continue
        for v in adj[u]:
            if v not in dist and (allowed is None or v in allowed):
                dist[v] = du + 1
                queue.append(v)
    return dist


def components(g: Graph, allowed: Iterable[int] | None = None) -> list[frozenset]:
    """Connected components (restricted to ``allowed``), ordered by smallest vertex."""
    pool = set(range(g.n)) if allowed is None else set(allowed)
    out = []
    for s in sorted(pool):
        if s not in pool:
            continue
        comp = bfs_distances(g, [s], allowed=pool)
        pool -= comp.keys()
        out.append(frozenset(comp))
    return out


def peel_min_degree(g: Graph, within: Iterable[int] | None = None) -> frozenset:
    """Delete vertices of degree < d(H)/2 one at a time, smallest degree then smallest id first.

    Deleting such a vertex never lowers the average degree, so the result keeps
    d(H) at least that of the starting set and ends with delta(H) >= d(H)/2.
    """
    alive = set(range(g.n)) if within is None else set(within)
    deg = {v: sum(1 for u in g.adj[v] if u in alive) for v in alive}
    edges = sum(deg.values()) // 2
    heap = [(d, v) for v, d in deg.items()]
    heapq.heapify(heap)
    while heap and alive:
        d, v = heap[0]
        if v not in alive or deg[v] != d:
            heapq.heappop(heap)
            continue
        # delete v iff 2*deg(v) < d(H) = 2e/|H|  <=>  deg(v)*|H| < e
        if d * len(alive) >= edges:
            break
        heapq.heappop(heap)
        alive.remove(v)
        edges -= d
        for u in g.adj[v]:
            if u in alive:
                deg[u] -= 1
                heapq.heappush(heap, (deg[u], u))
        del deg[v]
    return frozenset(alive)


# subset tables for exhaustive checks on small graphs --------------------------

def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a)


def neighbor_union_table(g: Graph) -> np.ndarray:
    """``table[S]`` = bitmask of the union of N(v) over v in S, for every S."""
    if g.n > 24:
        raise ValueError("subset tables are limited to n <= 24")
    table = np.zeros(1 << g.n, dtype=np.uint32)
    for i, mask in enumerate(g.masks):
        half = 1 << i
        table[half:2 * half] = table[:half] | np.uint32(mask)
    return table


def edge_count_table(g: Graph) -> np.ndarray:
    """``table[S]`` = e(G[S]) for every subset S."""
    if g.n > 24:
        raise ValueError("subset tables are limited to n <= 24")
    table = np.zeros(1 << g.n, dtype=np.int32)
    for i, mask in enumerate(g.masks):
        half = 1 << i
        lower = np.arange(half, dtype=np.uint32)
        table[half:2 * half] = table[:half] + _popcount(lower & np.uint32(mask)).astype(np.int32)
    return table


def popcounts(n: int) -> np.ndarray:
    return _popcount(np.arange(1 << n, dtype=np.uint32)).astype(np.int32)


def mask_to_set(mask: int) -> frozenset:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)
