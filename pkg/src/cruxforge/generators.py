"""Graph families used as fixtures and benchmark inputs.

``generate`` parses a compact family string, e.g. ``"random_regular:20,3,7"``,
``"blowup:20:random_regular:60,3,1"`` or ``"complete:8+complete:4"``.
"""

from __future__ import annotations

import itertools
import random

import networkx as nx

from .graph import Graph, GraphError


def complete(n: int) -> Graph:
    return Graph(n, itertools.combinations(range(n), 2))


def complete_bipartite(a: int, b: int) -> Graph:
    return Graph(a + b, ((i, a + j) for i in range(a) for j in range(b)))


def cycle(n: int) -> Graph:
    if n < 3:
        raise GraphError("a cycle needs at least 3 vertices")
    return Graph(n, ((i, (i + 1) % n) for i in range(n)))


def path(n: int) -> Graph:
    return Graph(n, ((i, i + 1) for i in range(n - 1)))


def grid(rows: int, cols: int) -> Graph:
    def vid(r, c):
        return r * cols + c

    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((vid(r, c), vid(r, c + 1)))
            if r + 1 < rows:
                edges.append((vid(r, c), vid(r + 1, c)))
    return Graph(rows * cols, edges)


def hypercube(dim: int) -> Graph:
    n = 1 << dim
    return Graph(n, ((v, v ^ (1 << b)) for v in range(n) for b in range(dim) if v < v ^ (1 << b)))


def petersen() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph(10, outer + spokes + inner)


def star(leaves: int) -> Graph:
    return Graph(leaves + 1, ((0, i) for i in range(1, leaves + 1)))


def random_regular(n: int, d: int, seed: int) -> Graph:
    """Uniform-ish random d-regular graph on n vertices (pairing model with restarts)."""
    if (n * d) % 2:
        raise GraphError(f"no {d}-regular graph on {n} vertices: n*d is odd")
    if not 0 <= d < n:
        raise GraphError(f"need 0 <= d < n, got d={d}, n={n}")
    nxg = nx.random_regular_graph(d, n, seed=seed)
    return Graph(n, nxg.edges())


def gnp(n: int, p: float, seed: int) -> Graph:
    rng = random.Random(seed)
    return Graph(n, ((u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p))


def blowup(base: Graph, factor: int) -> Graph:
    """Replace each vertex by an independent set of ``factor`` vertices and each edge by K_{f,f}.

    Vertex ``x`` of the base becomes ``x*factor .. x*factor + factor - 1``.
    """
    if factor < 1:
        raise GraphError("blow-up factor must be positive")
    edges = []
    for x, y in base.edges():
        for i in range(factor):
            for j in range(factor):
                edges.append((x * factor + i, y * factor + j))
    return Graph(base.n * factor, edges)


def disjoint_union(*graphs: Graph) -> Graph:
    edges = []
    offset = 0
    for g in graphs:
        edges.extend((u + offset, v + offset) for u, v in g.edges())
        offset += g.n
    return Graph(offset, edges)


def attach_path(g: Graph, at: int, length: int) -> Graph:
    """Hang a pendant path with ``length`` new vertices off vertex ``at``."""
    edges = list(g.edges())
    prev = at
    for i in range(length):
        edges.append((prev, g.n + i))
        prev = g.n + i
    return Graph(g.n + length, edges)


def _ints(args: str) -> list[int]:
    return [int(x) for x in args.split(",") if x.strip()]


FAMILIES = {
    "complete": lambda a: complete(*_ints(a)),
    "complete_bipartite": lambda a: complete_bipartite(*_ints(a)),
    "cycle": lambda a: cycle(*_ints(a)),
    "path": lambda a: path(*_ints(a)),
    "grid": lambda a: grid(*_ints(a)),
    "hypercube": lambda a: hypercube(*_ints(a)),
    "petersen": lambda a: petersen(),
    "star": lambda a: star(*_ints(a)),
    "random_regular": lambda a: random_regular(*_ints(a)),
    "gnp": lambda a: _gnp_from(a),
}


def _gnp_from(args: str) -> Graph:
    n, p, seed = args.split(",")
    return gnp(int(n), float(p), int(seed))


def generate(spec: str) -> Graph:
    """Build a graph from a family string.

    Grammar: ``union := term ('+' term)*``; ``term := 'blowup:' factor ':' term |
    name [':' args]``.  Random families take their seed as the last argument.
    """
    spec = spec.strip()
    if "+" in spec:
        return disjoint_union(*(generate(part) for part in spec.split("+")))
    name, _, rest = spec.partition(":")
    if name == "blowup":
        factor, _, base = rest.partition(":")
        return blowup(generate(base), int(factor))
    if name == "disjoint_union":
        raise GraphError("write disjoint unions as 'a+b'")
    try:
        builder = FAMILIES[name]
    except KeyError:
        raise GraphError(f"unknown graph family {name!r}") from None
    try:
        return builder(rest)
    except TypeError as exc:
        raise GraphError(f"bad arguments for {name!r}: {rest!r}") from exc
