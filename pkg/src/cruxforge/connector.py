"""Short connections in expanders.

Everything here is BFS with the smallest vertex id expanded first, so each
result is determined by its inputs and seed.  Functions that can fail return
``None`` (or a result with ``ok=False``) and describe the failure in the
optional ``diag`` dict instead of raising.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .expander import ExpansionParams, rho
from .graph import Ball, Graph, average_degree, ball, bfs_distances
from .structures import Star

TOL = 1e-9


class UnreachableError(ValueError):
    """The requested target cannot be reached in the residual arena."""


@dataclass(frozen=True)
class PathRequest:
    x1: frozenset
    x2: frozenset
    forbidden: frozenset = frozenset()
    length_cap: int | None = None

    def __post_init__(self):
        for name in ("x1", "x2", "forbidden"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if not self.x1 or not self.x2:
            raise ValueError("source and target sets must be non-empty")
        if self.x1 & self.forbidden or self.x2 & self.forbidden:
            raise ValueError("source/target sets must avoid the forbidden set")


def check_path(g: Graph, path, forbidden=frozenset(), cap: int | None = None, through=None,
               ends: tuple | None = None) -> None:
    """Assert that ``path`` is a simple walk in ``g`` obeying every constraint."""
    assert len(path) >= 1, "empty path"
    assert len(set(path)) == len(path), f"path repeats a vertex: {path}"
    for a, b in zip(path, path[1:]):
        assert g.has_edge(a, b), f"non-edge {a}-{b}"
    assert not set(path) & set(forbidden), "path meets the forbidden set"
    if cap is not None:
        assert len(path) - 1 <= cap, f"length {len(path) - 1} exceeds cap {cap}"
    if through is not None:
        assert all(v in through for v in path[1:-1]), "internal vertex outside the through side"
    if ends is not None:
        assert path[0] in ends[0] and path[-1] in ends[1], "path endpoints outside the request sets"


def _bfs_path(g: Graph, sources, targets, allowed) -> list[int] | None:
    """Shortest path from ``sources`` to ``targets``; internal vertices must satisfy ``allowed``."""
    parent: dict[int, int | None] = {}
    queue = deque()
    for s in sorted(sources):
        parent[s] = None
        if s in targets:
            return [s]
        queue.append(s)
    adj = g.adj
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v in parent:
                continue
            if v in targets:
                parent[v] = u
                out = [v]
                while parent[out[-1]] is not None:
                    out.append(parent[out[-1]])
                return out[::-1]
            if allowed(v):
                parent[v] = u
                queue.append(v)
    return None


def lemma_cap(n: int, params: ExpansionParams) -> int:
    """ceil((2/eps) ln^3(15n/k)), at least 1."""
    val = 15 * n / params.k
    if val <= 1:
        return 1
    return max(1, math.ceil(2 / params.epsilon * math.log(val) ** 3 - TOL))


def robust_connect(g: Graph, req: PathRequest, params: ExpansionParams, diag: dict | None = None) -> list[int] | None:
    """Shortest X1-X2 path in G - W, accepted only if no longer than the cap."""
    cap = req.length_cap if req.length_cap is not None else lemma_cap(g.n, params)
    x = min(len(req.x1), len(req.x2))
    budget = rho(x, params) * x / 4
    info = {"cap": cap, "x": x, "w": len(req.forbidden), "w_budget": budget,
            "precondition": len(req.forbidden) <= budget + TOL and x >= params.k}
    forb = req.forbidden
    path = _bfs_path(g, req.x1, req.x2, lambda v: v not in forb)
    if path is None:
        info["reason"] = "disconnected"
    elif len(path) - 1 > cap:
        info["reason"] = "cap"
        info["length"] = len(path) - 1
        path = None
    if diag is not None:
        diag.update(info)
    if path is not None:
        check_path(g, path, forb, cap, ends=(req.x1, req.x2))
    return path


# consecutive shortest paths -------------------------------------------------------

@dataclass(frozen=True)
class ConsecutivePaths:
    """Paths from ``origin``; path i is shortest in the arena minus paths 0..i-1 (origin kept)."""

    g: Graph = field(repr=False, compare=False)
    origin: int
    arena: frozenset
    paths: tuple[tuple[int, ...], ...] = ()

    def used(self, upto: int | None = None) -> frozenset:
        out: set[int] = set()
        for p in self.paths[:upto]:
            out.update(p)
        out.discard(self.origin)
        return frozenset(out)

    def residual(self, i: int | None = None) -> frozenset:
        return self.arena - self.used(i)

    def revalidate(self) -> bool:
        for i, p in enumerate(self.paths):
            res = self.residual(i)
            if p[0] != self.origin or not set(p) <= res:
                return False
            if any(not self.g.has_edge(a, b) for a, b in zip(p, p[1:])):
                return False
            dist = bfs_distances(self.g, [self.origin], allowed=res)
            if dist.get(p[-1]) != len(p) - 1:
                return False
        return True


def extend_consecutive(cp: ConsecutivePaths, target: int) -> ConsecutivePaths:
    res = cp.residual()
    if cp.origin not in cp.arena:
        raise UnreachableError("origin outside the arena")
    if target not in res:
        raise UnreachableError(f"target {target} is not in the residual arena")
    path = _bfs_path(cp.g, [cp.origin], {target}, lambda v: v in res)
    if path is None:
        raise UnreachableError(f"target {target} unreachable from {cp.origin}")
    return ConsecutivePaths(cp.g, cp.origin, cp.arena, cp.paths + (tuple(path),))


@dataclass
class BallGrowth:
    ball: Ball
    radius: int
    size: int
    target: int
    ell_cap: int
    reached: bool


def default_ell_cap(g: Graph, D: int) -> int:
    delta = max(1, g.min_degree)
    return max(1, math.ceil(math.log2(max(2 * D / delta, 1)) - TOL))


def grow_ball_avoiding(g: Graph, v: int, cp: ConsecutivePaths, D: int, ell_cap: int | None = None) -> BallGrowth:
    """Smallest l <= cap with |B^l(v)| >= D in g minus every path vertex but v."""
    cap = default_ell_cap(g, D) if ell_cap is None else ell_cap
    forb = cp.used()
    r = 0
    b = ball(g, [v], 0, forb)
    while b.size < D and r < cap:
        r += 1
        b = ball(g, [v], r, forb)
        if not b.layers[-1]:
            break
    return BallGrowth(b, r, b.size, D, cap, b.size >= D)


# random bipartition ---------------------------------------------------------------

@dataclass(frozen=True)
class Bipartition:
    seed: int
    v1: frozenset
    v2: frozenset
    d1: Fraction = Fraction(0)
    d2: Fraction = Fraction(0)
    attempt: int = 0

    def side(self, which: int) -> frozenset:
        return self.v1 if which == 1 else self.v2

    @property
    def balanced(self) -> bool:
        return self.d1 > 0 and self.d2 > 0

    def to_dict(self) -> dict:
        return {"seed": self.seed, "attempt": self.attempt, "sizes": [len(self.v1), len(self.v2)],
                "d1": float(self.d1), "d2": float(self.d2)}


def _side_degree(g: Graph, side: frozenset) -> Fraction:
    if not side:
        return Fraction(0)
    return Fraction(2 * g.edges_within(side), len(side))


def sample_bipartition(g: Graph, seed: int, retries: int = 5) -> Bipartition:
    """Fair-coin split of V(G); retried with derived seeds until both sides keep d/3."""
    d = average_degree(g) if g.n else Fraction(0)
    part = None
    for attempt in range(max(1, retries)):
        coins = np.random.default_rng([seed, attempt]).random(g.n) < 0.5
        v1 = frozenset(int(v) for v in np.nonzero(coins)[0])
        v2 = frozenset(range(g.n)) - v1
        part = Bipartition(seed, v1, v2, _side_degree(g, v1), _side_degree(g, v2), attempt)
        if 3 * part.d1 >= d and 3 * part.d2 >= d:
            break
    return part


def connect_through(g: Graph, part: Bipartition, req: PathRequest, m: float, side: int = 2,
                    diag: dict | None = None, k: int | None = None, theory: bool = False) -> list[int] | None:
    """Shortest X1-X2 path avoiding W whose internal vertices all lie on one side."""
    cap = req.length_cap if req.length_cap is not None else max(1, math.ceil(2 * m * m - TOL))
    x = min(len(req.x1), len(req.x2))
    info: dict = {"cap": cap, "side": side, "x": x, "w": len(req.forbidden)}
    if k is not None:
        size_ok = x >= k * m ** 9 - TOL
        w_ok = len(req.forbidden) <= x / m ** 11 + TOL
        info["precondition"] = size_ok and w_ok
        if theory and not (size_ok and w_ok):
            info["reason"] = "precondition"
            if diag is not None:
                diag.update(info)
            return None
    through = part.side(side)
    forb = req.forbidden
    path = _bfs_path(g, req.x1, req.x2, lambda v: v in through and v not in forb)
    if path is None:
        reach = _bfs_reach(g, req.x1, lambda v: v in through and v not in forb)
        info["reason"] = "disconnected"
        info["reachable_through"] = len(reach)
    elif len(path) - 1 > cap:
        info["reason"] = "cap"
        info["length"] = len(path) - 1
        path = None
    if diag is not None:
        diag.update(info)
    if path is not None:
        check_path(g, path, forb, cap, through=through, ends=(req.x1, req.x2))
    return path


def _bfs_reach(g: Graph, sources, allowed) -> set[int]:
    seen = set(sources)
    queue = deque(sorted(seen))
    while queue:
        u = queue.popleft()
        for v in g.adj[u]:
            if v not in seen and allowed(v):
                seen.add(v)
                queue.append(v)
    return seen - set(sources)


# expansion tools ------------------------------------------------------------------

@dataclass
class Dichotomy:
    a: bool
    b: bool
    boundary: frozenset
    heavy: frozenset
    a_threshold: float
    b_threshold: float

    @property
    def holds(self) -> bool:
        return self.a or self.b


def heavy_neighbors(g: Graph, u, lam: int) -> frozenset:
    """N_lambda(U): vertices outside U with at least lam neighbours in U."""
    u = frozenset(u)
    count: dict[int, int] = {}
    for x in u:
        for y in g.adj[x]:
            if y not in u:
                count[y] = count.get(y, 0) + 1
    return frozenset(y for y, c in count.items() if c >= lam)


def expansion_dichotomy(g: Graph, u, lam: int, m: float, d: float | None = None) -> Dichotomy:
    """(a) |N(U)| >= d|U|/(lam m) or (b) |N_lam(U)| >= |U|/m; reports both."""
    u = frozenset(u)
    if not u:
        raise ValueError("U must be non-empty")
    if lam < 1 or m <= 0:
        raise ValueError("need lam >= 1 and m > 0")
    d = float(average_degree(g)) if d is None else d
    boundary = frozenset(g.neighborhood(u))
    heavy = heavy_neighbors(g, u, lam)
    ta = d * len(u) / (lam * m)
    tb = len(u) / m
    return Dichotomy(len(boundary) >= ta - TOL, len(heavy) >= tb - TOL, boundary, heavy, ta, tb)


@dataclass
class StarsOrBipartite:
    kind: str  # "stars", "bipartite" or "shortfall"
    stars: list[Star]
    x: frozenset = frozenset()
    h_edges: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)


def stars_or_bipartite(g: Graph, u, w, lam: int, s: float, t: int, m: float) -> StarsOrBipartite:
    """Disjoint t-stars centred in U, or a bipartite H between U and X.

    Phase one greedily packs t-stars with centres in U and leaves outside U and W.
    If fewer than |U|/s appear, phase two scans V - U - W by id and attaches a
    lam-star into U whenever every chosen U-vertex still has H-degree below 2t.
    Success needs |X| >= |U|/(4m).
    """
    u = frozenset(u)
    w = frozenset(w)
    if not u:
        raise ValueError("U must be non-empty")
    diag = {"advisory": {"s>=8m": s >= 8 * m - TOL, "t>=2lam": t >= 2 * lam}}
    used: set[int] = set()
    stars = []
    for c in sorted(u - w):
        leaves = [y for y in g.adj[c] if y not in u and y not in w and y not in used]
        if len(leaves) >= t:
            pick = tuple(leaves[:t])
            used.update(pick)
            stars.append(Star(c, pick))
    diag["stars"] = len(stars)
    diag["star_target"] = len(u) / s
    if len(stars) >= len(u) / s - TOL:
        return StarsOrBipartite("stars", stars, diagnostics=diag)
    hdeg: dict[int, int] = {}
    x: list[int] = []
    h_edges: dict[int, tuple[int, ...]] = {}
    for y in range(g.n):
        if y in u or y in w:
            continue
        room = [z for z in g.adj[y] if z in u and z not in w and hdeg.get(z, 0) < 2 * t]
        if len(room) >= lam:
            pick = tuple(room[:lam])
            for z in pick:
                hdeg[z] = hdeg.get(z, 0) + 1
            x.append(y)
            h_edges[y] = pick
    diag["x"] = len(x)
    diag["x_target"] = len(u) / (4 * m)
    if len(x) >= len(u) / (4 * m) - TOL:
        return StarsOrBipartite("bipartite", stars, frozenset(x), h_edges, diag)
    return StarsOrBipartite("shortfall", stars, frozenset(x), h_edges, diag)


@dataclass
class WellExpanding:
    subset: frozenset
    boundary: int
    ok: bool
    diagnostics: dict = field(default_factory=dict)


def well_expanding_subset(g: Graph, u, kappa: float, m: float, forbidden=frozenset()) -> WellExpanding:
    """Greedy U' in U with |N(U')| >= kappa |U'|; ``ok`` also needs |U'| > |U|/(kappa m)."""
    u = frozenset(u)
    forb = frozenset(forbidden)
    if not u:
        raise ValueError("U must be non-empty")
    chosen: set[int] = set()
    nbr_count: dict[int, int] = {}  # vertex -> neighbours inside chosen

    def gain(x: int) -> int:
        # change in |N(chosen)| when x joins
        g_new = sum(1 for y in g.adj[x] if y not in chosen and y != x and y not in forb and nbr_count.get(y, 0) == 0)
        return g_new - (1 if nbr_count.get(x, 0) > 0 and x not in forb else 0)

    boundary = 0
    pool = set(u)
    while pool:
        best = max(sorted(pool), key=gain)
        gb = gain(best)
        if boundary + gb < kappa * (len(chosen) + 1) - TOL:
            break
        pool.discard(best)
        chosen.add(best)
        boundary += gb
        for y in g.adj[best]:
            nbr_count[y] = nbr_count.get(y, 0) + 1
    target = len(u) / (kappa * m)
    diag = {"size": len(chosen), "target": target, "kappa": kappa}
    if not chosen:
        diag["reason"] = "no single vertex of U expands by kappa"
    ok = bool(chosen) and len(chosen) > target - TOL
    return WellExpanding(frozenset(chosen), boundary, ok, diag)


# sprinkling ----------------------------------------------------------------------

@dataclass
class Sprinkle:
    reached: frozenset
    sample: frozenset
    rounds: int
    ell: int
    p: float
    q: float
    success: bool
    history: list[int] = field(default_factory=list)


def sprinkle_probabilities(m: float) -> tuple[int, float, float]:
    """ell = ceil(m^2), q = 9/20, and p with (1-p)^(ell-1) (1-q) = 1/2."""
    ell = max(1, math.ceil(m * m - TOL))
    q = 9 / 20
    p = 1 - (10 / 11) ** (1 / (ell - 1)) if ell > 1 else 0.0
    return ell, p, q


def sprinkled_ball(g: Graph, seed: int, u, w, m: float) -> Sprinkle:
    """Grow the reachable set round by round through independently sprinkled samples.

    Round i adds every vertex with a neighbour in B_i that has been sampled
    in some earlier round, or in U itself.  Stops as soon as more than half
    of the full sample is reached.
    """
    u = frozenset(u)
    w = frozenset(w)
    ell, p, q = sprinkle_probabilities(m)
    rng = np.random.default_rng(seed)
    probs = np.full(ell, p)
    probs[-1] = q
    draws = rng.random((ell, g.n)) < probs[:, None]
    sample_sets = [frozenset(int(v) for v in np.nonzero(row)[0]) for row in draws]
    sample = frozenset().union(*sample_sets)
    half = len(sample) / 2
    start = u - w
    reached = set(start)
    history = [len(reached)]

    def done() -> bool:
        return sum(1 for v in reached if v in sample) > half

    if done():
        return Sprinkle(frozenset(reached), sample, 0, ell, p, q, True, history)
    cumulative: set[int] = set()
    frontier = set(start)  # vertices allowed to expand next round
    expanded: set[int] = set()
    for i in range(1, ell + 1):
        if i >= 2:
            cumulative |= sample_sets[i - 2]
            frontier |= {v for v in reached if v in cumulative and v not in expanded}
        new = set()
        for x in sorted(frontier - expanded):
            expanded.add(x)
            for y in g.adj[x]:
                if y not in reached and y not in w:
                    new.add(y)
        frontier = set()
        reached |= new
        history.append(len(reached))
        if done():
            return Sprinkle(frozenset(reached), sample, i, ell, p, q, True, history)
    return Sprinkle(frozenset(reached), sample, ell, ell, p, q, False, history)
