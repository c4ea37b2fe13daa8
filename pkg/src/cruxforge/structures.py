"""Units, webs, and clique-subdivision certificates.

A unit is a star of stars: a core with ``h1`` short branches, each ending at
the centre of an ``h2``-leaf star.  A web is a core with ``h4`` branches that
end at unit cores.  Leaves are the exterior, everything else the interior, and
a web's centre is the set of its own branch vertices.

All vertex ids in these types are root-graph ids.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .graph import Graph
from .io import ParseError


@dataclass(frozen=True)
class Star:
    center: int
    leaves: tuple[int, ...]

    @property
    def vertices(self) -> frozenset:
        return frozenset((self.center, *self.leaves))


@dataclass(frozen=True)
class Unit:
    core: int
    h1: int
    h2: int
    h3: int
    branches: tuple[tuple[int, ...], ...]
    stars: tuple[Star, ...]

    def exterior(self) -> frozenset:
        return frozenset(x for s in self.stars for x in s.leaves)

    def vertices(self) -> frozenset:
        out = {self.core}
        for b in self.branches:
            out.update(b)
        for s in self.stars:
            out.update(s.vertices)
        return frozenset(out)

    def interior(self) -> frozenset:
        return self.vertices() - self.exterior()

    def to_dict(self) -> dict:
        return {
            "core": self.core, "h": [self.h1, self.h2, self.h3],
            "branches": [list(b) for b in self.branches],
            "stars": [{"center": s.center, "leaves": list(s.leaves)} for s in self.stars],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Unit":
        h1, h2, h3 = obj["h"]
        return cls(obj["core"], h1, h2, h3, tuple(tuple(b) for b in obj["branches"]),
                   tuple(Star(s["center"], tuple(s["leaves"])) for s in obj["stars"]))


@dataclass(frozen=True)
class Web:
    core: int
    h4: int
    h5: int
    branches: tuple[tuple[int, ...], ...]
    units: tuple[Unit, ...]

    def center(self) -> frozenset:
        return frozenset(x for b in self.branches for x in b)

    def exterior(self) -> frozenset:
        out: set[int] = set()
        for u in self.units:
            out |= u.exterior()
        return frozenset(out)

    def vertices(self) -> frozenset:
        out = set(self.center())
        for u in self.units:
            out |= u.vertices()
        return frozenset(out)

    def interior(self) -> frozenset:
        return self.vertices() - self.exterior()

    def to_dict(self) -> dict:
        return {"core": self.core, "h": [self.h4, self.h5],
                "branches": [list(b) for b in self.branches],
                "units": [u.to_dict() for u in self.units]}

    @classmethod
    def from_dict(cls, obj: dict) -> "Web":
        h4, h5 = obj["h"]
        return cls(obj["core"], h4, h5, tuple(tuple(b) for b in obj["branches"]),
                   tuple(Unit.from_dict(u) for u in obj["units"]))


@dataclass
class Report:
    ok: bool
    rule: str = ""
    message: str = ""
    vertices: tuple = ()
    stats: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {"ok": self.ok, "rule": self.rule, "message": self.message,
                "vertices": list(self.vertices), "stats": dict(self.stats)}


def _fail(rule: str, message: str, vertices: Iterable[int] = ()) -> Report:
    return Report(False, rule, message, tuple(sorted(set(vertices))))


def _check_path(g: Graph, p: Sequence[int], start: int, end: int, cap: int | None, what: str) -> Report | None:
    if len(p) < 2:
        return _fail("path_length", f"{what} must have length at least 1", p)
    if p[0] != start or p[-1] != end:
        return _fail("path_ends", f"{what} must run from {start} to {end}", (p[0], p[-1]))
    if len(set(p)) != len(p):
        return _fail("path_simple", f"{what} repeats a vertex",
                     [v for v in p if p.count(v) > 1])
    for a, b in zip(p, p[1:]):
        if not (0 <= a < g.n and 0 <= b < g.n) or not g.has_edge(a, b):
            return _fail("path_edge", f"{what} uses non-edge {a}-{b}", (a, b))
    if cap is not None and len(p) - 1 > cap:
        return _fail("path_cap", f"{what} has length {len(p) - 1} > {cap}", p)
    return None


def _internally_disjoint(paths: Sequence[Sequence[int]], shared: int, what: str) -> Report | None:
    seen: dict[int, int] = {}
    for i, p in enumerate(paths):
        for v in p:
            if v == shared:
                continue
            if v in seen:
                return _fail("disjointness", f"{what} {seen[v]} and {i} share vertex {v}", (v,))
            seen[v] = i
    return None


def validate_unit(g: Graph, u: Unit) -> Report:
    if u.h1 < 1:
        return _fail("degenerate", "a unit needs h1 >= 1")
    if u.h2 < 0 or u.h3 < 1:
        return _fail("degenerate", "need h2 >= 0 and h3 >= 1")
    if len(u.branches) != u.h1 or len(u.stars) != u.h1:
        return _fail("count", f"expected {u.h1} branches and stars, got {len(u.branches)}/{len(u.stars)}")
    for i, (b, s) in enumerate(zip(u.branches, u.stars)):
        bad = _check_path(g, b, u.core, s.center, u.h3, f"branch {i}")
        if bad is not None:
            return bad
    bad = _internally_disjoint(u.branches, u.core, "branches")
    if bad is not None:
        return bad
    branch_vertices = {v for b in u.branches for v in b}
    owner: dict[int, int] = {}
    for i, s in enumerate(u.stars):
        if len(s.leaves) != u.h2 or len(set(s.leaves)) != u.h2:
            return _fail("star_size", f"star {i} needs {u.h2} distinct leaves", s.leaves)
        for x in s.leaves:
            if not (0 <= x < g.n) or not g.has_edge(s.center, x):
                return _fail("star_edge", f"leaf {x} not adjacent to centre {s.center}", (x, s.center))
            if x in branch_vertices:
                return _fail("leaf_on_branch", f"leaf {x} lies on a branch", (x,))
            if x in owner:
                return _fail("star_disjointness", f"stars {owner[x]} and {i} share leaf {x}", (x,))
            owner[x] = i
    return Report(True, stats={"vertices": len(u.vertices()), "exterior": len(u.exterior())})


def validate_web(g: Graph, w: Web) -> Report:
    if w.h4 < 1:
        return _fail("degenerate", "a web needs h4 >= 1")
    if len(w.branches) != w.h4 or len(w.units) != w.h4:
        return _fail("count", f"expected {w.h4} branches and units, got {len(w.branches)}/{len(w.units)}")
    shape = None
    for i, (b, un) in enumerate(zip(w.branches, w.units)):
        bad = _check_path(g, b, w.core, un.core, w.h5, f"web branch {i}")
        if bad is not None:
            return bad
        rep = validate_unit(g, un)
        if not rep:
            rep.message = f"unit {i}: {rep.message}"
            return rep
        if shape is None:
            shape = (un.h1, un.h2, un.h3)
        elif shape != (un.h1, un.h2, un.h3):
            return _fail("unit_shape", f"unit {i} has parameters {(un.h1, un.h2, un.h3)}, expected {shape}")
    bad = _internally_disjoint(w.branches, w.core, "web branches")
    if bad is not None:
        return bad
    center = w.center()
    seen: dict[int, int] = {}
    for i, un in enumerate(w.units):
        ext = un.exterior()
        for v in sorted(un.vertices()):
            if v in seen:
                return _fail("unit_disjointness", f"units {seen[v]} and {i} share vertex {v}", (v,))
            seen[v] = i
            if v != un.core and v in center:
                if v in ext:
                    return _fail("ext_ctr_overlap", f"exterior vertex {v} lies on a web branch", (v,))
                return _fail("unit_branch_overlap", f"unit vertex {v} lies on a web branch", (v,))
    ext, inn = w.exterior(), w.interior()
    assert not ext & inn and center <= inn
    return Report(True, stats={"vertices": len(w.vertices()), "exterior": len(ext), "center": len(center)})


# certificates ---------------------------------------------------------------------

@dataclass
class SubdivisionCertificate:
    t: int
    branch: tuple[int, ...]
    paths: dict[tuple[int, int], tuple[int, ...]]

    @classmethod
    def identity(cls, vertices: Sequence[int]) -> "SubdivisionCertificate":
        vs = tuple(vertices)
        return cls(len(vs), vs, {(i, j): (vs[i], vs[j]) for i, j in itertools.combinations(range(len(vs)), 2)})

    def canonical(self) -> "SubdivisionCertificate":
        order = sorted(range(self.t), key=lambda i: self.branch[i])
        new_index = {old: new for new, old in enumerate(order)}
        paths = {}
        for (i, j), p in self.paths.items():
            a, b = new_index[i], new_index[j]
            if a > b:
                a, b, p = b, a, tuple(reversed(p))
            paths[(a, b)] = tuple(p)
        return SubdivisionCertificate(self.t, tuple(self.branch[i] for i in order), dict(sorted(paths.items())))

    def to_json(self) -> dict:
        c = self.canonical()
        return {"t": c.t, "branch": list(c.branch),
                "paths": {f"{i}-{j}": list(p) for (i, j), p in c.paths.items()}}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, obj: dict) -> "SubdivisionCertificate":
        try:
            paths = {}
            for key, p in obj["paths"].items():
                i, j = (int(x) for x in key.split("-"))
                paths[(i, j)] = tuple(int(v) for v in p)
            return cls(int(obj["t"]), tuple(int(v) for v in obj["branch"]), paths)
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ParseError(f"bad certificate JSON: {exc}") from exc

    def max_path_length(self) -> int:
        return max((len(p) - 1 for p in self.paths.values()), default=0)

    def vertices_used(self) -> frozenset:
        out = set(self.branch)
        for p in self.paths.values():
            out.update(p)
        return frozenset(out)


def verify_certificate(g: Graph, cert: SubdivisionCertificate) -> Report:
    """Check that ``cert`` is a TK_t in ``g``; the first violation is reported."""
    t = cert.t
    if t < 0 or len(cert.branch) != t:
        return _fail("branch_count", f"need {t} branch vertices, got {len(cert.branch)}")
    if len(set(cert.branch)) != t:
        return _fail("branch_distinct", "branch vertices repeat", cert.branch)
    for v in cert.branch:
        if not 0 <= v < g.n:
            return _fail("range", f"vertex {v} outside the graph", (v,))
    want = set(itertools.combinations(range(t), 2))
    got = set(cert.paths)
    if got != want:
        extra = sorted(got - want)
        missing = sorted(want - got)
        return _fail("path_count", f"path keys wrong: missing {missing[:3]}, unexpected {extra[:3]}")
    branch = set(cert.branch)
    owner: dict[int, tuple[int, int]] = {}
    for key in sorted(cert.paths):
        p = cert.paths[key]
        i, j = key
        for v in p:
            if not 0 <= v < g.n:
                return _fail("range", f"vertex {v} outside the graph", (v,))
        bad = _check_path(g, p, cert.branch[i], cert.branch[j], None, f"path {i}-{j}")
        if bad is not None:
            return bad
        for v in p[1:-1]:
            if v in branch:
                return _fail("internal_branch", f"path {i}-{j} passes branch vertex {v}", (v,))
            if v in owner:
                a, b = owner[v]
                return _fail("disjointness", f"paths {a}-{b} and {i}-{j} share vertex {v}", (v,))
            owner[v] = key
    return Report(True, stats={"t": t, "max_path_length": cert.max_path_length(),
                               "vertices_used": len(branch) + len(owner)})


# exhaustive search ----------------------------------------------------------------

@dataclass
class SearchResult:
    certificate: SubdivisionCertificate | None
    budget_exhausted: bool
    nodes: int

    @property
    def found(self) -> bool:
        return self.certificate is not None


def find_subdivision_bruteforce(g: Graph, t: int, budget: int = 2_000_000) -> SearchResult:
    """Search every branch set and every system of connecting paths for a TK_t.

    Adjacent branch pairs are joined by their edge outright: an edge consumes no
    interior vertex, so this never loses a solution.  ``budget`` bounds the
    number of search nodes; when it runs out the result says so.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    nodes = 0
    if t <= 1:
        return SearchResult(SubdivisionCertificate.identity(range(t)) if t <= g.n else None, False, 0)
    cands = [v for v in range(g.n) if g.degree(v) >= t - 1]
    adj = g.adj
    exhausted = False

    def paths_between(a: int, b: int, blocked: set[int]):
        # simple a-b paths whose interior avoids ``blocked``
        on_path = {a}

        def dfs(u: int, trail: list[int]):
            nonlocal nodes, exhausted
            for v in adj[u]:
                if exhausted:
                    return
                nodes += 1
                if nodes > budget:
                    exhausted = True
                    return
                if v == b:
                    yield trail + [b]
                elif v not in blocked and v not in on_path:
                    on_path.add(v)
                    yield from dfs(v, trail + [v])
                    on_path.discard(v)

        yield from dfs(a, [a])

    for combo in itertools.combinations(cands, t):
        if exhausted:
            break
        bset = set(combo)
        pairs = list(itertools.combinations(range(t), 2))
        fixed = {}
        open_pairs = []
        for i, j in pairs:
            if g.has_edge(combo[i], combo[j]):
                fixed[(i, j)] = (combo[i], combo[j])
            else:
                open_pairs.append((i, j))
        need = [0] * t
        for i, j in open_pairs:
            need[i] += 1
            need[j] += 1
        if any(sum(1 for x in adj[combo[i]] if x not in bset) < need[i] for i in range(t)):
            continue
        used: set[int] = set()
        chosen: dict[tuple[int, int], tuple[int, ...]] = {}

        def solve(idx: int) -> bool:
            if idx == len(open_pairs):
                return True
            i, j = open_pairs[idx]
            blocked = bset | used
            for p in paths_between(combo[i], combo[j], blocked):
                inner = p[1:-1]
                used.update(inner)
                chosen[(i, j)] = tuple(p)
                if solve(idx + 1):
                    return True
                used.difference_update(inner)
                del chosen[(i, j)]
                if exhausted:
                    return False
            return False

        if solve(0):
            cert = SubdivisionCertificate(t, tuple(combo), {**fixed, **chosen})
            return SearchResult(cert, False, nodes)
    return SearchResult(None, exhausted, nodes)
