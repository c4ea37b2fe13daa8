"""End-to-end construction of clique subdivisions.

``dispatch`` follows the case analysis of the main theorem: extract an
expander, route very dense inputs to a direct fallback, send sparse inputs to
the web builder without a random split, and otherwise compare the beta-crux
with ``d^2 m^b`` to decide between the non-extremal and extremal branches.

Webs are built one at a time (units in the through side, a ball around a core
in the other side, consecutive shortest paths joined to unit leaves), then
linked pairwise by short paths between unit cores.  Every certificate is
checked against the input graph before it leaves this module.
"""

from __future__ import annotations

import itertools
import json
import math
import random
import time
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction

import networkx as nx

from .connector import (
    Bipartition,
    ConsecutivePaths,
    PathRequest,
    _bfs_path,
    connect_through,
    extend_consecutive,
    sample_bipartition,
)
from .crux import as_fraction, crux_bounded, crux_exact
from .expander import ExpansionParams, ExtractionError, ExpanderWitness, extract_expander
from .graph import Graph, average_degree, ball, induced, peel_min_degree
from .structures import (
    Star,
    SubdivisionCertificate,
    Unit,
    Web,
    validate_unit,
    validate_web,
    verify_certificate,
)

SCHEMA_VERSION = 1
TOL = 1e-9


# configuration ---------------------------------------------------------------------

def _sqrt_fraction(x: Fraction) -> Fraction | None:
    num, den = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if num * num == x.numerator and den * den == x.denominator:
        return Fraction(num, den)
    return None


@dataclass
class PipelineConfig:
    """All knobs of a construction run.

    Desk mode keeps the control flow of the proof but replaces its asymptotic
    counts by the structural parameters below; ``None`` means "derive from the
    graph".  Theory mode uses the proof's values and refuses when their
    preconditions fail.
    """

    alpha: Fraction = Fraction(1, 400)
    beta: Fraction | None = None
    eps: float = 0.1
    k: float | None = None
    mode: str = "desk"
    seed: int = 0
    retries: int = 5
    T: float = 16.0
    c: float = 0.5
    p: float | None = None
    x: int = 14
    sparse_exponent: float | None = None
    crux_exponent: float | None = None
    target_t: int | None = None
    h1: int | None = None
    h2: int | None = None
    h3: int | None = None
    h4: int | None = None
    h5: int | None = None
    unit_count: int | None = None
    web_count: int | None = None
    star_leaves: int | None = None
    ell: int | None = None
    q_cap: int | None = None
    link_cap: int | None = None
    bad_units: int | None = None
    safety_net: bool | None = None
    bounded_degree: bool = False
    degree_cap: int | None = None
    crux_budget: int = 200_000
    fallback_tries: int = 3
    extract_trials: int = 100

    def __post_init__(self):
        if self.mode not in ("desk", "theory"):
            raise ValueError(f"mode must be 'desk' or 'theory', got {self.mode!r}")
        self.alpha = as_fraction(self.alpha)
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        root = _sqrt_fraction(4 * self.alpha)
        if self.beta is None:
            self.beta = root if root is not None else Fraction(math.sqrt(4 * self.alpha)).limit_denominator(10**6)
        else:
            self.beta = as_fraction(self.beta)
            if root is not None and self.beta != root:
                raise ValueError(f"beta must equal sqrt(4 alpha) = {root}, got {self.beta}")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        theory = self.mode == "theory"
        if self.p is None:
            self.p = 2500.0 if theory else 1.0
        if self.sparse_exponent is None:
            self.sparse_exponent = 100.0 if theory else 1.0
        if self.crux_exponent is None:
            self.crux_exponent = 100.0 if theory else 1.0
        if self.safety_net is None:
            self.safety_net = not theory
        for name in ("h1", "h2", "h3", "h4", "h5", "unit_count", "web_count", "star_leaves",
                     "ell", "q_cap", "link_cap", "target_t", "degree_cap"):
            val = getattr(self, name)
            if val is not None and val < 1:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            val = getattr(self, f.name)
            out[f.name] = f"{val.numerator}/{val.denominator}" if isinstance(val, Fraction) else val
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass
class DeskParams:
    """Concrete structural counts for one web-building run."""

    target_t: int
    h1: int  # branches per unit inside a finished web
    h2: int  # leaves per pendant star inside a finished web
    h3: int  # unit branch length cap
    h4: int  # branches per web
    h5: int  # web branch length cap
    unit_count: int
    web_count: int
    star_leaves: int
    ell: int
    q_cap: int
    link_cap: int
    bad_units: int
    m: float


def desk_params(g: Graph, cfg: PipelineConfig, crux_hi: int | None = None) -> DeskParams:
    d = float(average_degree(g)) if g.n else 0.0
    delta = g.min_degree
    target = cfg.target_t or max(2, min(int(d) + 1, 12))
    h4 = cfg.h4 or max(1, min(target - 1 + max(1, (target - 1) // 2), max(1, delta)))
    h1 = cfg.h1 or max(1, min(2, delta // 2))
    h2 = cfg.h2 or 1
    h3 = cfg.h3 or 4
    if cfg.ell is not None:
        ell = cfg.ell
    elif crux_hi and d > 0:
        ell = max(2, math.ceil(math.log2(max(crux_hi / d, 2))))
    else:
        ell = 3
    q_cap = cfg.q_cap or 10
    star_leaves = cfg.star_leaves or 2 * h2 + 1
    k = cfg.k or max(1.0, cfg.eps * d)
    m = math.log(max(g.n / k, math.e)) ** 4
    return DeskParams(
        target_t=target, h1=h1, h2=h2, h3=h3, h4=h4,
        h5=cfg.h5 or ell + q_cap + h3 + 1,
        unit_count=cfg.unit_count or h4 + 2,
        web_count=cfg.web_count or target + 1,
        star_leaves=star_leaves, ell=ell, q_cap=q_cap,
        link_cap=cfg.link_cap or 2 * (h3 + 1) + q_cap,
        bad_units=cfg.bad_units if cfg.bad_units is not None else max(1, int(cfg.c * h4)),
        m=m,
    )


# units ---------------------------------------------------------------------------

def harvest_stars(g: Graph, avail: set, leaves: int, limit: int | None = None) -> list[Star]:
    """Greedy vertex-disjoint stars with ``leaves`` leaves inside ``avail``; high degree first."""
    taken: set[int] = set()
    out = []
    order = sorted(avail, key=lambda v: (-g.degree(v), v))
    for v in order:
        if v in taken:
            continue
        free = [u for u in g.adj[v] if u in avail and u not in taken]
        if len(free) >= leaves:
            pick = tuple(free[:leaves])
            taken.add(v)
            taken.update(pick)
            out.append(Star(v, pick))
            if limit is not None and len(out) >= limit:
                break
    return out


def build_units(g: Graph, arena, count: int, h1: int, h2: int, h3: int, star_leaves: int | None = None,
                diag: dict | None = None) -> list[Unit]:
    """Vertex-disjoint (h1, h2, h3)-units inside ``arena``.

    Each round harvests disjoint stars, splits them into hub stars and target
    stars, and joins each hub centre to distinct target centres by internally
    disjoint paths of length at most h3 avoiding all star centres.  A hub that
    reaches h1 targets becomes a unit whose pendant stars are the targets'
    stars minus any leaf touched by a branch.
    """
    star_leaves = star_leaves or h2 + 1
    avail = set(arena)
    units: list[Unit] = []
    rounds = 0
    info = {"rounds": 0, "stars": 0}
    while len(units) < count:
        rounds += 1
        need = count - len(units)
        # hubs are reserved up front (highest degree first) so no star leaves are wasted on them
        hub_ids = sorted(avail, key=lambda v: (-g.degree(v), v))[:need]
        stars = harvest_stars(g, avail - set(hub_ids), star_leaves, limit=2 * need * h1 + 4)
        if len(stars) >= h1:
            hubs, targets = [Star(v, ()) for v in hub_ids], stars
        else:
            stars = harvest_stars(g, avail, star_leaves, limit=2 * need * (h1 + 1) + 4)
            n_hub = max(1, len(stars) // (h1 + 1))
            hubs, targets = stars[:n_hub], stars[n_hub:]
        info["stars"] += len(stars)
        if len(targets) < h1:
            info["reason"] = "too few disjoint stars"
            break
        centres = {s.center for s in stars} | {h.center for h in hubs}
        free_targets = {s.center: s for s in targets}
        owner = {x: s.center for s in targets for x in s.leaves}
        # leaves a target star can lose to branches and still keep h2
        spare = {s.center: len(s.leaves) - h2 for s in targets}
        used: set[int] = set()
        made = 0
        for hub in hubs:
            if len(units) >= count:
                break
            inner: set[int] = set()
            spent: dict[int, int] = {}
            linked: list[tuple[tuple[int, ...], Star]] = []
            candidates = set(free_targets)

            def allowed(v: int) -> bool:
                if v not in avail or v in centres or v in used or v in inner:
                    return False
                c = owner.get(v)
                return c is None or spare[c] - spent.get(c, 0) > 0

            while len(linked) < h1 and candidates:
                path = _bfs_path(g, [hub.center], candidates, allowed)
                if path is None or len(path) - 1 > h3:
                    break
                star = free_targets[path[-1]]
                candidates.discard(star.center)
                inner.update(path[1:-1])
                for v in path[1:-1]:
                    if v in owner:
                        spent[owner[v]] = spent.get(owner[v], 0) + 1
                linked.append((tuple(path), star))
            if len(linked) < h1:
                continue
            branch_vertices = {v for p, _ in linked for v in p}
            stars_out = []
            ok = True
            for _, star in linked:
                free = [x for x in star.leaves if x not in branch_vertices and x not in used]
                if len(free) < h2:
                    ok = False
                    break
                stars_out.append(Star(star.center, tuple(free[:h2])))
            if not ok:
                continue
            unit = Unit(hub.center, h1, h2, h3, tuple(p for p, _ in linked), tuple(stars_out))
            assert validate_unit(g, unit).ok
            used |= unit.vertices()
            for c, k in spent.items():
                spare[c] -= k
            for _, star in linked:
                free_targets.pop(star.center, None)
            units.append(unit)
            made += 1
        avail -= used
        if made == 0:
            info["reason"] = "no hub reached enough targets"
            break
    info["rounds"] = rounds
    info["units"] = len(units)
    if diag is not None:
        diag.update(info)
    return units


# webs ----------------------------------------------------------------------------

def _prune_unit(unit: Unit, drop_branch: int | None, used: set, h1: int, h2: int) -> Unit | None:
    """Remove the consumed branch and overused stars, then trim to (h1, h2)."""
    keep_b, keep_s = [], []
    for i, (b, s) in enumerate(zip(unit.branches, unit.stars)):
        if i == drop_branch:
            continue
        if any(v in used for v in b):
            continue
        hit = sum(1 for x in s.leaves if x in used)
        if 2 * hit >= len(s.leaves) and hit:
            continue  # overused star
        free = [x for x in s.leaves if x not in used]
        if len(free) < h2:
            continue
        keep_b.append(b)
        keep_s.append(Star(s.center, tuple(free[:h2])))
        if len(keep_b) == h1:
            break
    if len(keep_b) < h1:
        return None
    return Unit(unit.core, h1, h2, unit.h3, tuple(keep_b), tuple(keep_s))


@dataclass
class WebBuild:
    web: Web | None
    units_built: int
    diagnostics: dict = field(default_factory=dict)
    interior_v1: int = 0
    interior_v2: int = 0


def build_web(g: Graph, part: Bipartition, prior: list[Web], units: list[Unit], cfg: PipelineConfig,
              params: DeskParams | None = None, sparse: bool = False) -> WebBuild:
    """One web: a core in the ball side joined to ``h4`` unit cores.

    Branch i is P_i + Q_i + R_i: P_i a consecutive shortest path inside the
    ball around the core, Q_i a shortest path through the other side from the
    ball to a leaf of an available unit, and R_i the walk from that leaf back
    to the unit core.  Afterwards every unit drops the consumed branch and
    every star with at least half of its leaves on the web's paths.
    """
    params = params or desk_params(g, cfg)
    diag: dict = {}
    if not units:
        diag["rule"] = "C2"
        diag["reason"] = "no available units"
        return WebBuild(None, 0, diag)
    prior_vertices: set[int] = set()
    for w in prior:
        prior_vertices |= w.vertices()
    unit_vertices: set[int] = set()
    interiors: set[int] = set()
    for u in units:
        unit_vertices |= u.vertices()
        interiors |= u.interior()
    ball_side = set(range(g.n)) if sparse else set(part.v1)
    ball_side -= prior_vertices | unit_vertices
    h = peel_min_degree(g, ball_side)
    if not h:
        diag["rule"] = "C1"
        diag["reason"] = "ball side empty after cleaning"
        return WebBuild(None, len(units), diag)
    outside_h = frozenset(range(g.n)) - h
    deg_h = {v: sum(1 for u in g.adj[v] if u in h) for v in h}
    core = min(h, key=lambda v: (-deg_h[v], v))
    diag["core_degree"] = deg_h[core]
    diag["core_degree_target"] = float(average_degree(g)) / 30
    arena = ball(g, [core], params.ell, outside_h).vertices
    through = frozenset(range(g.n)) - arena if sparse else part.v2 - arena
    side = Bipartition(part.seed, arena, through, attempt=part.attempt)
    cp = ConsecutivePaths(g, core, arena)
    owner: dict[int, tuple[int, int]] = {}
    for j, u in enumerate(units):
        for i, s in enumerate(u.stars):
            for x in s.leaves:
                owner[x] = (j, i)
    available = set(range(len(units)))
    used_q: set[int] = set()
    branches: list[tuple[int, ...]] = []
    chosen: list[tuple[int, int]] = []
    base_forbidden = (prior_vertices | interiors) - arena
    for s in range(params.h4):
        grown = ball(g, [core], params.ell, outside_h | cp.used()).vertices
        x2 = frozenset(x for x, (j, _) in owner.items()
                       if j in available and x not in used_q and x not in base_forbidden)
        if not x2:
            diag["rule"] = "C2"
            diag["reason"] = "no available unit leaves"
            break
        forb = frozenset((base_forbidden | used_q) - grown - x2)
        q = connect_through(g, side, PathRequest(grown, x2, forb, params.q_cap), params.m)
        if q is None:
            diag["rule"] = "C1"
            diag["reason"] = "no short path through the other side"
            break
        w, leaf = q[0], q[-1]
        cp = extend_consecutive(cp, w)
        p = cp.paths[-1]
        j, i = owner[leaf]
        unit = units[j]
        r = (leaf, unit.stars[i].center) + tuple(reversed(unit.branches[i]))[1:]
        full = tuple(p) + tuple(q[1:]) + r[1:]
        branches.append(full)
        chosen.append((j, i))
        available.discard(j)
        used_q.update(q)
        used_q.update(r)
    diag["branches"] = len(branches)
    if not branches:
        return WebBuild(None, len(units), diag)
    on_paths: set[int] = set()
    for b in branches:
        on_paths.update(b)
    final_b, final_u = [], []
    for b, (j, i) in zip(branches, chosen):
        pruned = _prune_unit(units[j], i, on_paths - {units[j].core}, params.h1, params.h2)
        if pruned is None:
            diag.setdefault("bad_units", 0)
            diag["bad_units"] += 1
            continue
        final_b.append(b)
        final_u.append(pruned)
    if not final_b:
        diag["rule"] = "C3"
        diag["reason"] = "every unit lost too many stars"
        return WebBuild(None, len(units), diag)
    web = Web(core, len(final_b), params.h5, tuple(final_b), tuple(final_u))
    rep = validate_web(g, web)
    if not rep.ok:
        diag["rule"] = "validate"
        diag["reason"] = rep.message
        return WebBuild(None, len(units), diag)
    inner = web.interior()
    return WebBuild(web, len(units), diag,
                    interior_v1=len(inner & (arena if sparse else part.v1)),
                    interior_v2=len(inner - (arena if sparse else part.v1)))


# linking -------------------------------------------------------------------------

@dataclass
class LinkResult:
    certificate: SubdivisionCertificate | None
    links: dict  # (web a, web b) -> (unit a, unit b, path)
    labels: dict
    chosen: list[int]
    diagnostics: dict = field(default_factory=dict)


def bookkeeping(webs: list[Web], path_vertices: set, bad_units: int) -> dict:
    """Used branches, over-used units, and bad webs from the vertices on linking paths."""
    used_branch: dict[str, bool] = {}
    over_used: dict[str, bool] = {}
    bad: dict[str, bool] = {}
    for a, web in enumerate(webs):
        n_over = 0
        for j, unit in enumerate(web.units):
            n_used = 0
            for i, (b, s) in enumerate(zip(unit.branches, unit.stars)):
                hit = sum(1 for x in s.leaves if x in path_vertices)
                flag = 2 * hit > len(s.leaves) or any(v in path_vertices for v in b[1:])
                used_branch[f"{a}.{j}.{i}"] = flag
                n_used += flag
            o = 2 * n_used > len(unit.branches)
            over_used[f"{a}.{j}"] = o
            n_over += o
        bad[str(a)] = n_over > bad_units
    return {"used": used_branch, "over_used": over_used, "bad": bad}


def link_webs(g: Graph, part: Bipartition | None, webs: list[Web], cfg: PipelineConfig,
              params: DeskParams | None = None) -> LinkResult:
    """Join unit cores of different webs by disjoint short paths, then keep a fully linked set.

    Each link runs core -> branch -> star centre -> leaf, then through the
    through side to a leaf of the other web, and back down to that unit's core.
    Links avoid every web interior except their own two unit walks.
    """
    params = params or desk_params(g, cfg)
    through = frozenset(range(g.n)) if part is None else part.v2
    side = Bipartition(0, frozenset(), through)
    interiors: set[int] = set()
    for w in webs:
        interiors |= w.interior()
    path_vertices: set[int] = set()
    occupied: set[tuple[int, int]] = set()
    links: dict = {}
    diag: dict = {"attempted": 0, "linked": 0}

    def leaf_map(a: int) -> dict[int, tuple[int, int]]:
        out = {}
        for j, unit in enumerate(webs[a].units):
            if (a, j) in occupied:
                continue
            for i, (b, s) in enumerate(zip(unit.branches, unit.stars)):
                if any(v in path_vertices for v in b) or s.center in path_vertices:
                    continue
                for x in s.leaves:
                    if x not in path_vertices and x in through:
                        out.setdefault(x, (j, i))
        return out

    for a, b in itertools.combinations(range(len(webs)), 2):
        diag["attempted"] += 1
        la, lb = leaf_map(a), leaf_map(b)
        if not la or not lb:
            continue
        x1, x2 = frozenset(la), frozenset(lb)
        forb = frozenset((interiors | path_vertices) - x1 - x2)
        q = connect_through(g, side, PathRequest(x1, x2, forb, params.q_cap), params.m)
        if q is None:
            continue
        ja, ia = la[q[0]]
        jb, ib = lb[q[-1]]
        ua, ub = webs[a].units[ja], webs[b].units[jb]
        down_a = tuple(ua.branches[ia]) + (q[0],)
        down_b = (q[-1],) + tuple(reversed(ub.branches[ib]))
        path = down_a + tuple(q[1:-1]) + down_b if len(q) > 1 else down_a + down_b[1:]
        if len(set(path)) != len(path) or len(path) - 1 > params.link_cap:
            continue
        links[(a, b)] = (ja, jb, path)
        occupied.add((a, ja))
        occupied.add((b, jb))
        path_vertices.update(path)
        diag["linked"] += 1
    labels = bookkeeping(webs, path_vertices, params.bad_units)
    good = [a for a in range(len(webs)) if not labels["bad"][str(a)]]
    gx = nx.Graph()
    gx.add_nodes_from(good)
    gx.add_edges_from((a, b) for (a, b) in links if a in good and b in good)
    chosen: list[int] = []
    if good:
        clique, _ = nx.max_weight_clique(gx, weight=None)
        chosen = sorted(clique)
    unlinked = [(a, b) for a, b in itertools.combinations(good, 2) if (a, b) not in links]
    if unlinked:
        diag["unlinked_pairs"] = [list(p) for p in unlinked[:10]]
    diag["good"] = good
    cert = None
    if chosen:
        branch = tuple(webs[a].core for a in chosen)
        paths = {}
        for x, y in itertools.combinations(range(len(chosen)), 2):
            a, b = chosen[x], chosen[y]
            ja, jb, mid = links[(a, b)]
            wa = webs[a].branches[ja]
            wb = webs[b].branches[jb]
            paths[(x, y)] = tuple(wa) + tuple(mid[1:-1]) + tuple(reversed(wb))
        cert = SubdivisionCertificate(len(chosen), branch, paths)
        rep = verify_certificate(g, cert)
        if not rep.ok:
            diag["verify"] = rep.message
            cert = None
    return LinkResult(cert, links, labels, chosen, diag)


# fallback ------------------------------------------------------------------------

def _route(g: Graph, branch: list[int]) -> SubdivisionCertificate | None:
    t = len(branch)
    bset = set(branch)
    used: set[int] = set()
    paths: dict[tuple[int, int], tuple[int, ...]] = {}
    pending = []
    for i, j in itertools.combinations(range(t), 2):
        if g.has_edge(branch[i], branch[j]):
            paths[(i, j)] = (branch[i], branch[j])
        else:
            pending.append((i, j))
    need = {i: 0 for i in range(t)}
    for i, j in pending:
        need[i] += 1
        need[j] += 1
    for i in range(t):
        if sum(1 for u in g.adj[branch[i]] if u not in bset) < need[i]:
            return None
    # route pairs with the scarcest endpoints first
    pending.sort(key=lambda p: (min(g.degree(branch[p[0]]), g.degree(branch[p[1]])), p))
    for i, j in pending:
        a, b = branch[i], branch[j]
        reserved: set[int] = set()
        for c in range(t):
            if c in (i, j) or need[c] == 0:
                continue
            free = [u for u in g.adj[branch[c]] if u not in bset and u not in used]
            if len(free) <= need[c]:
                reserved.update(free)
        path = None
        for blocked in (reserved, set()):
            path = _bfs_path(g, [a], {b}, lambda v: v not in bset and v not in used and v not in blocked)
            if path is not None:
                break
        if path is None:
            return None
        used.update(path[1:-1])
        paths[(i, j)] = tuple(path)
        need[i] -= 1
        need[j] -= 1
    return SubdivisionCertificate(t, tuple(branch), paths)


def dense_fallback(g: Graph, cfg: PipelineConfig | None = None, t_max: int | None = None,
                   diag: dict | None = None) -> SubdivisionCertificate:
    """Greedy TK_t: high-degree branch vertices joined by successive shortest paths; shrink t on failure."""
    cfg = cfg or PipelineConfig()
    if g.n == 0:
        return SubdivisionCertificate(0, (), {})
    degs = sorted(g.degrees, reverse=True)
    hi = 1
    for t in range(1, g.n + 1):
        if degs[t - 1] >= t - 1:
            hi = t
    if t_max is not None:
        hi = min(hi, t_max)
    rng = random.Random(cfg.seed)
    order = sorted(range(g.n), key=lambda v: (-g.degree(v), v))
    rank = {v: i for i, v in enumerate(order)}
    attempts = 0

    def attempt(t: int) -> SubdivisionCertificate | None:
        nonlocal attempts
        pool = [v for v in order if g.degree(v) >= t - 1]
        tries = [pool[:t]]
        for _ in range(cfg.fallback_tries - 1):
            if len(pool) > t:
                tries.append(sorted(rng.sample(pool[: max(2 * t, t + 8)], t), key=rank.__getitem__))
        for branch in tries:
            attempts += 1
            cert = _route(g, branch)
            if cert is not None and verify_certificate(g, cert).ok:
                return cert
        return None

    # binary search on t; success is not strictly monotone, so the bracket is
    # only a heuristic and the best verified certificate is kept
    best = SubdivisionCertificate(1, (order[0],), {})
    lo, top = 1, hi
    while lo < top:
        mid = (lo + top + 1) // 2
        cert = attempt(mid)
        if cert is not None:
            best, lo = cert, mid
        else:
            top = mid - 1
    if diag is not None:
        diag.update({"t": best.t, "attempts": attempts, "start": hi})
    return best


def bounded_degree_pass(g: Graph, cfg: PipelineConfig, witness: ExpanderWitness | None = None,
                        diag: dict | None = None) -> ExpanderWitness:
    """Drop vertices above the degree cap and re-extract; keep the input witness if that fails."""
    params = ExpansionParams(cfg.eps / 2 if cfg.mode == "theory" else cfg.eps,
                             cfg.k or max(1.0, cfg.eps * float(average_degree(g))))
    if witness is None:
        witness = extract_expander(g, params, trials=cfg.extract_trials, seed=cfg.seed)
    d = float(average_degree(g))
    if cfg.degree_cap is not None:
        cap = cfg.degree_cap
    elif cfg.mode == "theory":
        cap = 10 * d * d * math.log(max(g.n, 2)) ** 10
    else:
        cap = max(4 * d, 1)
    info = {"cap": cap}
    h = witness.subgraph
    keep = [v for v in range(h.n) if h.degree(v) <= cap]
    info["removed"] = h.n - len(keep)
    if len(keep) == h.n:
        info["result"] = "identity"
        if diag is not None:
            diag.update(info)
        return witness
    sub = induced(h, keep)
    try:
        if sub.m == 0:
            raise ExtractionError("nothing left")
        inner = extract_expander(sub, witness.params, trials=cfg.extract_trials, seed=cfg.seed)
    except ExtractionError as exc:
        info["result"] = f"fallback: {exc}"
        if diag is not None:
            diag.update(info)
        return witness
    if 2 * average_degree(inner.subgraph) < average_degree(h):
        info["result"] = "fallback: density halved"
        if diag is not None:
            diag.update(info)
        return witness
    members = frozenset(sorted(witness.members)[i] for i in (keep[j] for j in sorted(inner.members)))
    info["result"] = "reduced"
    if diag is not None:
        diag.update(info)
    return ExpanderWitness(inner.subgraph, members, inner.params, inner.certified, inner.trials,
                           inner.seed, witness.source_degree, witness.notes + ["bounded-degree pass"])


# trace and dispatch ----------------------------------------------------------------

@dataclass
class BuildTrace:
    case: str = ""
    config: dict = field(default_factory=dict)
    steps: list = field(default_factory=list)
    webs: list = field(default_factory=list)
    links: list = field(default_factory=list)
    labels: dict = field(default_factory=dict)
    bad_units: int = 0
    chosen: list = field(default_factory=list)
    certificate: SubdivisionCertificate | None = None
    source: str = ""
    diagnostics: dict = field(default_factory=dict)
    # wall-clock time, kept out of the serialized form so traces stay byte-stable
    seconds: float = field(default=0.0, compare=False)

    @property
    def t(self) -> int:
        return self.certificate.t if self.certificate else 0

    def step(self, name: str, **info) -> None:
        self.steps.append({"step": name, **info})

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "case": self.case,
            "config": self.config,
            "steps": self.steps,
            "webs": [w.to_dict() for w in self.webs],
            "links": self.links,
            "labels": self.labels,
            "bad_units": self.bad_units,
            "chosen": self.chosen,
            "certificate": self.certificate.to_json() if self.certificate else None,
            "source": self.source,
            "t": self.t,
            "diagnostics": self.diagnostics,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, default=_jsonable)

    @classmethod
    def from_dict(cls, obj: dict) -> "BuildTrace":
        if obj.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported trace schema {obj.get('schema_version')}")
        cert = obj.get("certificate")
        return cls(obj["case"], obj["config"], obj["steps"], [Web.from_dict(w) for w in obj["webs"]],
                   obj["links"], obj["labels"], obj["bad_units"], obj["chosen"],
                   SubdivisionCertificate.from_json(cert) if cert else None, obj["source"],
                   obj["diagnostics"])

    def revalidate(self, g: Graph) -> list[str]:
        """Re-check every stored claim against ``g``; returns the problems found."""
        problems = []
        for i, w in enumerate(self.webs):
            rep = validate_web(g, w)
            if not rep.ok:
                problems.append(f"web {i}: {rep.message}")
        for i, j in itertools.combinations(range(len(self.webs)), 2):
            if self.webs[i].interior() & self.webs[j].interior():
                problems.append(f"webs {i} and {j} share interior vertices")
        if self.webs:
            on_paths: set[int] = set()
            for link in self.links:
                on_paths.update(link["path"])
            if bookkeeping(self.webs, on_paths, self.bad_units) != self.labels:
                problems.append("bookkeeping replay differs from stored labels")
        if self.certificate is not None:
            rep = verify_certificate(g, self.certificate)
            if not rep.ok:
                problems.append(f"certificate: {rep.message}")
        return problems


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _map_unit(u: Unit, lab) -> Unit:
    return Unit(lab[u.core], u.h1, u.h2, u.h3, tuple(tuple(lab[v] for v in b) for b in u.branches),
                tuple(Star(lab[s.center], tuple(lab[x] for x in s.leaves)) for s in u.stars))


def _map_web(w: Web, lab) -> Web:
    return Web(lab[w.core], w.h4, w.h5, tuple(tuple(lab[v] for v in b) for b in w.branches),
               tuple(_map_unit(u, lab) for u in w.units))


def _map_cert(c: SubdivisionCertificate, lab) -> SubdivisionCertificate:
    return SubdivisionCertificate(c.t, tuple(lab[v] for v in c.branch),
                                  {k: tuple(lab[v] for v in p) for k, p in c.paths.items()})


def build_webs(work: Graph, cfg: PipelineConfig, trace: BuildTrace, sparse: bool,
               crux_hi: int | None = None) -> SubdivisionCertificate | None:
    """Phase 1 (webs with disjoint interiors) and Phase 2 (linking) on ``work``."""
    params = desk_params(work, cfg, crux_hi)
    trace.step("params", **asdict(params))
    trace.bad_units = params.bad_units
    part = None
    if not sparse:
        part = sample_bipartition(work, cfg.seed, cfg.retries)
        trace.step("bipartition", **part.to_dict())
    split = part if part is not None else Bipartition(cfg.seed, frozenset(range(work.n)), frozenset(range(work.n)))
    webs: list[Web] = []
    claimed: set[int] = set()
    for idx in range(params.web_count):
        through = split.v2 if part is not None else frozenset(range(work.n))
        arena = set(through) - claimed
        udiag: dict = {}
        units = build_units(work, arena, params.unit_count, 2 * params.h1, 2 * params.h2, params.h3,
                            max(params.star_leaves, 2 * params.h2 + 1), diag=udiag)
        wb = build_web(work, split, webs, units, cfg, params, sparse=sparse)
        trace.step("web", index=idx, units=udiag, **wb.diagnostics,
                   interior_v1=wb.interior_v1, interior_v2=wb.interior_v2)
        if wb.web is None:
            break
        for prev in webs:
            assert not prev.interior() & wb.web.interior(), "web interiors overlap"
        webs.append(wb.web)
        claimed |= wb.web.vertices()
    lab = work.labels
    if len(webs) < 1:
        trace.step("link", reason="no webs")
        return None
    res = link_webs(work, part, webs, cfg, params)
    trace.webs = [_map_web(w, lab) for w in webs]
    trace.links = [{"webs": [a, b], "units": [ja, jb], "path": [lab[v] for v in p]}
                   for (a, b), (ja, jb, p) in sorted(res.links.items())]
    trace.labels = res.labels
    trace.chosen = res.chosen
    trace.step("link", **res.diagnostics)
    if res.certificate is None:
        return None
    return _map_cert(res.certificate, lab)


def dispatch(g: Graph, cfg: PipelineConfig | None = None) -> BuildTrace:
    """Run the full case analysis on ``g`` and return a trace with the best verified certificate."""
    cfg = cfg or PipelineConfig()
    trace = BuildTrace(config=cfg.to_dict())
    started = time.perf_counter()
    if g.m == 0:
        trace.case = "edgeless"
        trace.certificate = SubdivisionCertificate(1, (0,), {}) if g.n else SubdivisionCertificate(0, (), {})
        trace.source = "trivial"
        return trace
    d = float(average_degree(g))
    k = cfg.k or max(1.0, cfg.eps * d)
    params = ExpansionParams(cfg.eps, k)
    wit = extract_expander(g, params, trials=cfg.extract_trials, seed=cfg.seed)
    g0 = wit.subgraph
    n0 = g0.n
    m = math.log(max(n0 / k, math.e)) ** 4
    trace.step("extract", n=n0, d=float(average_degree(g0)), certified=wit.certified, m=m)
    cert = None
    if cfg.eps * d >= n0 / cfg.T:
        trace.case = "dense"
    elif d <= (n0 / math.log(max(n0, 2)) ** cfg.sparse_exponent) ** (1 / 3):
        trace.case = "sparse"
    else:
        cb = _crux(g0, cfg.beta, cfg.crux_budget)
        trace.step("crux", beta=str(cfg.beta), lo=cb.lo, hi=cb.hi, status=cb.status)
        c_val = cb.hi
        lhs = c_val / math.log(c_val) if c_val > 1 else 0.0
        if lhs >= d * d * m ** cfg.crux_exponent:
            trace.case = "non-extremal"
        else:
            hv = sorted(cb.witness)
            hgraph = induced(g0, hv)
            vh = hgraph.n
            dd = max(d, 2.0)
            k2 = max(1.0, min(dd * dd / math.log(dd) ** cfg.p, vh / math.log(max(vh, 3)) ** cfg.p))
            trace.step("extremal", crux_size=vh, k=k2)
            try:
                hstar = extract_expander(hgraph, ExpansionParams(cfg.eps, k2), trials=cfg.extract_trials,
                                         seed=cfg.seed).subgraph
            except (ExtractionError, ValueError) as exc:
                hstar = None
                trace.step("extremal", reason=str(exc))
            if hstar is not None and hstar.m > 0:
                cs = _crux(hstar, cfg.beta, cfg.crux_budget)
                trace.step("crux", graph="H*", lo=cs.lo, hi=cs.hi, status=cs.status)
                if cs.hi >= k2 * math.log(max(k2, 1.0)):
                    trace.case = "extremal"
                    g0 = hstar
                else:
                    trace.case = "crux-small"
            else:
                trace.case = "crux-small"
    if cfg.mode == "theory":
        ok, why = _theory_preconditions(g0, cfg, d, k)
        trace.step("theory", ok=ok, reason=why)
        if not ok:
            trace.diagnostics["theory"] = why
    if trace.case == "dense":
        fd: dict = {}
        cert = dense_fallback(g, cfg, diag=fd)
        trace.step("dense_fallback", **fd)
        trace.source = "dense_fallback"
    elif cfg.mode == "desk" or not trace.diagnostics.get("theory"):
        work = g0
        if trace.case == "sparse" and cfg.bounded_degree:
            bd: dict = {}
            wit = bounded_degree_pass(g, cfg, wit, diag=bd)
            trace.step("bounded_degree", **bd)
            work = wit.subgraph
        cert = build_webs(work, cfg, trace, sparse=trace.case == "sparse")
        trace.source = "webs" if cert else ""
    if cfg.safety_net and trace.case != "dense":
        fd = {}
        fb = dense_fallback(g, cfg, diag=fd)
        trace.step("safety_net", web_t=cert.t if cert else 0, fallback_t=fb.t)
        if cert is None or fb.t > cert.t:
            cert = fb
            trace.source = "safety_net"
    if cert is not None:
        rep = verify_certificate(g, cert)
        if not rep.ok:
            trace.diagnostics["rejected"] = rep.message
            cert = None
    trace.certificate = cert
    trace.seconds = time.perf_counter() - started
    return trace


def _crux(g: Graph, beta: Fraction, budget: int):
    if g.n <= 16:
        return crux_exact(g, beta)
    return crux_bounded(g, beta, budget=budget)


def _theory_preconditions(g: Graph, cfg: PipelineConfig, d: float, k: float) -> tuple[bool, str]:
    n = max(g.n, 3)
    need = math.log(n) ** (25 * cfg.x)
    if d < need:
        return False, f"needs d >= log^(25x) n = {need:.3g}, have {d:.3g}"
    if k > n / cfg.T:
        return False, "needs k <= n/T"
    return True, ""
