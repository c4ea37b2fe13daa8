"""Sublinear expansion: the rho function, expansion checks, and expander extraction."""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .graph import (
    Graph,
    average_degree,
    bfs_distances,
    components,
    induced,
    mask_to_set,
    neighbor_union_table,
    peel_min_degree,
    popcounts,
)

log = logging.getLogger(__name__)

TOL = 1e-9
EXHAUSTIVE_LIMIT = 20


class PreconditionError(ValueError):
    """An operation's numeric precondition does not hold; carries the threshold."""

    def __init__(self, message: str, threshold: float | None = None):
        self.threshold = threshold
        super().__init__(message)


class ExtractionError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExpansionParams:
    epsilon: float
    k: float

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")


def rho(x: float, params: ExpansionParams) -> float:
    """Expansion rate: 0 below k/5, else eps / ln^2(15x/k)."""
    if x < 0:
        raise ValueError("rho is defined for x >= 0")
    if 5 * x < params.k:
        return 0.0
    return params.epsilon / math.log(15 * x / params.k) ** 2


def size_window(n: int, k: float) -> range:
    """Sizes s with k/2 <= s <= 2n/3."""
    lo = max(1, math.ceil(k / 2))
    hi = (2 * n) // 3
    return range(lo, hi + 1)


def _violates(nsize: int, xsize: int, params: ExpansionParams) -> bool:
    return nsize < rho(xsize, params) * xsize - TOL


@dataclass
class ExpansionReport:
    passed: bool
    mode: str
    robust: bool
    checked: int
    violations: list = field(default_factory=list)
    robust_violations: list = field(default_factory=list)
    trials: int | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "mode": self.mode,
            "robust": self.robust,
            "checked": self.checked,
            "trials": self.trials,
            "seed": self.seed,
            "violations": [sorted(x) for x in self.violations],
            "robust_violations": [
                {"X": sorted(x), "F": [list(e) for e in f]} for x, f in self.robust_violations
            ],
        }


def adversarial_cut(g: Graph, x: frozenset, params: ExpansionParams, avg: float):
    """Try to shrink N(X) below rho|X| by deleting at most d(G) rho(|X|) |X| cut edges.

    Neighbours with the fewest edges into X are cut off first.  Returns the
    deleted edge list on success, None otherwise.  This is a refutation attempt
    only: failing to find F says nothing about robustness.
    """
    r = rho(len(x), params)
    budget = avg * r * len(x)
    need = r * len(x)
    nbr = g.neighborhood(x)
    if len(nbr) < need - TOL:
        return []
    cost = sorted((sum(1 for u in g.adj[y] if u in x), y) for y in nbr)
    spent = 0
    removed = []
    left = len(nbr)
    for c, y in cost:
        if spent + c > budget + TOL:
            break
        spent += c
        removed.append(y)
        left -= 1
        if left < need - TOL:
            return [(min(u, y), max(u, y)) for y in removed for u in g.adj[y] if u in x]
    return None


def _exhaustive_violators(g: Graph, params: ExpansionParams, limit: int | None):
    """All violating X in the size window, ordered by (size, lexicographic)."""
    n = g.n
    table = neighbor_union_table(g)
    idx = np.arange(1 << n, dtype=np.uint32)
    sizes = popcounts(n)
    nsize = np.bitwise_count(table & ~idx).astype(np.int32)
    window = size_window(n, params.k)
    thr = np.full(n + 1, -1.0)
    for s in window:
        thr[s] = rho(s, params) * s - TOL
    bad = nsize < thr[sizes]
    checked = int(np.count_nonzero(thr[sizes] > -1.0)) if len(window) else 0
    out = []
    cand = np.nonzero(bad)[0]
    if cand.size:
        cand_sizes = sizes[cand]
        for s in np.unique(cand_sizes):
            masks = cand[cand_sizes == s].astype(np.int64)
            rev = np.zeros_like(masks)
            for b in range(n):
                rev |= ((masks >> b) & 1) << (n - 1 - b)
            order = np.argsort(-rev, kind="stable")
            for i in order:
                out.append(mask_to_set(int(masks[i])))
                if limit is not None and len(out) >= limit:
                    return out, checked
    return out, checked


def _random_connected_set(g: Graph, size: int, rng: random.Random) -> frozenset:
    start = rng.randrange(g.n)
    chosen = {start}
    frontier = list(g.adj[start])
    in_frontier = set(frontier)
    while len(chosen) < size:
        if frontier:
            i = rng.randrange(len(frontier))
            frontier[i], frontier[-1] = frontier[-1], frontier[i]
            v = frontier.pop()
            in_frontier.discard(v)
        else:
            rest = [u for u in range(g.n) if u not in chosen]
            v = rng.choice(rest)
        chosen.add(v)
        for u in g.adj[v]:
            if u not in chosen and u not in in_frontier:
                in_frontier.add(u)
                frontier.append(u)
    return frozenset(chosen)


def check_expander(g: Graph, params: ExpansionParams, mode: str = "exhaustive", *,
                   trials: int = 200, seed: int = 0, robust: bool = False,
                   max_violations: int | None = 16) -> ExpansionReport:
    """Check |N(X)| >= rho(|X|)|X| for every X with k/2 <= |X| <= 2n/3.

    ``mode="exhaustive"`` scans all subsets (n <= 20).  ``mode="sampled"`` draws
    ``trials`` sets, alternating uniform subsets and randomly grown connected
    sets.  With ``robust`` set, each passing X is additionally attacked with
    :func:`adversarial_cut`.
    """
    avg = float(average_degree(g)) if g.n else 0.0
    if mode == "exhaustive":
        if g.n > EXHAUSTIVE_LIMIT:
            raise ValueError(f"exhaustive expansion check needs n <= {EXHAUSTIVE_LIMIT}, got {g.n}")
        violations, checked = _exhaustive_violators(g, params, max_violations)
        report = ExpansionReport(passed=not violations, mode=mode, robust=robust,
                                 checked=checked, violations=violations)
        if robust:
            _robust_exhaustive(g, params, avg, report, max_violations)
        return report
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    rng = random.Random(seed)
    window = size_window(g.n, params.k)
    report = ExpansionReport(passed=True, mode=mode, robust=robust, checked=0, trials=trials, seed=seed)
    if not len(window):
        return report
    for trial in range(trials):
        size = rng.choice(window)
        if trial % 2:
            x = frozenset(rng.sample(range(g.n), size))
        else:
            x = _random_connected_set(g, size, rng)
        report.checked += 1
        if _violates(len(g.neighborhood(x)), len(x), params):
            report.violations.append(x)
        elif robust:
            f = adversarial_cut(g, x, params, avg)
            if f is not None:
                report.robust_violations.append((x, f))
    report.violations.sort(key=lambda s: (len(s), sorted(s)))
    if max_violations is not None:
        del report.violations[max_violations:]
    report.passed = not report.violations and not report.robust_violations
    return report


def _robust_exhaustive(g, params, avg, report, limit):
    n = g.n
    table = neighbor_union_table(g)
    idx = np.arange(1 << n, dtype=np.uint32)
    sizes = popcounts(n)
    nsize = np.bitwise_count(table & ~idx).astype(np.float64)
    window = size_window(n, params.k)
    need = np.full(n + 1, -np.inf)
    budget = np.zeros(n + 1)
    for s in window:
        r = rho(s, params)
        need[s] = r * s
        budget[s] = avg * r * s
    # a cut can remove at most floor(budget) neighbours
    cand = np.nonzero((nsize - np.floor(budget[sizes] + TOL) < need[sizes] - TOL)
                      & (nsize >= need[sizes] - TOL))[0]
    for mask in cand:
        x = mask_to_set(int(mask))
        f = adversarial_cut(g, x, params, avg)
        if f is not None:
            report.robust_violations.append((x, f))
            if limit is not None and len(report.robust_violations) >= limit:
                break
    report.robust_violations.sort(key=lambda p: (len(p[0]), sorted(p[0])))
    report.passed = not report.violations and not report.robust_violations


@dataclass
class ExpanderWitness:
    """An extracted (or checked) expander subgraph.

    ``subgraph`` carries root-graph labels; ``members`` are the ids of its
    vertices in the graph extraction was run on.
    """

    subgraph: Graph
    members: frozenset
    params: ExpansionParams
    certified: str
    trials: int | None = None
    seed: int | None = None
    source_degree: Fraction | None = None
    notes: list = field(default_factory=list)

    @property
    def root_vertices(self) -> list[int]:
        return sorted(self.subgraph.labels)

    def to_dict(self) -> dict:
        return {
            "vertices": self.root_vertices,
            "params": {"epsilon": self.params.epsilon, "k": self.params.k},
            "certified": self.certified,
            "trials": self.trials,
            "seed": self.seed,
            "n": self.subgraph.n,
            "edges": self.subgraph.m,
            "average_degree": str(average_degree(self.subgraph)) if self.subgraph.n else "0",
            "notes": list(self.notes),
        }


def _density(g: Graph, s: frozenset) -> Fraction:
    return Fraction(2 * g.edges_within(s), len(s)) if s else Fraction(0)


def _heuristic_violator(g: Graph, params: ExpansionParams, rng: random.Random, starts: int = 8):
    """Cheap violator search for graphs too large to scan: components, then BFS balls."""
    window = size_window(g.n, params.k)
    if not len(window):
        return None
    lo, hi = window.start, window.stop - 1
    best = None

    def consider(x):
        nonlocal best
        if lo <= len(x) <= hi and _violates(len(g.neighborhood(x)), len(x), params):
            key = (len(x), sorted(x))
            if best is None or key < (len(best), sorted(best)):
                best = frozenset(x)

    comps = components(g)
    if len(comps) > 1:
        for c in comps:
            consider(c)
        if best is not None:
            return best
    by_degree = sorted(range(g.n), key=lambda v: (g.degree(v), v))
    seeds = by_degree[: starts // 2] + [rng.randrange(g.n) for _ in range(starts - starts // 2)]
    for s in seeds:
        dist = bfs_distances(g, [s])
        layers: dict[int, list[int]] = {}
        for v, d in dist.items():
            layers.setdefault(d, []).append(v)
        acc: set[int] = set()
        for d in sorted(layers):
            acc.update(layers[d])
            if len(acc) > hi:
                break
            consider(acc)
    return best


def _find_violator(g: Graph, params: ExpansionParams, rng: random.Random):
    if g.n <= EXHAUSTIVE_LIMIT:
        found, _ = _exhaustive_violators(g, params, 1)
        return found[0] if found else None
    return _heuristic_violator(g, params, rng)


def extract_expander(g: Graph, params: ExpansionParams, *, trials: int = 200, seed: int = 0,
                     max_rounds: int | None = None) -> ExpanderWitness:
    """Extract a dense expander subgraph H with d(H) >= d(G)/2 and delta(H) >= d(H)/2.

    Starting from the min-degree peel of G, repeatedly look for a violating X
    (smallest, then lexicographically first); descend into the denser of
    H[X u N(X)] and H - X, peel again, and stop when no violator is found or
    no descent keeps d >= d(G)/2.  Small outputs are certified exhaustively,
    larger ones by ``trials`` sampled sets.
    """
    if g.m < 1:
        raise ValueError("expander extraction needs at least one edge")
    base = average_degree(g)
    floor = base / 2
    rng = random.Random(seed)
    current = peel_min_degree(g)
    notes = []
    rounds = 0
    limit = max_rounds if max_rounds is not None else g.n
    while rounds < limit:
        rounds += 1
        sub = induced(g, current)
        x_local = _find_violator(sub, params, rng)
        if x_local is None:
            break
        order = sorted(current)
        x = frozenset(order[i] for i in x_local)
        nx_ = frozenset(order[i] for i in sub.neighborhood(x_local))
        part_a = x | nx_
        part_b = current - x
        options = sorted(
            ((_density(g, p), -len(p), p) for p in (part_a, part_b) if p and p != current),
            key=lambda t: (t[0], t[1]),
            reverse=True,
        )
        chosen = None
        for dens, _, part in options:
            peeled = peel_min_degree(g, part)
            if peeled and _density(g, peeled) >= floor:
                chosen = peeled
                break
        if chosen is None:
            notes.append(f"descent blocked at |H|={len(current)}: no part keeps d >= d(G)/2")
            break
        current = chosen
    else:
        notes.append(f"round limit {limit} reached")
    current = peel_min_degree(g, current)
    h = induced(g, current)
    dh = average_degree(h)
    if not (dh >= floor and 2 * h.min_degree >= dh):
        raise ExtractionError(f"degree contract violated: d(H)={dh}, d(G)={base}, delta(H)={h.min_degree}")
    if h.n <= EXHAUSTIVE_LIMIT:
        ok = check_expander(h, params, "exhaustive", max_violations=1).passed
        certified = "verified_exhaustive" if ok else "extracted_unverified"
        witness = ExpanderWitness(h, current, params, certified, source_degree=base, notes=notes)
    else:
        ok = check_expander(h, params, "sampled", trials=trials, seed=seed, max_violations=1).passed
        certified = "verified_sampled" if ok else "extracted_unverified"
        witness = ExpanderWitness(h, current, params, certified, trials=trials, seed=seed,
                                  source_degree=base, notes=notes)
    if not ok:
        log.info("extracted subgraph failed its expansion check (%s)", "; ".join(notes) or "no notes")
    return witness


def removal_threshold(h: Graph, params: ExpansionParams) -> float:
    """n rho(n) d(H) / (4 Delta(H)): the largest |X| robust removal accepts (exclusive)."""
    return h.n * rho(h.n, params) * float(average_degree(h)) / (4 * h.max_degree)


def robust_subset_removal(witness: ExpanderWitness, x) -> ExpanderWitness:
    """Re-extract an expander inside H - X and check the guaranteed size and density.

    ``x`` holds vertex ids local to ``witness.subgraph``.
    """
    h = witness.subgraph
    x = frozenset(x)
    if not x:
        return witness
    threshold = removal_threshold(h, witness.params)
    if len(x) >= threshold:
        raise PreconditionError(
            f"|X|={len(x)} is not below n*rho(n)*d/(4*Delta)={threshold:.6g}", threshold=threshold)
    rest = [v for v in range(h.n) if v not in x]
    inner = induced(h, rest)
    sub = extract_expander(inner, witness.params, trials=witness.trials or 200, seed=witness.seed or 0)
    bound = h.n - (2 * h.max_degree / float(average_degree(h))) * len(x) / rho(h.n, witness.params)
    if not sub.subgraph.n > bound - TOL:
        raise ExtractionError(f"|Y|={sub.subgraph.n} does not exceed the size bound {bound:.6g}")
    if average_degree(sub.subgraph) < average_degree(h) / 2:
        raise ExtractionError("d(H[Y]) fell below d(H)/2")
    members = frozenset(rest[i] for i in sub.members)
    return ExpanderWitness(sub.subgraph, members, witness.params, sub.certified, sub.trials, sub.seed,
                           source_degree=average_degree(h), notes=sub.notes)
