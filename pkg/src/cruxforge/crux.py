"""The crux C_alpha(G): exact search, heuristic bounds, density and expansion checks.

An alpha-crux is a subgraph H with d(H) >= alpha d(G); C_alpha(G) is the least
order of one.  Induced subgraphs maximise edges for a fixed vertex set, so all
searches range over vertex subsets.  Every density comparison is exact:
``e(S) * n * q >= p * e(G) * |S|`` for ``alpha = p/q``.
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .graph import Graph, ball, edge_count_table, mask_to_set, neighbor_union_table, popcounts

EXACT_LIMIT = 22
DENSE_EXHAUSTIVE_LIMIT = 20
KEXPAN_LIMIT = 18


def as_fraction(alpha) -> Fraction:
    if isinstance(alpha, str):
        return Fraction(alpha)
    if isinstance(alpha, float):
        return Fraction(alpha).limit_denominator(10**6)
    return Fraction(alpha)


def _check_alpha(alpha) -> Fraction:
    alpha = as_fraction(alpha)
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def required_edges(g: Graph, alpha: Fraction, s: int) -> int:
    """Least e(S) making an s-set an alpha-crux: ceil(alpha * e(G) * s / n)."""
    num = alpha.numerator * g.m * s
    den = alpha.denominator * g.n
    return -(-num // den)


def is_crux(g: Graph, s, alpha) -> bool:
    s = frozenset(s)
    alpha = as_fraction(alpha)
    if not s:
        return False
    return g.edges_within(s) * g.n * alpha.denominator >= alpha.numerator * g.m * len(s)


@dataclass
class CruxResult:
    alpha: Fraction
    lo: int
    hi: int
    witness: frozenset
    status: str
    nodes: int = 0
    notes: list = field(default_factory=list)

    @property
    def value(self) -> int | tuple[int, int]:
        return self.hi if self.status == "exact" else (self.lo, self.hi)

    def to_dict(self, g: Graph | None = None) -> dict:
        wit = sorted(self.witness) if g is None else sorted(g.labels[v] for v in self.witness)
        out = {
            "alpha": f"{self.alpha.numerator}/{self.alpha.denominator}",
            "status": self.status,
            "witness": wit,
            "nodes": self.nodes,
            "notes": list(self.notes),
        }
        if self.status == "exact":
            out["value"] = self.hi
        else:
            out["value"] = [self.lo, self.hi]
        return out


def crux_exact(g: Graph, alpha) -> CruxResult:
    """C_alpha(G) by size-ordered branch and bound (n <= 22).

    For each size s, subsets are explored in lexicographic order, so the first
    hit is the lexicographically smallest minimum alpha-crux.  A branch is cut
    when its edges plus the best possible contribution of the remaining picks
    cannot reach the required count.
    """
    alpha = _check_alpha(alpha)
    n = g.n
    if n < 1:
        raise ValueError("crux of the empty graph is undefined")
    if n > EXACT_LIMIT:
        raise ValueError(f"crux_exact needs n <= {EXACT_LIMIT}, got {n}")
    masks = g.masks
    nodes = 0
    for s in range(1, n + 1):
        need = required_edges(g, alpha, s)
        if need > s * (s - 1) // 2:
            continue
        found = None

        def search(start: int, chosen: list[int], cmask: int, edges: int) -> bool:
            nonlocal nodes, found
            nodes += 1
            r = s - len(chosen)
            if r == 0:
                if edges >= need:
                    found = list(chosen)
                    return True
                return False
            if n - start < r:
                return False
            gains = sorted((bin(masks[c] & cmask).count("1") for c in range(start, n)), reverse=True)
            if edges + sum(gains[:r]) + r * (r - 1) // 2 < need:
                return False
            for c in range(start, n - r + 1):
                add = bin(masks[c] & cmask).count("1")
                chosen.append(c)
                if search(c + 1, chosen, cmask | (1 << c), edges + add):
                    return True
                chosen.pop()
            return False

        if search(0, [], 0, 0):
            return CruxResult(alpha, s, s, frozenset(found), "exact", nodes=nodes)
    raise AssertionError("G itself is an alpha-crux for alpha < 1")


def counting_lower_bound(g: Graph, alpha: Fraction) -> int:
    """Least s for which an s-set could hold the required edges at all.

    An alpha-crux on s vertices has at most C(s,2) edges and at most half the
    sum of the s largest degrees of G, so this is a sound lower bound.
    """
    degs = sorted(g.degrees, reverse=True)
    prefix = 0
    for s in range(1, g.n + 1):
        prefix += degs[s - 1]
        need = required_edges(g, alpha, s)
        if need <= s * (s - 1) // 2 and need <= prefix // 2:
            return s
    return g.n


def _peel_sequence(g: Graph, region, alpha: Fraction, budget: list[int]):
    """Min-degree peel of ``region``; returns the smallest alpha-crux prefix met."""
    alive = set(region)
    deg = {v: sum(1 for u in g.adj[v] if u in alive) for v in alive}
    edges = sum(deg.values()) // 2
    heap = [(d, v) for v, d in deg.items()]
    heapq.heapify(heap)
    removed = []
    best_size = None
    best_cut = 0
    p, q = alpha.numerator, alpha.denominator

    def ok(e, size):
        return size > 0 and e * g.n * q >= p * g.m * size

    if ok(edges, len(alive)):
        best_size, best_cut = len(alive), 0
    while heap and budget[0] > 0:
        d, v = heapq.heappop(heap)
        if v not in alive or deg[v] != d:
            continue
        budget[0] -= 1
        alive.remove(v)
        removed.append(v)
        edges -= d
        for u in g.adj[v]:
            if u in alive:
                deg[u] -= 1
                heapq.heappush(heap, (deg[u], u))
        if ok(edges, len(alive)) and (best_size is None or len(alive) <= best_size):
            best_size, best_cut = len(alive), len(removed)
    if best_size is None:
        return None
    return frozenset(set(region) - set(removed[:best_cut]))


def _shrink(g: Graph, s: frozenset, alpha: Fraction, budget: list[int]) -> frozenset:
    """Drop vertices one at a time while the set stays an alpha-crux."""
    cur = set(s)
    p, q = alpha.numerator, alpha.denominator
    edges = g.edges_within(cur)
    changed = True
    while changed and budget[0] > 0:
        changed = False
        inside = sorted(cur, key=lambda v: (sum(1 for u in g.adj[v] if u in cur), v))
        for v in inside:
            budget[0] -= 1
            dv = sum(1 for u in g.adj[v] if u in cur)
            if len(cur) > 1 and (edges - dv) * g.n * q >= p * g.m * (len(cur) - 1):
                cur.remove(v)
                edges -= dv
                changed = True
                break
    return frozenset(cur)


def crux_bounded(g: Graph, alpha, budget: int = 10**7, seed: int = 0, radius: int = 2,
                 max_seeds: int | None = None) -> CruxResult:
    """Interval [lo, hi] containing C_alpha(G), for graphs of any size.

    ``hi`` comes from min-degree peels (whole graph and balls of ``radius``
    around high-degree seeds) followed by greedy shrinking; ``lo`` is the
    counting bound.  ``budget`` caps vertex deletions across all peels.
    """
    alpha = _check_alpha(alpha)
    if g.n < 1:
        raise ValueError("crux of the empty graph is undefined")
    left = [budget]
    notes = []
    lo = counting_lower_bound(g, alpha)
    best = frozenset(range(g.n))
    cand = _peel_sequence(g, range(g.n), alpha, left)
    if cand is not None and len(cand) < len(best):
        best = cand
    order = sorted(range(g.n), key=lambda v: (-g.degree(v), v))
    rng = random.Random(seed)
    limit = max_seeds if max_seeds is not None else min(g.n, 64)
    seeds = order[: limit // 2]
    rest = order[limit // 2:]
    seeds += rng.sample(rest, min(len(rest), limit - len(seeds)))
    for v in seeds:
        if left[0] <= 0 or len(best) == lo:
            break
        region = ball(g, [v], radius).vertices
        cand = _peel_sequence(g, region, alpha, left)
        if cand is not None and len(cand) < len(best):
            best = cand
    best = _shrink(g, best, alpha, left)
    if left[0] <= 0:
        notes.append("node budget exhausted")
    notes.append("lo: counting bound (C(s,2) and top-s degree sums); sound")
    notes.append("hi: greedy peel + shrink witness; expansion failures |N(X)|<K|X| only "
                 "ever certify upper bounds, so none are used for lo")
    return CruxResult(alpha, lo, len(best), best, "bounded", nodes=budget - left[0], notes=notes)


def crux(g: Graph, alpha, method: str = "auto", budget: int = 10**7) -> CruxResult:
    if method == "exact" or (method == "auto" and g.n <= 16):
        return crux_exact(g, alpha)
    return crux_bounded(g, alpha, budget=budget)


# (D, mu)-density ---------------------------------------------------------------

@dataclass(frozen=True)
class DenseParams:
    D: int
    mu: Fraction

    def __post_init__(self):
        if self.D < 1:
            raise ValueError("D must be at least 1")
        mu = as_fraction(self.mu)
        if not 0 < mu <= 1:
            raise ValueError("mu must lie in (0, 1]")
        object.__setattr__(self, "mu", mu)


@dataclass
class DenseReport:
    passed: bool
    mode: str
    checked: int
    violation: frozenset | None = None


def _keeps_density(g: Graph, removed_edges_left: int, remaining: int, mu: Fraction) -> bool:
    # 2e(G-W)/(n-|W|) >= mu * 2e(G)/n
    return removed_edges_left * g.n * mu.denominator >= mu.numerator * g.m * remaining


def is_dense(g: Graph, p: DenseParams, mode: str = "exhaustive", *, trials: int = 500,
             seed: int = 0) -> DenseReport:
    """Whether d(G - W) >= mu d(G) for every W with |W| < D (and |W| < n)."""
    n = g.n
    maxw = min(p.D - 1, n - 1)
    if maxw <= 0:
        return DenseReport(True, mode, 1 if maxw == 0 else 0)
    if mode == "exhaustive":
        if n > DENSE_EXHAUSTIVE_LIMIT:
            raise ValueError(f"exhaustive density check needs n <= {DENSE_EXHAUSTIVE_LIMIT}")
        etab = edge_count_table(g).astype(np.int64)
        sizes = popcounts(n)
        full = (1 << n) - 1
        idx = np.arange(1 << n, dtype=np.int64)
        sel = sizes <= maxw
        w_masks = idx[sel]
        remaining = n - sizes[sel].astype(np.int64)
        left = etab[full ^ w_masks]
        ok = left * n * p.mu.denominator >= p.mu.numerator * g.m * remaining
        bad = w_masks[~ok]
        if bad.size:
            bsz = sizes[bad]
            smallest = bad[bsz == bsz.min()]
            viol = min((mask_to_set(int(b)) for b in smallest), key=lambda s: sorted(s))
            return DenseReport(False, mode, int(sel.sum()), viol)
        return DenseReport(True, mode, int(sel.sum()))
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    rng = random.Random(seed)
    checked = 0
    candidates = []
    top = sorted(range(n), key=lambda v: (-g.degree(v), v))
    for s in range(1, maxw + 1):
        candidates.append(frozenset(top[:s]))
    for _ in range(trials):
        s = rng.randint(1, maxw)
        candidates.append(frozenset(rng.sample(range(n), s)))
    for w in candidates:
        checked += 1
        left = g.m - sum(g.degree(v) for v in w) + g.edges_within(w)
        if not _keeps_density(g, left, n - len(w), p.mu):
            return DenseReport(False, mode, checked, w)
    return DenseReport(True, mode, checked)


# theorem checks ----------------------------------------------------------------

@dataclass
class LemmaReport:
    status: str  # "pass", "fail" or "precondition"
    message: str = ""
    crux: int | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def half_min_degree(g: Graph) -> bool:
    """delta(G) >= d(G)/2, exactly."""
    return g.n > 0 and g.min_degree * g.n >= g.m


def check_lemma_robust(g: Graph, alpha) -> LemmaReport:
    """With delta >= d/2 and alpha <= 1/5, G must be (ceil(C_alpha/2), (1-3alpha)/4)-dense."""
    alpha = _check_alpha(alpha)
    if not half_min_degree(g):
        return LemmaReport("precondition", "needs delta(G) >= d(G)/2")
    if alpha > Fraction(1, 5):
        return LemmaReport("precondition", "needs alpha <= 1/5")
    if g.n > DENSE_EXHAUSTIVE_LIMIT:
        return LemmaReport("precondition", f"exhaustive check limited to n <= {DENSE_EXHAUSTIVE_LIMIT}")
    c = crux_exact(g, alpha).hi
    D = math.ceil(Fraction(c, 2))
    mu = (1 - 3 * alpha) / 4
    rep = is_dense(g, DenseParams(D, mu), "exhaustive")
    details = {"D": D, "mu": str(mu), "checked": rep.checked}
    if rep.passed:
        return LemmaReport("pass", crux=c, details=details)
    details["W"] = sorted(rep.violation)
    return LemmaReport("fail", "density drop after removing W: implementation/theory mismatch",
                       crux=c, details=details)


def check_lemma_kexpan(g: Graph, alpha, K) -> LemmaReport:
    """With delta >= d/2 and alpha <= 1/(2K+2), every X with |X| <= C_alpha/(K+1) has |N(X)| >= K|X|."""
    alpha = _check_alpha(alpha)
    K = as_fraction(K)
    if K <= 0:
        return LemmaReport("precondition", "needs K > 0")
    if not half_min_degree(g):
        return LemmaReport("precondition", "needs delta(G) >= d(G)/2")
    if alpha > 1 / (2 * K + 2):
        return LemmaReport("precondition", "needs alpha <= 1/(2K+2)")
    if g.n > KEXPAN_LIMIT:
        return LemmaReport("precondition", f"exhaustive check limited to n <= {KEXPAN_LIMIT}")
    c = crux_exact(g, alpha).hi
    bound = math.floor(Fraction(c) / (K + 1))
    details = {"size_bound": bound}
    if bound < 1:
        return LemmaReport("pass", "no X in range", crux=c, details=details)
    n = g.n
    table = neighbor_union_table(g)
    idx = np.arange(1 << n, dtype=np.uint32)
    sizes = popcounts(n).astype(np.int64)
    nsize = np.bitwise_count(table & ~idx).astype(np.int64)
    sel = (sizes >= 1) & (sizes <= bound)
    bad = sel & (nsize * K.denominator < K.numerator * sizes)
    details["checked"] = int(sel.sum())
    if bad.any():
        first = mask_to_set(int(np.nonzero(bad)[0][0]))
        details["X"] = sorted(first)
        return LemmaReport("fail", "|N(X)| < K|X|: implementation/theory mismatch", crux=c, details=details)
    return LemmaReport("pass", crux=c, details=details)


def naive_crux(g: Graph, alpha) -> int:
    """Plain enumeration of all subsets by size; no pruning."""
    alpha = as_fraction(alpha)
    for s in range(1, g.n + 1):
        for combo in itertools.combinations(range(g.n), s):
            if is_crux(g, combo, alpha):
                return s
    return g.n
