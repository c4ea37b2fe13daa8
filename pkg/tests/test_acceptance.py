"""Acceptance criteria 1-9; each test logs one PASS/FAIL line (see conftest.record)."""

import itertools
import json
import math
import random
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

from cruxforge.bench import run_bench
from cruxforge.connector import PathRequest, check_path, lemma_cap, robust_connect, sprinkled_ball
from cruxforge.crux import check_lemma_kexpan, check_lemma_robust, crux_bounded, crux_exact, half_min_degree
from cruxforge.expander import ExpansionParams, check_expander, extract_expander, rho
from cruxforge.generators import complete_bipartite, random_regular
from cruxforge.graph import Graph, induced, peel_min_degree
from cruxforge.pipeline import PipelineConfig, dispatch
from cruxforge.structures import SubdivisionCertificate, find_subdivision_bruteforce, verify_certificate

from conftest import bfs_prefix, record, seeded_graph

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = Path(__file__).parent / "fixtures"


# 1 -----------------------------------------------------------------------------

def fake_certificates(count, seed):
    """Certificates claiming TK_4 in K_{2,2}: random junk plus near-misses built from real walks."""
    rng = random.Random(seed)
    g = complete_bipartite(2, 2)
    pairs = list(itertools.combinations(range(4), 2))
    for i in range(count):
        branch = tuple(rng.sample(range(4), 4)) if i % 4 else tuple(rng.choice(range(-1, 5)) for _ in range(4))
        paths = {}
        for a, b in pairs:
            if i % 2 and 0 <= min(branch[a], branch[b]) and max(branch[a], branch[b]) < 4:
                walk = [branch[a]]
                while walk[-1] != branch[b] and len(walk) < 4:
                    walk.append(rng.choice(g.adj[walk[-1]]))
                paths[(a, b)] = tuple(walk if walk[-1] == branch[b] else walk + [branch[b]])
            else:
                mids = [rng.randrange(4) for _ in range(rng.randint(0, 2))]
                paths[(a, b)] = (branch[a], *mids, branch[b])
        if i % 7 == 0:
            paths.pop(rng.choice(pairs))
        yield SubdivisionCertificate(4, branch, paths)


def test_a1_jung_rejection():
    start = time.perf_counter()
    g = complete_bipartite(2, 2)
    search = find_subdivision_bruteforce(g, 4)
    rejected = sum(not verify_certificate(g, c).ok for c in fake_certificates(1000, 0))
    secs = time.perf_counter() - start
    ok = not search.found and not search.budget_exhausted and rejected == 1000 and secs < 1.0
    record("A1", ok, f"K_2,2 has no TK_4 (complete search, {search.nodes} nodes after degree pruning); "
                     f"{rejected}/1000 fake certificates rejected; {secs:.2f}s < 1s")
    assert ok


# 2 -----------------------------------------------------------------------------

def test_a2_oracle_equivalence():
    start = time.perf_counter()
    mismatches = []
    for seed in range(200):
        g = seeded_graph(seed, 2, 10)
        trace = dispatch(g, PipelineConfig(seed=seed))
        cert = trace.certificate
        if cert is None or not verify_certificate(g, cert).ok:
            mismatches.append((seed, "certificate"))
            continue
        if not find_subdivision_bruteforce(g, cert.t).found:
            mismatches.append((seed, "bruteforce"))
    secs = time.perf_counter() - start
    ok = not mismatches and secs < 300
    record("A2", ok, f"200 random graphs n<=10: {len(mismatches)} mismatches; {secs:.1f}s < 300s")
    assert ok, mismatches[:5]


# 3 -----------------------------------------------------------------------------

def mask_oracle_crux(g, alpha):
    """Scan every subset by size via bitmasks; no pruning at all."""
    n, m = g.n, g.m
    adj = [sum(1 << u for u in g.adj[v]) for v in range(n)]
    best = n
    for mask in range(1, 1 << n):
        s = bin(mask).count("1")
        if s >= best:
            continue
        twice_e = sum(bin(adj[v] & mask).count("1") for v in range(n) if mask >> v & 1)
        if twice_e * n * alpha.denominator >= alpha.numerator * 2 * m * s:
            best = s
    return best


def test_a3_crux_exactness():
    start = time.perf_counter()
    alphas = [Fraction(1, 10), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(9, 10)]
    bad = []
    checked = 0
    for seed in range(500):
        g = seeded_graph(seed, 2, 12)
        if g.m == 0:
            continue
        alpha = alphas[seed % len(alphas)]
        exact = crux_exact(g, alpha).hi
        if exact != mask_oracle_crux(g, alpha):
            bad.append((seed, "exact"))
        b = crux_bounded(g, alpha)
        if not b.lo <= exact <= b.hi:
            bad.append((seed, "interval"))
        checked += 1
    secs = time.perf_counter() - start
    ok = not bad and checked >= 450 and secs < 600
    record("A3", ok, f"crux_exact = naive enumerator and bounded interval contains it on {checked} "
                     f"graphs n<=12 (500 seeds); {len(bad)} failures; {secs:.1f}s < 600s")
    assert ok, bad[:5]


# 4 -----------------------------------------------------------------------------

def lemma_fixtures():
    """Graphs on <= 16 vertices with delta >= d/2: random graphs after the min-degree peel, plus regular ones."""
    out = []
    for seed in range(400):
        g = seeded_graph(seed, 5, 16)
        if g.m == 0:
            continue
        h = induced(g, peel_min_degree(g))
        if h.n >= 3 and h.m and half_min_degree(h):
            out.append(h)
    for n, d in [(10, 3), (12, 3), (14, 3), (16, 3), (12, 4), (14, 4), (16, 4), (16, 5), (10, 6), (14, 6)]:
        out.append(random_regular(n, d, n + d))
    return out


def test_a4_theorem_checks():
    start = time.perf_counter()
    graphs = lemma_fixtures()
    runs = fails = 0
    failures = []
    for i, g in enumerate(graphs):
        for alpha in ("1/5", "1/10"):
            rep = check_lemma_robust(g, alpha)
            if rep.status != "precondition":
                runs += 1
                if not rep.passed:
                    fails += 1
                    failures.append((i, "robust", alpha, rep.details))
        for K in ("1", "3/2", "2"):
            alpha = 1 / (2 * Fraction(K) + 2)
            rep = check_lemma_kexpan(g, alpha, K)
            if rep.status != "precondition":
                runs += 1
                if not rep.passed:
                    fails += 1
                    failures.append((i, "kexpan", K, rep.details))
    secs = time.perf_counter() - start
    ok = len(graphs) >= 100 and fails == 0
    record("A4", ok, f"lemma checks on {len(graphs)} graphs (n<=16, delta>=d/2): {runs} runs, "
                     f"{fails} failures; {secs:.1f}s")
    assert ok, failures[:3]


# 5 -----------------------------------------------------------------------------

def extraction_graph(seed):
    rng = random.Random(seed)
    n = rng.randint(6, 16)
    p = rng.uniform(0.08, 0.7)
    if seed % 3 == 0:
        return Graph(n, [e for e in itertools.combinations(range(n), 2) if rng.random() < p])
    a = rng.randint(3, n - 3)
    edges = [e for e in itertools.combinations(range(a), 2) if rng.random() < 1.5 * p]
    edges += [(a + u, a + v) for u, v in itertools.combinations(range(n - a), 2) if rng.random() < p]
    if seed % 3 == 2:
        edges.append((0, a))
    return Graph(n, edges)


def test_a5_extraction_contract():
    start = time.perf_counter()
    done = bad_degree = bad_expansion = 0
    seed = 0
    while done < 300:
        g = extraction_graph(seed)
        rng = random.Random(10_000 + seed)
        seed += 1
        if g.m == 0:
            continue
        params = ExpansionParams(rng.choice([0.1, 0.3, 0.6, 0.9]), rng.choice([1, 2, 3, 5]))
        h = extract_expander(g, params, trials=50, seed=seed).subgraph
        done += 1
        # d(H) >= d(G)/2 and delta(H) >= d(H)/2, in integers
        if not (2 * h.m * g.n >= g.m * h.n and h.min_degree * h.n >= h.m):
            bad_degree += 1
        if h.n <= 16 and not check_expander(h, params).passed:
            bad_expansion += 1
    secs = time.perf_counter() - start
    ok = bad_degree == 0 and bad_expansion == 0
    record("A5", ok, f"300 extractions: {bad_degree} degree-contract and {bad_expansion} exhaustive "
                     f"expansion failures; {secs:.1f}s")
    assert ok


# 6 -----------------------------------------------------------------------------

def test_a6_connector_contracts():
    start = time.perf_counter()
    params = ExpansionParams(0.9, 4)
    fixtures = []
    for i, (n, d) in enumerate([(300, 6), (400, 8), (500, 10), (600, 6), (800, 8)]):
        w = extract_expander(random_regular(n, d, i), params, trials=100, seed=i)
        assert w.certified.startswith("verified")
        fixtures.append(w.subgraph)
    found = valid = forbidden_total = 0
    for r in range(1000):
        rng = random.Random(r)
        h = fixtures[r % len(fixtures)]
        x = rng.randint(4, h.n // 3)
        x1 = frozenset(bfs_prefix(h, rng.randrange(h.n), x))
        rest = [v for v in range(h.n) if v not in x1]
        sub = induced(h, rest)
        x2 = frozenset(rest[v] for v in bfs_prefix(sub, rng.randrange(sub.n), x))
        size = min(len(x1), len(x2))
        budget = math.floor(rho(size, params) * size / 4 + 1e-9)
        # half the requests aim W at the boundary of X1, the rest at random vertices
        pool = sorted(h.neighborhood(x1) - x2) if r % 2 else [v for v in range(h.n) if v not in x1 | x2]
        w = frozenset(rng.sample(pool, min(budget, len(pool))))
        forbidden_total += len(w)
        path = robust_connect(h, PathRequest(x1, x2, w), params)
        if path is None:
            continue
        found += 1
        try:
            check_path(h, path, w, lemma_cap(h.n, params), ends=(x1, x2))
            valid += 1
        except AssertionError:
            pass
    secs = time.perf_counter() - start
    ok = found >= 990 and valid == found
    record("A6", ok, f"robust_connect {found}/1000 within cap (>= 990), {valid}/{found} re-validate; "
                     f"{forbidden_total} forbidden vertices placed; {secs:.1f}s")
    assert ok


# 7 -----------------------------------------------------------------------------

def test_a7_sprinkled_reachability():
    fx = json.loads((FIXTURES / "sprinkle_rr10_5000.json").read_text())
    n, d, s = (int(x) for x in fx["graph"].split(":")[1].split(","))
    g = random_regular(n, d, s)
    ell = math.ceil(fx["m"] ** 2)
    wins = 0
    replay_ok = True
    for run in fx["runs"]:
        res = sprinkled_ball(g, run["seed"], bfs_prefix(g, run["root"], fx["ball_size"]), (), fx["m"])
        wins += res.success and res.rounds <= ell
        replay_ok &= (res.success, res.rounds, len(res.reached)) == (run["success"], run["rounds"], run["reached"])
    ok = wins >= 18 and replay_ok
    record("A7", ok, f"sprinkled_ball on rr(5000,10): {wins}/20 seeds reach > half the sample within "
                     f"{ell} rounds (>= 18); replay matches fixture: {replay_ok}")
    assert ok


# 8 -----------------------------------------------------------------------------

def test_a8_space_barrier_trend():
    fams = [f"blowup:{f}:random_regular:40,3,{{seed}}" for f in (2, 4, 8)]
    rows = run_bench(fams, [1])
    ts = [r.achieved_t for r in rows]
    ratios = [float(r.t_over_d) for r in rows]
    ok = all(r.status == "ok" for r in rows) and ts[0] < ts[1] < ts[2] and ratios[0] > ratios[1] > ratios[2]
    record("A8", ok, f"blow-ups of rr(40,3) x2/x4/x8: d = {[r.d for r in rows]}, t = {ts}, "
                     f"t/d = {[r.t_over_d for r in rows]}")
    assert ok


# 9 -----------------------------------------------------------------------------

def test_a9_end_to_end_scale(tmp_path):
    graph = tmp_path / "rr8.edges"
    cli = [sys.executable, "-m", "cruxforge.cli"]
    subprocess.run(cli + ["gen", "random_regular:5000,8,1", "-o", str(graph)], check=True)
    start = time.perf_counter()
    proc = subprocess.run(cli + ["find", str(graph), "--config", str(ROOT / "configs" / "desk.json"),
                                 "-o", str(tmp_path / "cert.json")], capture_output=True, text=True)
    secs = time.perf_counter() - start
    t = json.loads((tmp_path / "cert.json").read_text())["t"] if proc.returncode == 0 else 0
    ok = proc.returncode == 0 and secs < 60
    record("A9", ok, f"forge find on rr(5000,8): exit {proc.returncode}, t = {t}, {secs:.1f}s < 60s")
    assert ok, proc.stderr
