import json
from pathlib import Path

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cruxforge.connector import (Bipartition, ConsecutivePaths, PathRequest, UnreachableError, check_path, connect_through,
                                 expansion_dichotomy, extend_consecutive, grow_ball_avoiding, lemma_cap,
                                 robust_connect, sample_bipartition, sprinkle_probabilities, sprinkled_ball,
                                 stars_or_bipartite, well_expanding_subset)
from cruxforge.expander import ExpansionParams
from cruxforge.generators import (complete, complete_bipartite, disjoint_union, grid, hypercube, path,
                                  random_regular, star)
from cruxforge.graph import Graph, ball

from conftest import bfs_prefix, small_graphs

FIXTURES = Path(__file__).parent / "fixtures"
PARAMS = ExpansionParams(0.5, 2)


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges())
    return h


def test_adjacent_sets():
    g = path(4)
    p = robust_connect(g, PathRequest({0, 1}, {2, 3}), PARAMS)
    assert len(p) - 1 <= 1


def test_hypercube_antipodal():
    g = hypercube(6)
    x1 = ball(g, {0}, 1).vertices
    x2 = ball(g, {63}, 1).vertices
    diag = {}
    p = robust_connect(g, PathRequest(x1, x2, forbidden={3, 5}), ExpansionParams(0.5, 4), diag)
    assert p is not None and len(p) - 1 <= diag["cap"]
    assert len(p) - 1 == 4  # BFS oracle: distance 6 between centres, minus one step at each end


def test_separating_forbidden_set():
    diag = {}
    assert robust_connect(path(5), PathRequest({0}, {4}, forbidden={2}), PARAMS, diag) is None
    assert diag["reason"] == "disconnected"


def test_cap_rejects_long_paths():
    diag = {}
    assert robust_connect(path(10), PathRequest({0}, {9}, length_cap=3), PARAMS, diag) is None
    assert diag["reason"] == "cap" and diag["length"] == 9


def test_lemma_cap_formula():
    assert lemma_cap(100, ExpansionParams(0.5, 10)) == 504  # ceil(4 ln^3 150) = ceil(503.6)
    assert lemma_cap(1, ExpansionParams(0.5, 10)) == 1


@given(small_graphs(min_n=2, max_n=9), st.data())
@settings(max_examples=60, deadline=None)
def test_robust_connect_is_shortest(g, data):
    verts = list(range(g.n))
    a = data.draw(st.sampled_from(verts))
    b = data.draw(st.sampled_from(verts))
    forb = set(data.draw(st.lists(st.sampled_from(verts), max_size=3))) - {a, b}
    p = robust_connect(g, PathRequest({a}, {b}, forb, length_cap=g.n), PARAMS)
    h = to_nx(g)
    h.remove_nodes_from(forb)
    if nx.has_path(h, a, b):
        assert p is not None and len(p) - 1 == nx.shortest_path_length(h, a, b)
        check_path(g, p, forb)
    else:
        assert p is None


def test_consecutive_paths():
    g = path(5)
    cp = extend_consecutive(ConsecutivePaths(g, 0, frozenset(range(5))), 2)
    assert cp.paths == ((0, 1, 2),)


def test_consecutive_detour_on_grid():
    g = grid(3, 3)  # vertex r*3+c
    cp = ConsecutivePaths(g, 0, frozenset(range(9)))
    cp = extend_consecutive(cp, 2)
    assert cp.paths[0] == (0, 1, 2)
    cp = extend_consecutive(cp, 5)
    # 1 and 2 are used, so the detour runs 0-3-4-5
    assert cp.paths[1] == (0, 3, 4, 5)
    assert cp.revalidate()


def test_consecutive_target_swallowed():
    g = path(4)
    cp = extend_consecutive(ConsecutivePaths(g, 0, frozenset(range(4))), 3)
    with pytest.raises(UnreachableError):
        extend_consecutive(cp, 2)


def test_grow_ball():
    g = complete(20)
    empty = ConsecutivePaths(g, 0, frozenset(range(20)))
    assert grow_ball_avoiding(g, 0, empty, 5).radius == 1
    cp = ConsecutivePaths(g, 0, frozenset(range(20)), ((0, 1, 2),))
    res = grow_ball_avoiding(g, 3, cp, 15)
    assert res.radius == 1 and res.reached and res.size == 18
    short = grow_ball_avoiding(path(6), 0, ConsecutivePaths(path(6), 0, frozenset(range(6))), 50, ell_cap=10)
    assert not short.reached and short.size == 6


def test_bipartition():
    g = random_regular(200, 6, 3)
    a, b = sample_bipartition(g, 11), sample_bipartition(g, 11)
    assert a == b and a.v1 | a.v2 == frozenset(range(200)) and not a.v1 & a.v2
    e = sample_bipartition(Graph(0), 1)
    assert e.d1 == e.d2 == 0


def test_bipartition_large_keeps_degree():
    g = random_regular(10_000, 20, 5)
    part = sample_bipartition(g, 2)
    assert part.d1 >= 20 / 3 and part.d2 >= 20 / 3


def test_connect_through():
    g = complete(6)
    part = sample_bipartition(g, 0)
    x1 = min(part.v1)
    mid = min(part.v2)
    x2 = max(part.v1 - {x1}) if len(part.v1) > 1 else max(part.v2 - {mid})
    p = connect_through(g, part, PathRequest({x1}, {x2}), m=2)
    assert p is not None and len(p) - 1 <= 2
    check_path(g, p, through=part.v2)


def test_connect_through_regression():
    g = random_regular(2000, 3, 4)
    part = sample_bipartition(g, 9)
    forb = set(sorted(part.v2)[:5])
    inner = to_nx(g).subgraph(part.v2 - forb)
    big = max(nx.connected_components(inner), key=lambda c: (len(c), -min(c)))
    ends = sorted(v for v in part.v1 if any(w in big for w in g.adj[v]))
    src, dst = ends[0], ends[-1]
    p = connect_through(g, part, PathRequest({src}, {dst}, forb, length_cap=2000), m=3)
    assert p is not None
    assert all(v in part.v2 for v in p[1:-1]) and not forb & set(p)
    h = to_nx(g).subgraph(part.v2 - forb | {src, dst})
    assert len(p) - 1 == nx.shortest_path_length(h, src, dst)


def test_connect_through_empty_side():
    g = path(3)
    part = Bipartition(0, frozenset({0, 1, 2}), frozenset())
    diag = {}
    assert connect_through(g, part, PathRequest({0}, {2}), m=2, diag=diag) is None
    assert diag["reason"] == "disconnected"


def test_dichotomy():
    g = complete(10)
    d = expansion_dichotomy(g, {0, 1, 2}, 2, m=2)  # (a): 7 >= 9*3/(2*2)
    assert d.a and d.b and len(d.heavy) == 7
    s = expansion_dichotomy(star(6), {0}, 2, m=1)
    assert s.boundary == frozenset(range(1, 7)) and not s.heavy
    with pytest.raises(ValueError):
        expansion_dichotomy(g, set(), 2, 1)


def test_stars_or_bipartite():
    forest = disjoint_union(star(4), star(4), star(4))
    res = stars_or_bipartite(forest, {0, 5, 10}, set(), lam=1, s=1, t=4, m=1)
    assert res.kind == "stars" and len(res.stars) == 3
    kb = complete_bipartite(20, 20)
    res = stars_or_bipartite(kb, set(range(20)), set(), lam=2, s=1, t=5, m=1)
    assert res.kind == "bipartite" and len(res.x) >= 5
    res = stars_or_bipartite(path(3), {0}, set(), lam=2, s=1, t=5, m=1)
    assert res.kind == "shortfall"


def test_well_expanding():
    res = well_expanding_subset(star(8), {0}, kappa=3, m=1)
    assert res.subset == {0}
    res = well_expanding_subset(complete(10), set(range(5)), kappa=1, m=1)
    assert res.subset == frozenset(range(5)) and res.boundary == 5
    res = well_expanding_subset(complete(10), set(range(5)), kappa=100, m=1)
    assert not res.subset and not res.ok and "reason" in res.diagnostics


def test_sprinkle_probabilities():
    ell, p, q = sprinkle_probabilities(3)
    assert ell == 9 and q == 9 / 20
    assert (1 - p) ** (ell - 1) * (1 - q) == pytest.approx(0.5, abs=1e-12)


def test_sprinkle_trivial_cases():
    g = random_regular(100, 4, 1)
    res = sprinkled_ball(g, 0, range(100), (), 2)
    assert res.success and res.rounds == 0 and res.reached == frozenset(range(100))
    two = disjoint_union(complete(5), complete(5))
    res = sprinkled_ball(two, 3, {0}, (), 2)
    assert not res.reached & frozenset(range(5, 10))


def test_sprinkle_fixture_replays():
    fx = json.loads((FIXTURES / "sprinkle_rr10_5000.json").read_text())
    g = random_regular(5000, 10, 7)
    for run in fx["runs"][:3]:
        res = sprinkled_ball(g, run["seed"], bfs_prefix(g, run["root"], fx["ball_size"]), (), fx["m"])
        assert (res.success, res.rounds, len(res.reached)) == (run["success"], run["rounds"], run["reached"])
