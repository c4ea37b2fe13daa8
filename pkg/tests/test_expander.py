import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cruxforge.expander import (ExpansionParams, PreconditionError, check_expander, extract_expander,
                                removal_threshold, rho, robust_subset_removal, size_window)
from cruxforge.generators import attach_path, complete, disjoint_union, path
from cruxforge.graph import Graph

from conftest import small_graphs


def naive_violators(g, params):
    out = []
    for s in size_window(g.n, params.k):
        for x in itertools.combinations(range(g.n), s):
            nbr = set().union(*(g.nbr_sets[v] for v in x)) - set(x)
            if len(nbr) < rho(s, params) * s - 1e-9:
                out.append(frozenset(x))
    return out


def test_rho_values():
    p = ExpansionParams(0.1, 10)
    assert rho(1, p) == 0
    assert rho(10, p) == pytest.approx(0.1 / math.log(15) ** 2, abs=1e-9)
    assert round(rho(10, p), 6) == 0.013636


@given(st.floats(2, 1e6))
def test_rho_decreasing(x):
    p = ExpansionParams(0.1, 10)
    assert rho(2 * x, p) < rho(x, p)


def test_params_validated():
    with pytest.raises(ValueError):
        ExpansionParams(1.5, 4)
    with pytest.raises(ValueError):
        ExpansionParams(0.1, 0.5)


def test_check_expander_examples():
    assert check_expander(complete(8), ExpansionParams(0.05, 4)).passed
    two = disjoint_union(complete(8), complete(8))
    rep = check_expander(two, ExpansionParams(0.05, 4), max_violations=None)
    assert not rep.passed
    assert frozenset(range(8)) in rep.violations
    # with eps=0.3, k=4 no segment of P_20 violates (rho(s)s < 1 on the whole window)
    assert check_expander(path(20), ExpansionParams(0.3, 4)).passed
    p20 = ExpansionParams(0.9, 20)
    rep = check_expander(path(20), p20)
    assert not rep.passed
    assert rep.violations[0] in naive_violators(path(20), p20)


@given(small_graphs(max_n=9), st.sampled_from([0.1, 0.3, 0.9]), st.sampled_from([1, 2, 4]))
@settings(max_examples=80, deadline=None)
def test_exhaustive_matches_naive(g, eps, k):
    params = ExpansionParams(eps, k)
    rep = check_expander(g, params, max_violations=None)
    expected = naive_violators(g, params)
    assert rep.passed == (not expected)
    assert set(rep.violations) == set(expected)


def test_sampled_finds_disconnection():
    two = disjoint_union(complete(30), complete(30))
    rep = check_expander(two, ExpansionParams(0.1, 4), "sampled", trials=50, seed=1)
    assert not rep.passed


def test_sampled_is_seeded():
    g = path(40)
    a = check_expander(g, ExpansionParams(0.3, 4), "sampled", trials=30, seed=5).to_dict()
    b = check_expander(g, ExpansionParams(0.3, 4), "sampled", trials=30, seed=5).to_dict()
    assert a == b


def test_extract_examples():
    params = ExpansionParams(0.1, 2)
    assert extract_expander(complete(10), params).members == frozenset(range(10))
    w = extract_expander(attach_path(complete(10), 0, 10), params)
    assert w.members == frozenset(range(10))
    w = extract_expander(disjoint_union(complete(8), complete(4)), params)
    assert w.members == frozenset(range(8))
    assert w.certified == "verified_exhaustive"


@given(small_graphs(min_n=2, max_n=12))
@settings(max_examples=60, deadline=None)
def test_extract_degree_contract(g):
    if g.m == 0:
        return
    h = extract_expander(g, ExpansionParams(0.2, 1), trials=20).subgraph
    assert 2 * h.m * g.n >= g.m * h.n          # d(H) >= d(G)/2
    assert h.min_degree * h.n >= h.m           # delta(H) >= d(H)/2


def test_extract_needs_edges():
    with pytest.raises(ValueError):
        extract_expander(Graph(3), ExpansionParams(0.1, 1))


def test_robust_removal():
    params = ExpansionParams(0.9, 60)
    w = extract_expander(complete(20), params)
    assert robust_subset_removal(w, ()) is w
    assert removal_threshold(w.subgraph, params) > 1
    y = robust_subset_removal(w, {0})
    assert y.subgraph.n == 19 and y.subgraph.m == 171
    with pytest.raises(PreconditionError) as err:
        robust_subset_removal(w, set(range(10)))
    assert err.value.threshold == pytest.approx(removal_threshold(w.subgraph, params))
