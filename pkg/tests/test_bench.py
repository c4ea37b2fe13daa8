import csv

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cruxforge.bench import (COLUMNS, HEADER_COMMENT, bipartite_cap, degree_cap, rows_from_csv, rows_to_csv,
                             run_bench, run_cell, theoretical_t)
from cruxforge.generators import complete, complete_bipartite
from cruxforge.structures import find_subdivision_bruteforce


def test_empty_family_list():
    text = rows_to_csv(run_bench([], [0, 1]))
    assert text.splitlines() == [HEADER_COMMENT, ",".join(COLUMNS)]


def test_bipartite_row_within_cap():
    row = run_cell("complete_bipartite:6,6", 0)
    assert row.status == "ok"
    assert row.achieved_t <= row.cap == bipartite_cap(6, 6)


@pytest.mark.parametrize("a, b", [(2, 2), (3, 3), (2, 4), (4, 4)])
def test_bipartite_cap_is_sound(a, b):
    g = complete_bipartite(a, b)
    cap = bipartite_cap(a, b)
    assert not find_subdivision_bruteforce(g, cap + 1).found
    assert find_subdivision_bruteforce(g, cap).found


@given(st.integers(1, 9))
@settings(max_examples=9, deadline=None)
def test_degree_cap_complete(n):
    assert degree_cap(complete(n)) == n


def test_theoretical_t():
    assert theoretical_t(3.0, 1) == 0
    assert theoretical_t(100.0, 100) == pytest.approx((100 / 4.605170185988092) ** 0.5)
    assert theoretical_t(2.0, 10**6) == 2.0


def test_blowup_row_has_reference():
    row = run_cell("blowup:2:random_regular:40,3,{seed}", 1)
    assert row.status == "ok" and row.ref_d_sqrtlog == "4.4824"  # 6 / sqrt(ln 6)
    assert row.family == "blowup:2:random_regular:40,3,{seed}"


def test_failure_recorded_and_run_continues():
    rows = run_bench(["nonsense:1", "complete:5"], [0])
    assert rows[0].status.startswith("error") and rows[1].status == "ok"


def test_csv_is_byte_stable():
    fams = ["complete:6", "random_regular:60,4,{seed}"]
    a = rows_to_csv(run_bench(fams, [0, 1]))
    b = rows_to_csv(run_bench(fams, [0, 1]))
    assert a == b
    parsed = rows_from_csv(a)
    assert [r["seed"] for r in parsed] == ["0", "1", "0", "1"]
    assert all(r["runtime_ms"] == "" for r in parsed)


def test_parallel_matches_serial(monkeypatch):
    fams = ["complete:5", "cycle:8"]
    serial = rows_to_csv(run_bench(fams, [0, 1], workers=1))
    assert rows_to_csv(run_bench(fams, [0, 1], workers=2)) == serial
    monkeypatch.setenv("FORGE_THREADS", "2")
    assert rows_to_csv(run_bench(fams, [0, 1])) == serial


def test_timing_column():
    row = run_cell("complete:4", 0, timing=True)
    assert row.runtime_ms.isdigit()


def test_csv_header_required():
    with pytest.raises(ValueError):
        rows_from_csv("family,seed\n")
