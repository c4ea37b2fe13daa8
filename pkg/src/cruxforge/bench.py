"""Benchmark harness: one pipeline run per (family, seed) cell, written as CSV.

Family strings use the generator grammar with ``{seed}`` substituted, e.g.
``blowup:4:random_regular:40,3,{seed}``.  Rows are bit-stable for fixed
inputs; ``runtime_ms`` is left blank unless timing is requested.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

from .crux import crux_bounded, crux_exact
from .generators import generate
from .graph import Graph, average_degree
from .pipeline import PipelineConfig, dispatch
from .structures import verify_certificate

CSV_VERSION = 1


@dataclass
class BenchRow:
    family: str
    seed: int
    n: int
    d: str
    alpha: str
    crux_lo: int
    crux_hi: int
    theory_t: str
    cap: int
    achieved_t: int
    ref_d_sqrtlog: str
    t_over_d: str
    case: str
    source: str
    status: str
    runtime_ms: str = ""


COLUMNS = [f.name for f in fields(BenchRow)]
HEADER_COMMENT = f"# cruxforge-bench v{CSV_VERSION} columns={','.join(COLUMNS)}"


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def theoretical_t(d: float, crux_value: int) -> float:
    """min{d, sqrt(C / ln C)}; zero when C is too small for the formula to make sense."""
    if crux_value < 2:
        return 0.0
    return min(d, math.sqrt(crux_value / math.log(crux_value)))


def degree_cap(g: Graph) -> int:
    """Largest t with t vertices of degree >= t-1 and C(t,2) <= e(G); no TK_t can beat it."""
    degs = sorted(g.degrees, reverse=True)
    best = min(g.n, 1)
    for t in range(2, g.n + 1):
        if degs[t - 1] >= t - 1 and t * (t - 1) // 2 <= g.m:
            best = t
    return best


def bipartite_cap(a: int, b: int) -> int:
    """Upper bound on t for TK_t in K_{a,b}.

    With s branch vertices on the a-side and r on the b-side, every same-side
    pair needs its own internal vertex on the other side.
    """
    best = 0
    for s in range(a + 1):
        for r in range(b + 1):
            if s * (s - 1) // 2 <= b - r and r * (r - 1) // 2 <= a - s:
                best = max(best, s + r)
    return best


def family_cap(family: str, g: Graph) -> int:
    cap = degree_cap(g)
    name, _, args = family.partition(":")
    if name == "complete_bipartite" and "+" not in family:
        a, b = (int(x) for x in args.split(","))
        cap = min(cap, bipartite_cap(a, b))
    return cap


def run_cell(family: str, seed: int, config: dict | None = None, timing: bool = False) -> BenchRow:
    started = time.perf_counter()
    cfg = PipelineConfig.from_dict({**(config or {}), "seed": seed})
    alpha = f"{cfg.alpha.numerator}/{cfg.alpha.denominator}"
    spec = family.replace("{seed}", str(seed))
    row = BenchRow(family, seed, 0, "", alpha, 0, 0, "", 0, 0, "", "", "", "", "")
    try:
        g = generate(spec)
        d = float(average_degree(g)) if g.n else 0.0
        row.n, row.d = g.n, _fmt(d)
        cr = crux_exact(g, cfg.alpha) if g.n <= 16 else crux_bounded(g, cfg.alpha, budget=cfg.crux_budget)
        row.crux_lo, row.crux_hi = cr.lo, cr.hi
        row.theory_t = _fmt(theoretical_t(d, cr.hi))
        row.cap = family_cap(spec, g)
        row.ref_d_sqrtlog = _fmt(d / math.sqrt(math.log(d))) if d > 1 else ""
        trace = dispatch(g, cfg)
        row.case, row.source = trace.case, trace.source
        if trace.certificate is None:
            row.status = "no certificate"
        else:
            rep = verify_certificate(g, trace.certificate)
            if not rep.ok:
                row.status = f"rejected: {rep.message}"
            else:
                row.achieved_t = trace.t
                row.t_over_d = _fmt(trace.t / d) if d else ""
                row.status = "ok"
    except Exception as exc:  # recorded per row; the run goes on
        row.status = f"error: {type(exc).__name__}: {exc}"
    if timing:
        row.runtime_ms = str(round((time.perf_counter() - started) * 1000))
    return row


def _cell(args):
    return run_cell(*args)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("FORGE_THREADS", "1")))
    except ValueError:
        return 1


def run_bench(families: list[str], seeds: list[int], config: dict | None = None,
              timing: bool = False, workers: int | None = None) -> list[BenchRow]:
    cells = [(f, s, config, timing) for f in families for s in seeds]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(cells) <= 1:
        return [_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=min(workers, len(cells))) as pool:
        return list(pool.map(_cell, cells))


def rows_to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    buf.write(HEADER_COMMENT + "\n")
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(asdict(r))
    return buf.getvalue()


def rows_from_csv(text: str) -> list[dict]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# cruxforge-bench v"):
        raise ValueError("missing bench header comment")
    return list(csv.DictReader(lines[1:]))
