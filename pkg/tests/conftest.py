import itertools
from collections import deque
import random

from hypothesis import strategies as st

from cruxforge.graph import Graph


@st.composite
def small_graphs(draw, min_n=1, max_n=9):
    n = draw(st.integers(min_n, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph(n, [p for p, keep in zip(pairs, mask) if keep])


def seeded_graph(seed: int, n_lo: int = 4, n_hi: int = 10) -> Graph:
    """G(n, p) with n and p both drawn from ``seed``."""
    rng = random.Random(seed)
    n = rng.randint(n_lo, n_hi)
    p = rng.uniform(0.2, 0.9)
    return Graph(n, [e for e in itertools.combinations(range(n), 2) if rng.random() < p])


def bfs_prefix(g: Graph, root: int, size: int) -> list[int]:
    """First ``size`` vertices in BFS order from ``root`` (neighbours by id)."""
    seen, order, queue = {root}, [root], deque([root])
    while queue and len(order) < size:
        for w in sorted(g.adj[queue.popleft()]):
            if w not in seen and len(order) < size:
                seen.add(w)
                order.append(w)
                queue.append(w)
    return order


ACCEPTANCE: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> None:
    """Log one acceptance line; the summary hook prints them all at the end."""
    line = f"{criterion} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
