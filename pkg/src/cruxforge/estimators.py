"""Estimator-style wrappers around extraction, crux search, and subdivision finding.

Each estimator takes a single graph in ``fit``; ``check_graph`` accepts a
:class:`Graph`, a networkx graph, an ``(n, edges)`` pair, or a square 0/1
adjacency matrix.
"""

from __future__ import annotations

import networkx as nx
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .crux import as_fraction, crux_bounded, crux_exact
from .expander import ExpansionParams, extract_expander
from .graph import Graph, GraphError, average_degree, induced
from .pipeline import PipelineConfig, dispatch


def check_graph(X) -> Graph:
    """Coerce supported graph inputs to :class:`Graph`, rejecting malformed data."""
    if isinstance(X, Graph):
        return X
    if isinstance(X, nx.Graph):
        if X.is_directed() or X.is_multigraph():
            raise GraphError("only simple undirected graphs are supported")
        nodes = sorted(X.nodes())
        index = {v: i for i, v in enumerate(nodes)}
        return Graph(len(nodes), ((index[u], index[v]) for u, v in X.edges()))
    if isinstance(X, tuple) and len(X) == 2:
        n, edges = X
        return Graph(int(n), edges)
    arr = np.asarray(X)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise GraphError(f"expected a square adjacency matrix, got shape {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        raise GraphError("adjacency matrix entries must be 0 or 1")
    if (arr != arr.T).any():
        raise GraphError("adjacency matrix must be symmetric")
    if np.diag(arr).any():
        raise GraphError("adjacency matrix has self-loops")
    us, vs = np.nonzero(np.triu(arr, 1))
    return Graph(arr.shape[0], zip(us.tolist(), vs.tolist()))


class ExpanderExtractor(TransformerMixin, BaseEstimator):
    """Extract a dense expander subgraph; ``transform`` returns it."""

    def __init__(self, epsilon: float = 0.1, k: float | None = None, trials: int = 200, seed: int = 0):
        self.epsilon = epsilon
        self.k = k
        self.trials = trials
        self.seed = seed

    def fit(self, X, y=None):
        g = check_graph(X)
        k = self.k if self.k is not None else max(1.0, self.epsilon * float(average_degree(g)))
        self.witness_ = extract_expander(g, ExpansionParams(self.epsilon, k), trials=self.trials, seed=self.seed)
        self.members_ = sorted(self.witness_.members)
        self.n_input_ = g.n
        return self

    def transform(self, X) -> Graph:
        check_is_fitted(self, "witness_")
        g = check_graph(X)
        if g.n != self.n_input_:
            raise ValueError(f"fitted on {self.n_input_} vertices, got {g.n}")
        return induced(g, self.members_)


class CruxEstimator(BaseEstimator):
    """C_alpha of a graph; exact for small inputs, an interval otherwise."""

    def __init__(self, alpha="1/2", method: str = "auto", budget: int = 10**7, exact_limit: int = 16):
        self.alpha = alpha
        self.method = method
        self.budget = budget
        self.exact_limit = exact_limit

    def _run(self, g: Graph):
        alpha = as_fraction(self.alpha)
        if self.method not in ("auto", "exact", "bounded"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "exact" or (self.method == "auto" and g.n <= self.exact_limit):
            return crux_exact(g, alpha)
        return crux_bounded(g, alpha, budget=self.budget)

    def fit(self, X, y=None):
        res = self._run(check_graph(X))
        self.result_ = res
        self.interval_ = (res.lo, res.hi)
        self.witness_ = sorted(res.witness)
        self.exact_ = res.status == "exact"
        return self

    def predict(self, X) -> int:
        """Upper bound on C_alpha(X) (the exact value when it is known)."""
        check_is_fitted(self, "result_")
        return self._run(check_graph(X)).hi


class SubdivisionFinder(BaseEstimator):
    """Run the construction pipeline; ``t_`` is the order of the verified clique subdivision."""

    def __init__(self, alpha="1/400", eps: float = 0.1, mode: str = "desk", seed: int = 0,
                 safety_net: bool | None = None, config: dict | None = None):
        self.alpha = alpha
        self.eps = eps
        self.mode = mode
        self.seed = seed
        self.safety_net = safety_net
        self.config = config

    def _config(self) -> PipelineConfig:
        extra = dict(self.config or {})
        return PipelineConfig(alpha=as_fraction(self.alpha), eps=self.eps, mode=self.mode, seed=self.seed,
                              safety_net=self.safety_net, **extra)

    def fit(self, X, y=None):
        trace = dispatch(check_graph(X), self._config())
        self.trace_ = trace
        self.certificate_ = trace.certificate
        self.t_ = trace.t
        self.case_ = trace.case
        return self

    def predict(self, X) -> int:
        check_is_fitted(self, "trace_")
        return dispatch(check_graph(X), self._config()).t
