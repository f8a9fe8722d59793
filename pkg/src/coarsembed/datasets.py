"""Small reference spaces: integer intervals, rays glued at a point, random graph metrics."""
from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .metric import FiniteMetricSpace, SubsetPair, ball_core


def integer_interval(lo: int, hi: int) -> FiniteMetricSpace:
    """``{lo, ..., hi}`` with ``|x - y|``."""
    pts = np.arange(lo, hi + 1)
    return FiniteMetricSpace(tuple(int(x) for x in pts), np.abs(pts[:, None] - pts[None, :]).astype(float))


def two_rays(n: int = 20) -> SubsetPair:
    """``[-n, n]`` split into nonpositives and nonnegatives, with core ``C(s) = [-s, s]``."""
    space = integer_interval(-n, n)
    neg = frozenset(x for x in space.labels if x <= 0)
    pos = frozenset(x for x in space.labels if x >= 0)
    return SubsetPair(space, (neg, pos), ball_core(space, 0))


def star(rays: int = 3, length: int = 10) -> SubsetPair:
    """``rays`` paths of ``length`` edges sharing the endpoint ``"o"``, tree metric.

    Point ``f"{i}:{t}"`` is at distance ``t`` from ``"o"`` on ray ``i``; part
    ``i`` is ray ``i`` with the origin, and the core is the ball about ``"o"``.
    """
    labels = ["o"] + [f"{i}:{t}" for i in range(rays) for t in range(1, length + 1)]
    where = {"o": (None, 0)}
    where.update({f"{i}:{t}": (i, t) for i in range(rays) for t in range(1, length + 1)})
    n = len(labels)
    dist = np.zeros((n, n))
    for a, x in enumerate(labels):
        for b, y in enumerate(labels):
            (i, s), (j, t) = where[x], where[y]
            dist[a, b] = abs(s - t) if i == j or i is None or j is None else s + t
    space = FiniteMetricSpace(tuple(labels), dist)
    parts = tuple(frozenset(["o"] + [f"{i}:{t}" for t in range(1, length + 1)]) for i in range(rays))
    return SubsetPair(space, parts, ball_core(space, "o"))


def random_graph_space(n: int, rng: np.random.Generator, edge_prob: float = 0.1, max_weight: int = 1) -> FiniteMetricSpace:
    """Shortest-path metric of a random connected graph on ``n`` vertices.

    A random spanning path guarantees connectivity; other edges appear with
    probability ``edge_prob``.  Weights are integers in ``[1, max_weight]``.
    """
    order = rng.permutation(n)
    w = np.zeros((n, n))
    for a, b in zip(order, order[1:]):
        w[a, b] = w[b, a] = rng.integers(1, max_weight + 1)
    extra = np.triu(rng.random((n, n)) < edge_prob, 1)
    for a, b in zip(*np.nonzero(extra)):
        if w[a, b] == 0:
            w[a, b] = w[b, a] = rng.integers(1, max_weight + 1)
    graph = csr_matrix(w)
    assert connected_components(graph, directed=False)[0] == 1
    dist = shortest_path(graph, directed=False, unweighted=False)
    return FiniteMetricSpace(tuple(range(n)), dist)
