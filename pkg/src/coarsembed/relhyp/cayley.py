"""Breadth-first search on Cayley graphs of the free product.

These searches only multiply by edge labels and never consult the length
formulas, so they serve as oracles for :func:`~.group.abs_length` and
:func:`~.group.rel_length`.
"""
from __future__ import annotations

from collections import deque

from .group import A, IDENTITY, FreeProductGroup, GroupElement, coset_rep, inverse, multiply


def bfs_s(G: FreeProductGroup, radius: int, start: GroupElement = IDENTITY) -> dict[GroupElement, int]:
    """Distances in the Cayley graph ``(G, S)`` from ``start``, out to ``radius``."""
    dist = {start: 0}
    frontier = [start]
    for d in range(1, radius + 1):
        nxt = []
        for v in frontier:
            for s in G.generators:
                w = multiply(v, s)
                if w not in dist:
                    dist[w] = d
                    nxt.append(w)
        frontier = nxt
    return dist


def bfs_relative_capped(G: FreeProductGroup, cap: int, start: GroupElement = IDENTITY, s_dist=None) -> dict[GroupElement, int]:
    """Distances in ``(G, S ∪ H)`` with H-letters of S-length <= ``cap`` and
    vertices confined to S-length <= ``cap``.

    The vertex set and the S-length of H-letters are taken from a plain
    ``(G, S)`` search (``s_dist`` may be passed to reuse one).  H-edges are
    found by scanning the not-yet-reached members of the current vertex's
    coset, which is equivalent to trying every H-letter.
    """
    if s_dist is None:
        s_dist = bfs_s(G, cap)
    members: dict[GroupElement, list[GroupElement]] = {}
    for v in s_dist:
        members.setdefault(coset_rep(v), []).append(v)
    unreached = {rep: set(vs) for rep, vs in members.items()}

    def h_coords(v: GroupElement):
        if v.syllables and v.syllables[-1][0] == A:
            return v.syllables[-1][1]
        return (0,) * G.rank_a

    def h_letter_length(u, w):
        diff = tuple(b - a for a, b in zip(h_coords(u), h_coords(w)))
        if not any(diff):
            return 0
        return s_dist.get(GroupElement(((A, diff),)))

    dist = {start: 0}
    unreached[coset_rep(start)].discard(start)
    queue = deque([start])
    while queue:
        v = queue.popleft()
        d = dist[v] + 1
        for s in G.generators:
            w = multiply(v, s)
            if w in s_dist and w not in dist:
                dist[w] = d
                unreached[coset_rep(w)].discard(w)
                queue.append(w)
        pool = unreached[coset_rep(v)]
        hit = [w for w in pool if (h_letter_length(v, w) or cap + 1) <= cap]
        for w in sorted(hit):
            pool.discard(w)
            dist[w] = d
            queue.append(w)
    return dist


def count_shortest_paths(G: FreeProductGroup, cap: int, target: GroupElement, s_dist=None) -> int:
    """Number of geodesics from ``e`` to ``target`` in the capped relative graph."""
    dist = bfs_relative_capped(G, cap, s_dist=s_dist)
    if target not in dist:
        return 0
    h_letters = [g for g, dd in (s_dist or bfs_s(G, cap)).items() if 1 <= dd and len(g.syllables) == 1 and g.syllables[0][0] == A]
    letters = set(G.generators) | set(h_letters)
    ways = {IDENTITY: 1}
    by_level: dict[int, list[GroupElement]] = {}
    for v, dd in dist.items():
        by_level.setdefault(dd, []).append(v)
    for level in range(1, dist[target] + 1):
        for w in by_level.get(level, []):
            total = 0
            for lab in letters:
                u = multiply(w, inverse(lab))
                if dist.get(u) == level - 1:
                    total += ways.get(u, 0)
            ways[w] = total
    return ways.get(target, 0)
