"""Finite-scale estimates of the coset-penetration constant and of slim triangles.

Both are empirical: they search a bounded region of the relative Cayley graph
and report the worst case found there, which is a lower bound for the true
constant.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .group import FreeProductGroup, GroupElement, dist_rel, dist_s, inverse, multiply
from .paths import RelPath, canonical_geodesic, penetrations

DEFAULT_BUDGET = 200_000


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class BCPEstimate:
    """Smallest ``a`` satisfying both penetration clauses on the searched pairs.

    ``clause1`` is forced by cosets entered by one geodesic only
    (``a > d_S(entry, exit)``); ``clause2`` by cosets entered by both
    (``a >= `` the entry and exit displacements).  ``lower_bound`` is always
    true: a larger search can only raise the value.
    """

    R: int
    search_radius: int
    a: int
    clause1: int
    clause2: int
    witness1: tuple | None
    witness2: tuple | None
    pairs: int
    lower_bound: bool = True

    def to_json(self) -> dict:
        def w(t):
            return None if t is None else [str(x) for x in t]

        return {
            "R": self.R,
            "search_radius": self.search_radius,
            "a": self.a,
            "clause1": {"a": self.clause1, "witness": w(self.witness1)},
            "clause2": {"a": self.clause2, "witness": w(self.witness2)},
            "pairs": self.pairs,
            "lower_bound": self.lower_bound,
        }


def estimate_bcp(G: FreeProductGroup, R: int, search_radius: int, budget: int = DEFAULT_BUDGET) -> BCPEstimate:
    """Search all geodesic pairs from ``e`` whose endpoints lie within ``search_radius``
    (absolute length) and are at most ``R`` apart in ``d_S``.

    Geodesics to the same endpoint penetrate the same cosets at the same
    points in a free product, so it suffices to range over endpoint pairs.
    Only components containing an ``H``-edge count.  Witnesses are
    ``(p_end, q_end, entry, exit)`` for clause 1 and
    ``(p_end, q_end, s_point, t_point)`` for clause 2.
    """
    if R < 0:
        raise ValueError("R must be nonnegative")
    if search_radius < R:
        raise ValueError(f"search_radius={search_radius} is below R={R}")
    ball = G.abs_ball(search_radius)
    if len(ball) > budget:
        raise BudgetExceeded(f"absolute ball of radius {search_radius} has {len(ball)} elements, budget is {budget}")
    steps = G.abs_ball(R)
    if len(ball) * len(steps) > budget * 50:
        raise BudgetExceeded(f"{len(ball) * len(steps)} endpoint pairs exceed the budget")
    pen = {g: penetrations(g) for g in ball}
    c1, w1 = 0, None
    c2, w2 = 0, None
    pairs = 0
    for g1 in ball:
        p1 = pen[g1]
        for u in steps:
            g2 = multiply(g1, u)
            p2 = pen.get(g2)
            if p2 is None:
                continue
            pairs += 1
            for coset, (s_in, s_out) in p1.items():
                other = p2.get(coset)
                if other is None:
                    need = dist_s(s_in, s_out) + 1
                    if need > c1:
                        c1, w1 = need, (g1, g2, s_in, s_out)
                    continue
                t_in, t_out = other
                for s, t in ((s_in, t_in), (s_out, t_out)):
                    need = dist_s(s, t)
                    if need > c2:
                        c2, w2 = need, (g1, g2, s, t)
    return BCPEstimate(R, search_radius, max(c1, c2), c1, c2, w1, w2, pairs)


@dataclass(frozen=True)
class BCPConstant:
    """The constant actually used: ``a(R') = max(raw + margin, R', 1)`` made
    nondecreasing in ``R'`` by a running maximum."""

    R: int
    a: int
    table: dict[int, int]
    raw: dict[int, int]
    margin: dict[int, int]
    search_radius: int

    def to_json(self) -> dict:
        return {
            "R": self.R,
            "a": self.a,
            "table": {str(k): v for k, v in self.table.items()},
            "raw": {str(k): v for k, v in self.raw.items()},
            "margin": {str(k): v for k, v in self.margin.items()},
            "search_radius": self.search_radius,
            "rule": "max(raw + margin, R, 1), running max over R",
        }


def bcp_constant(
    G: FreeProductGroup,
    R: int,
    search_radius: int,
    margin=None,
    budget: int = DEFAULT_BUDGET,
) -> BCPConstant:
    """Estimate ``a(R')`` for ``R' = 0..R``; ``margin`` maps ``R'`` to the safety margin (default ``R'``)."""
    if margin is None:
        margin = lambda r: r  # noqa: E731
    elif not callable(margin):
        fixed = int(margin)
        margin = lambda r: fixed  # noqa: E731
    raw, marg, table = {}, {}, {}
    running = 0
    for r in range(R + 1):
        raw[r] = estimate_bcp(G, r, search_radius, budget).a
        marg[r] = int(margin(r))
        running = max(running, raw[r] + marg[r], r, 1)
        table[r] = running
    return BCPConstant(R, table[R], table, raw, marg, search_radius)


# --------------------------------------------------------------------------
# slim triangles


def side(x: GroupElement, y: GroupElement) -> RelPath:
    """The canonical relative geodesic from ``x`` to ``y``."""
    return canonical_geodesic(multiply(inverse(x), y), start=x)


def triangle_slack(x: GroupElement, y: GroupElement, z: GroupElement) -> tuple[int, tuple | None]:
    """Largest distance from a vertex of one side to the union of the other two,
    over all three sides, in the relative metric; with the offending vertex
    and side."""
    sides = {"xy": side(x, y), "yz": side(y, z), "zx": side(z, x)}
    worst, wit = 0, None
    for name, path in sides.items():
        others = [v for k, pth in sides.items() if k != name for v in pth.vertices]
        for v in path.vertices:
            gap = min(dist_rel(v, w) for w in others)
            if gap > worst:
                worst, wit = gap, (name, v)
    return worst, wit


@dataclass(frozen=True)
class SlimReport:
    delta: float
    worst: int
    witness: tuple | None
    samples: int
    radius: int
    seed: int
    ok: bool
    triangles: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "delta": self.delta,
            "worst": self.worst,
            "witness": None if self.witness is None else [str(x) for x in self.witness],
            "samples": self.samples,
            "radius": self.radius,
            "seed": self.seed,
            "ok": self.ok,
        }


def slim_triangle_check(
    G: FreeProductGroup,
    delta: float,
    samples: int = 200,
    radius: int = 4,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> SlimReport:
    """Sample triangles with corners in the absolute ball of ``radius`` and measure
    how far each side strays from the other two."""
    ball = G.abs_ball(radius)
    if len(ball) > budget:
        raise BudgetExceeded(f"absolute ball of radius {radius} has {len(ball)} elements, budget is {budget}")
    rng = random.Random(seed)
    worst, wit = 0, None
    tris = []
    for _ in range(samples):
        x, y, z = (rng.choice(ball) for _ in range(3))
        tris.append((x, y, z))
        slack, w = triangle_slack(x, y, z)
        if slack > worst:
            worst, wit = slack, (x, y, z, w[0], w[1])
    return SlimReport(delta, worst, wit, samples, radius, seed, worst <= delta, tris)
