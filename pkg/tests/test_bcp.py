import itertools

import pytest

from coarsembed.relhyp.bcp import (
    BudgetExceeded,
    bcp_constant,
    estimate_bcp,
    slim_triangle_check,
    triangle_slack,
)
from coarsembed.relhyp.group import IDENTITY, FreeProductGroup, dist_rel, dist_s
from coarsembed.relhyp.paths import h_components, relative_geodesics

ZZ = FreeProductGroup(1, 1)
Z2Z = FreeProductGroup(2, 1)


def brute_bcp(G, R, radius):
    """Both clauses over every pair of relative geodesics from e, with
    components read off the paths themselves."""
    ball = G.abs_ball(radius)
    comps = {}
    for g in ball:
        per_path = []
        for path in relative_geodesics(g):
            runs, _ = h_components(path, with_edges_only=True)
            per_path.append({c.coset: (c.entry(path), c.exit(path)) for c in runs})
        comps[g] = per_path
    c1 = c2 = 0
    for g1, g2 in itertools.product(ball, ball):
        if dist_s(g1, g2) > R:
            continue
        for P, Q in itertools.product(comps[g1], comps[g2]):
            for coset, (s_in, s_out) in P.items():
                if coset not in Q:
                    c1 = max(c1, dist_s(s_in, s_out) + 1)
                else:
                    t_in, t_out = Q[coset]
                    c2 = max(c2, dist_s(s_in, t_in), dist_s(s_out, t_out))
    return c1, c2


@pytest.mark.parametrize("G,R,radius", [(ZZ, 0, 3), (ZZ, 1, 3), (ZZ, 2, 3), (FreeProductGroup(1, 2), 1, 3)])
def test_estimate_matches_brute_force(G, R, radius):
    est = estimate_bcp(G, R, radius)
    assert (est.clause1, est.clause2) == brute_bcp(G, R, radius)
    assert est.a == max(est.clause1, est.clause2)


def test_r_zero_is_nonnegative():
    est = estimate_bcp(ZZ, 0, 2)
    assert est.a >= 0 and est.clause1 == 0 and est.clause2 == 0


def test_zz_r1_finite_with_witnesses():
    est = estimate_bcp(ZZ, 1, 4)
    assert 0 < est.a < 10
    g1, g2, s_in, s_out = est.witness1
    assert dist_s(g1, g2) <= 1
    assert est.clause1 == dist_s(s_in, s_out) + 1
    g1, g2, s, t = est.witness2
    assert est.clause2 == dist_s(s, t)
    assert est.lower_bound


def test_estimate_grows_with_search_radius():
    small = estimate_bcp(ZZ, 1, 3).a
    large = estimate_bcp(ZZ, 1, 5).a
    assert large >= small


def test_search_radius_below_r_rejected():
    with pytest.raises(ValueError):
        estimate_bcp(ZZ, 3, 2)
    with pytest.raises(ValueError):
        estimate_bcp(ZZ, -1, 2)


def test_budget_enforced():
    with pytest.raises(BudgetExceeded):
        estimate_bcp(Z2Z, 1, 6, budget=100)


def test_constant_is_monotone_and_dominates():
    const = bcp_constant(ZZ, 3, 4)
    vals = [const.table[r] for r in range(4)]
    assert vals == sorted(vals)
    for r in range(4):
        assert const.table[r] >= max(const.raw[r] + r, r, 1)
    assert const.a == const.table[3]
    assert const.to_json()["rule"].startswith("max(")


def test_constant_fixed_margin():
    const = bcp_constant(ZZ, 1, 3, margin=0)
    assert const.a == max(const.raw[0], const.raw[1], 1)


# --- slim triangles


def test_degenerate_triangle():
    assert triangle_slack(IDENTITY, IDENTITY, IDENTITY) == (0, None)


def test_tripod_is_zero_slim():
    a, b, c = (ZZ.element(t) for t in ("B(2)", "B(-2)", "A(1) B(1)"))
    assert triangle_slack(a, b, c)[0] == 0


def test_flat_triangle_has_slack():
    """In a Z^2 factor the canonical sides of e, (2,0), (2,2) enclose a square."""
    G = FreeProductGroup(1, 2)
    worst, (name, v) = triangle_slack(IDENTITY, G.element("B(2,0)"), G.element("B(2,2)"))
    assert worst == 2 and name == "zx" and v == G.element("B(0,2)")


def test_slack_is_bounded_by_side_lengths():
    x, y, z = (Z2Z.element(t) for t in ("B(1) A(2,1)", "A(-1,0) B(2)", "B(-1) A(0,3) B(1)"))
    worst, _ = triangle_slack(x, y, z)
    assert 0 <= worst <= max(dist_rel(x, y), dist_rel(y, z), dist_rel(z, x))


def test_slim_check_seeded():
    a = slim_triangle_check(Z2Z, 1, samples=50, radius=3, seed=7)
    b = slim_triangle_check(Z2Z, 1, samples=50, radius=3, seed=7)
    assert a.to_json() == b.to_json() and a.triangles == b.triangles
    assert a.ok


def test_negative_delta_fails():
    rep = slim_triangle_check(ZZ, -1, samples=20, radius=3, seed=0)
    assert not rep.ok and rep.worst >= 0
