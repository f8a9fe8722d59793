import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarsembed.datasets import integer_interval, random_graph_space
from coarsembed.embedding import (
    CoarseMap,
    ScaleFamily,
    amalgamate,
    amalgamation_bounds,
    build_scale_family,
    constant_map,
    coordinate_map,
    default_basepoint,
    family_from_coarse_embedding,
    frechet_embedding,
    rescale_to_scale,
    scale_divisor,
    select_separation_scales,
    verify_conditions,
    verify_unbounded,
)
from coarsembed.lp import BlockVector, p_norm


def line_map(space, f, p=2.0):
    return coordinate_map(space, {x: [f(x)] for x in space.labels}, p)


# --- CoarseMap


def test_map_must_be_total():
    space = integer_interval(0, 2)
    with pytest.raises(ValueError, match="not total"):
        CoarseMap(space, {0: BlockVector.single(2, [0.0])})


def test_map_must_use_one_exponent():
    space = integer_interval(0, 1)
    with pytest.raises(ValueError, match="exponents"):
        CoarseMap(space, {0: BlockVector.single(2, [0.0]), 1: BlockVector.single(3, [0.0])})


def test_map_rejects_foreign_points():
    space = integer_interval(0, 0)
    with pytest.raises(ValueError):
        CoarseMap(space, {0: BlockVector.zero(2), 5: BlockVector.zero(2)})


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_image_distances_match_pairwise_norms(p):
    rng = np.random.default_rng(1)
    space = random_graph_space(12, rng)
    images = {x: BlockVector(p, {"a": rng.normal(size=2), **({"b": rng.normal(size=1)} if x % 2 else {})}) for x in space.labels}
    f = CoarseMap(space, images)
    D = f.image_distances()
    for x, y in itertools.combinations(space.labels, 2):
        assert D[space.index[x], space.index[y]] == pytest.approx(p_norm(images[x] - images[y]), rel=1e-12)


def test_translate_sends_basepoint_to_zero():
    space = integer_interval(0, 4)
    f = line_map(space, lambda x: x * 1.5).translate(2)
    assert p_norm(f(2)) == 0
    assert f(4).blocks["0"][0] == pytest.approx(3.0)


def test_frechet_embedding_is_noncontracting():
    space = random_graph_space(15, np.random.default_rng(2), max_weight=3)
    f = frechet_embedding(space)
    for x, y in itertools.combinations(space.labels, 2):
        assert f.image_distance(x, y) >= space.d(x, y) - 1e-12


def test_map_json_shape():
    space = integer_interval(0, 1)
    doc = line_map(space, float).to_json("line")
    assert doc == {"space": "line", "p": 2.0, "images": {"0": {"p": 2.0, "blocks": {"0": [0.0]}}, "1": {"p": 2.0, "blocks": {"0": [1.0]}}}}


# --- scaling (x / h)


@pytest.mark.parametrize("h", [2, 4, 8])
def test_scaling_map_moduli_are_linear(h):
    space = integer_interval(0, 100)
    table = line_map(space, lambda x: x / h).moduli
    for t in range(1, 101):
        assert table.rho_plus_at(t) == pytest.approx(t / h, abs=1e-12)
        assert table.rho_minus_at(t) == pytest.approx(t / h, abs=1e-12)


def test_scale_divisor_least_natural():
    space = integer_interval(0, 20)
    ident = line_map(space, float)
    assert scale_divisor(ident, 3, 1.0) == 3
    assert scale_divisor(ident, 3, 1.0, strict=True) == 4
    tuned, h = rescale_to_scale(ident, 5, 0.5)
    assert h == 10 and tuned.moduli.rho_plus_at(5) == pytest.approx(0.5)


# --- verify_conditions


def test_condition1_holds_for_scaled_map():
    space = integer_interval(0, 10)
    rep = verify_conditions(line_map(space, lambda x: x / 4), R=2, eps=1, delta=1, s_star=10)
    assert rep.cond1 and rep.sup_near == pytest.approx(0.5)


def test_condition1_fails_for_identity_with_witness():
    space = integer_interval(0, 10)
    rep = verify_conditions(line_map(space, float), R=2, eps=1, delta=1, s_star=10)
    assert not rep.cond1
    x, y = rep.near_witness
    assert space.d(x, y) == 2


def test_condition3_fails_for_constant_map():
    space = integer_interval(0, 10)
    for s in (1, 5, 10):
        rep = verify_conditions(constant_map(space), R=1, eps=1, delta=0.1, s_star=s)
        assert not rep.cond3 and rep.far_witness is not None


def test_condition2_table_is_reported():
    space = integer_interval(0, 6)
    rep = verify_conditions(line_map(space, lambda x: x / 2), 1, 1, 1)
    assert rep.cond2
    assert rep.c_table == {m: pytest.approx(m / 2) for m in range(1, 7)}


def test_s_star_beyond_diameter_rejected():
    with pytest.raises(ValueError):
        verify_conditions(constant_map(integer_interval(0, 3)), 1, 1, 1, s_star=4)


def test_report_json_has_margins():
    doc = verify_conditions(line_map(integer_interval(0, 4), float), 1, 1, 1).to_json()
    assert doc["condition1"]["margin"] == pytest.approx(0.0)
    assert doc["condition3"]["margin"] == pytest.approx(3.0)
    assert doc["ok"] is True


def test_unbounded_mode():
    space = integer_interval(0, 10)
    assert verify_unbounded(line_map(space, float), 9.5) == (True, 10.0)
    assert verify_unbounded(line_map(space, float), 10)[0] is False


# --- separation scales


def test_scales_for_quarter_map():
    space = integer_interval(0, 20)
    assert select_separation_scales([line_map(space, lambda x: x / 4)], 1) == [3.0]


def test_scales_for_isometry():
    space = integer_interval(0, 20)
    assert select_separation_scales([line_map(space, float)], 1) == [1.0]


def test_identical_maps_get_bumped_scales():
    space = integer_interval(0, 20)
    f = line_map(space, float)
    assert select_separation_scales([f, f, f], 1) == [1.0, 2.0, 3.0]


def test_scales_error_names_the_map():
    space = integer_interval(0, 5)
    with pytest.raises(ValueError, match="#2"):
        select_separation_scales([line_map(space, float), constant_map(space)], 1)


# --- amalgamation


def example_family():
    """phi_n(x) = x / (n 2^n) on {0..10}: sup over d <= n is 2^-n."""
    space = integer_interval(0, 10)
    maps = [line_map(space, lambda x, n=n: x / (n * 2**n)) for n in (1, 2, 3)]
    return build_scale_family(maps, delta=0.1, basepoint=0)


def test_worked_amalgamation_example():
    fam = example_family()
    Phi = amalgamate(fam)
    img = Phi(10)
    assert np.allclose([img.blocks[f"n{n}/0"][0] for n in (1, 2, 3)], [10 / 2, 10 / 8, 10 / 24], rtol=0, atol=1e-15)
    assert p_norm(img) == pytest.approx(math.sqrt(25 + 1.5625 + (10 / 24) ** 2), rel=1e-14)
    assert p_norm(img) == pytest.approx(5.17070, abs=1e-5)


def test_amalgam_basepoint_is_zero():
    fam = example_family()
    Phi = amalgamate(fam)
    assert all(np.all(b == 0) for b in Phi(0).blocks.values())


def test_single_member_amalgam_is_the_map():
    space = integer_interval(0, 6)
    f = line_map(space, lambda x: x / 2)
    Phi = amalgamate(build_scale_family([f], delta=0.5, basepoint=0, check_schedule=False))
    for x in space.labels:
        assert Phi(x).blocks["n1/0"] == pytest.approx(f(x).blocks["0"])


def test_example_family_bounds_hold():
    fam = example_family()
    check = amalgamation_bounds(fam, amalgamate(fam))
    assert check.ok and check.pairs == 55


def test_lower_bound_by_hand():
    fam = example_family()
    Phi = amalgamate(fam)
    s = fam.scales
    for x, y in itertools.combinations(range(11), 2):
        d = abs(x - y)
        k_minus_1 = sum(1 for sn in s if sn <= d)
        if k_minus_1:
            assert Phi.image_distance(x, y) ** 2 > k_minus_1 * (fam.delta / 2) ** 2


def test_family_rejects_non_increasing_scales():
    space = integer_interval(0, 4)
    f = line_map(space, float)
    from coarsembed.embedding import ScaleMember

    with pytest.raises(ValueError, match="increase"):
        ScaleFamily((ScaleMember(1, 1, 0.5, f, 2.0), ScaleMember(2, 2, 0.25, f, 2.0)), 1.0, 0)


def test_family_schedule_enforced():
    space = integer_interval(0, 4)
    with pytest.raises(ValueError, match="expands"):
        build_scale_family([line_map(space, float)], delta=0.5)


def test_default_basepoint_is_smallest_label():
    space = integer_interval(-3, 3)
    assert default_basepoint(space) == -3


def test_family_from_coarse_embedding_truncates_at_diameter():
    space = integer_interval(0, 7)
    fam = family_from_coarse_embedding(line_map(space, float))
    assert fam.truncation == 7 and len(fam.members) == 7
    for m in fam.members:
        assert m.phi.moduli.rho_plus_at(m.R) < m.eps


@settings(max_examples=15, deadline=None)
@given(st.integers(3, 25), st.integers(0, 10_000), st.sampled_from([1.5, 2.0, 3.0]))
def test_bounds_hold_on_random_spaces(n, seed, p):
    space = random_graph_space(n, np.random.default_rng(seed), max_weight=2)
    fam = family_from_coarse_embedding(frechet_embedding(space, p))
    assert amalgamation_bounds(fam, amalgamate(fam)).ok


def test_amalgam_equivariant_under_relabeling():
    space = random_graph_space(10, np.random.default_rng(9))
    perm = {x: f"v{x:02d}" for x in space.labels}
    A = amalgamate(family_from_coarse_embedding(frechet_embedding(space)))
    B = amalgamate(family_from_coarse_embedding(frechet_embedding(space.relabel(perm))))
    assert np.allclose(A.image_distances(), B.image_distances(), atol=1e-12)
