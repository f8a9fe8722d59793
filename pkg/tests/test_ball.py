import json
import math

import numpy as np
import pytest

from coarsembed.lp import p_norm
from coarsembed.relhyp.ball import (
    Y_SLOT,
    SeparationFailure,
    check_coset_decomposition,
    constant_phi,
    coset_representatives,
    coset_slot,
    embed_ball,
    group_space,
    h_space,
    scaled_identity_phi,
)
from coarsembed.relhyp.bcp import BCPConstant
from coarsembed.relhyp.group import FreeProductGroup, coset_rep, dist_s, h_part

ZZ = FreeProductGroup(1, 1)
Z2Z = FreeProductGroup(2, 1)


@pytest.fixture(scope="module")
def zz_level2():
    return embed_ball(ZZ, 2, 6, scaled_identity_phi(ZZ, 6))


@pytest.fixture(scope="module")
def z2z_level2():
    return embed_ball(Z2Z, 2, 5, scaled_identity_phi(Z2Z, 5))


# --- spaces and cosets


def test_group_space_uses_word_metric():
    space = group_space(ZZ.abs_ball(2))
    assert space.labels[0] == "e"
    assert space.d("A(1)", "B(1)") == 2
    assert space.d("A(2)", "A(-1)") == 3


def test_h_space_size():
    assert len(h_space(Z2Z, 2)) == 13  # l1 ball of radius 2 in Z^2


def test_coset_reps_zz():
    reps = [str(g) for g in coset_representatives(ZZ, 2, 4)]
    assert reps == ["e", "B(-1)", "B(1)"]


def test_coset_reps_reject_n0():
    with pytest.raises(ValueError):
        coset_representatives(ZZ, 0, 3)


@pytest.mark.parametrize("G,n,cap", [(ZZ, 2, 4), (ZZ, 3, 4), (Z2Z, 2, 4)])
def test_coset_decomposition(G, n, cap):
    check = check_coset_decomposition(G, n, cap)
    assert check.ok, (check.overlaps, check.missing, check.outside)
    assert check.covered > 0


# --- base cases


def test_level0_is_zero_map():
    emb = embed_ball(ZZ, 0, 3, scaled_identity_phi(ZZ, 3))
    assert emb.map.space.labels == ("e",)
    assert p_norm(emb.map("e")) == 0


def test_level1_restricts_to_phi_h():
    """With a tiny scale no rescaling is needed, so on H the base block is phi_H itself."""
    phi = scaled_identity_phi(ZZ, 4, scale=0.01)
    emb = embed_ball(ZZ, 1, 4, phi)
    assert emb.provenance["h2"] == 1
    for k in range(-4, 5):
        lab = "e" if k == 0 else f"A({k})"
        assert emb.map(lab).blocks["Y/base/0"][0] == pytest.approx(0.01 * k, abs=1e-15)


def test_level1_conditions():
    emb = embed_ball(ZZ, 1, 4, scaled_identity_phi(ZZ, 4))
    assert emb.verify().ok
    assert emb.core == frozenset(emb.map.space.labels)
    assert emb.slots_ok()


def test_level1_offset_is_bounded():
    emb = embed_ball(Z2Z, 1, 3, scaled_identity_phi(Z2Z, 3))
    offs = [emb.map(lab).blocks["Y/off/0"] for lab in emb.map.space.labels]
    spread = max(np.linalg.norm(a - b) for a in offs for b in offs)
    assert spread <= emb.eps / 2 + 1e-12


# --- level 2


def test_level2_conditions(zz_level2, z2z_level2):
    for emb in (zz_level2, z2z_level2):
        delta, s_star = emb.derived_delta()
        assert delta > 0 and s_star == emb.map.space.diameter
        rep = emb.verify()
        assert rep.ok, rep.to_json()


def test_level2_case_identities(zz_level2, z2z_level2):
    for emb in (zz_level2, z2z_level2):
        cases = emb.case_identities()
        assert cases["ok"]
        assert cases["case_1b"]["pairs"] > 0 and cases["case_2a"]["pairs"] > 0
        assert cases["case_1b"]["max_error"] <= 1e-9 and cases["case_2a"]["max_error"] <= 1e-9


def test_level2_slots(z2z_level2):
    emb = z2z_level2
    assert emb.slots_ok()
    for lab in emb.map.space.labels:
        if lab in emb.core:
            continue
        g = emb.elements[lab]
        tops = {k.split("/", 1)[0] for k in emb.map(lab).blocks}
        assert tops == {Y_SLOT, coset_slot(coset_rep(g))}


def test_level2_off_core_formula(zz_level2):
    """phi(g x) = phi_1(g) (+) phi_2(x), read block by block."""
    emb = zz_level2
    for lab in emb.map.space.labels:
        if lab in emb.core:
            continue
        g = emb.elements[lab]
        rep, x = coset_rep(g), h_part(g)
        img = emb.map(lab)
        assert np.allclose(img.blocks[f"{coset_slot(rep)}/0"], emb.phi2(str(x)).blocks["0"])


def test_core_is_thickened_previous_ball(zz_level2):
    emb = zz_level2
    inner = [emb.previous.elements[l] for l in emb.previous.map.space.labels]
    a = emb.provenance["a_R"]
    for lab, g in emb.elements.items():
        near = min(dist_s(g, b) for b in inner)
        assert (lab in emb.core) == (near <= a)


def test_provenance_records_constants(z2z_level2):
    prov = z2z_level2.provenance
    assert prov["a_R"] >= 1 and prov["tuning_scale"] == 3 * prov["a_R"]
    assert prov["separation"]["ok"]
    assert set(prov["reps"]) == set(prov["basepoints"])


def test_reuses_previous_level():
    phi = scaled_identity_phi(ZZ, 5)
    e1 = embed_ball(ZZ, 1, 5, phi)
    e2 = embed_ball(ZZ, 2, 5, phi, previous=e1)
    assert e2.previous is e1
    with pytest.raises(ValueError):
        embed_ball(ZZ, 2, 4, scaled_identity_phi(ZZ, 4), previous=e1)


def test_level3_runs():
    emb = embed_ball(ZZ, 3, 5, scaled_identity_phi(ZZ, 5))
    assert emb.verify().ok and emb.case_identities()["ok"]


# --- failures


def test_collapsing_phi_h_fails_verification():
    emb = embed_ball(ZZ, 2, 4, constant_phi(ZZ, 4))
    rep = emb.verify()
    assert not rep.cond3 and rep.far_witness is not None


def test_underestimated_constant_breaks_separation():
    fake = BCPConstant(R=7, a=1, table={}, raw={}, margin={}, search_radius=0)
    with pytest.raises(SeparationFailure) as err:
        embed_ball(ZZ, 2, 5, scaled_identity_phi(ZZ, 5), R=7, bcp=fake)
    check = err.value.check
    assert not check.ok and check.distance < 7
    x, y = check.witness
    assert coset_rep(ZZ.element(x)) != coset_rep(ZZ.element(y))


@pytest.mark.parametrize("kw", [{"n": -1}, {"n": 5, "cap": 3}])
def test_bad_arguments(kw):
    args = {"n": 1, "cap": 3}
    args.update(kw)
    with pytest.raises(ValueError):
        embed_ball(ZZ, args["n"], args["cap"], scaled_identity_phi(ZZ, 3))


def test_phi_h_domain_must_match_cap():
    with pytest.raises(ValueError, match="phi_H"):
        embed_ball(ZZ, 1, 4, scaled_identity_phi(ZZ, 3))


def test_phi_h_exponent_must_match():
    with pytest.raises(ValueError):
        embed_ball(ZZ, 1, 3, scaled_identity_phi(ZZ, 3), p=3.0)


def test_json_is_serializable(zz_level2):
    doc = json.loads(json.dumps(zz_level2.to_json()))
    assert doc["n"] == 2 and doc["group"] == {"factorA_rank": 1, "factorB_rank": 1}
    assert math.isclose(doc["eps"], 1.0)


def test_cross_coset_distance_splits_through_representatives(z2z_level2):
    """For x = g_i x_i and y = g_j y_j off the core in different cosets,
    d_S(x, y) <= |x_i|_S + d_S(g_i, g_j) + |y_j|_S, the bound behind the
    three-way split of the far-pair estimate."""
    emb = z2z_level2
    off = [emb.elements[lab] for lab in emb.map.space.labels if lab not in emb.core]
    checked = 0
    for x in off:
        for y in off:
            gi, gj = coset_rep(x), coset_rep(y)
            if gi == gj:
                continue
            assert dist_s(x, y) <= h_part(x).abs_length + dist_s(gi, gj) + h_part(y).abs_length
            checked += 1
    assert checked > 0
