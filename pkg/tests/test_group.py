import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarsembed.relhyp.cayley import bfs_relative_capped, bfs_s, count_shortest_paths
from coarsembed.relhyp.group import (
    IDENTITY,
    FreeProductGroup,
    GroupElement,
    coset_rep,
    dist_rel,
    dist_s,
    h_part,
    inverse,
    multiply,
    same_coset,
    syllable,
)

ZZ = FreeProductGroup(1, 1)
Z2Z = FreeProductGroup(2, 1)


def reduce_letters(letters):
    """Normal form by repeated local rewriting of a letter list ``(tag, vector)``:
    merge equal neighbouring tags, drop zero vectors, until nothing changes."""
    word = [(t, tuple(v)) for t, v in letters]
    changed = True
    while changed:
        changed = False
        out = []
        for t, v in word:
            if not any(v):
                changed = True
                continue
            if out and out[-1][0] == t:
                out[-1] = (t, tuple(a + b for a, b in zip(out[-1][1], v)))
                changed = True
            else:
                out.append((t, v))
        word = out
    return tuple(word)


def letters_of(g):
    return [(t, v) for t, v in g.syllables]


def random_word(G, draw_ints):
    out = []
    for i in draw_ints:
        out.append(G.generators[i % len(G.generators)])
    return out


words = st.lists(st.integers(0, 99), max_size=12)


# --- arithmetic


def test_identity_prints_as_e():
    assert str(IDENTITY) == "e" and GroupElement.parse("e") == IDENTITY


def test_parse_merges_adjacent_tags():
    g = GroupElement.parse("A(1,0) A(0,2) B(3)")
    assert str(g) == "A(1,2) B(3)"


def test_parse_cancels_to_identity():
    assert GroupElement.parse("B(2) B(-2)") == IDENTITY


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        GroupElement.parse("C(1)")


def test_element_checks_rank():
    with pytest.raises(ValueError):
        Z2Z.element("A(1)")


def test_normal_form_rejects_zero_syllable():
    with pytest.raises(ValueError):
        GroupElement((("A", (0,)),))


@pytest.mark.parametrize(
    "a, b, prod",
    [
        ("A(1)", "A(-1)", "e"),
        ("A(1) B(1)", "B(-1) A(2)", "A(3)"),
        ("A(1) B(1)", "B(-1) A(-1) B(2)", "B(2)"),
        ("B(2) A(1)", "B(1)", "B(2) A(1) B(1)"),
    ],
)
def test_multiply_examples(a, b, prod):
    g, h = ZZ.element(a), ZZ.element(b)
    assert multiply(g, h) == ZZ.element(prod)
    assert reduce_letters(letters_of(g) + letters_of(h)) == ZZ.element(prod).syllables


@settings(max_examples=200, deadline=None)
@given(words, words)
def test_multiply_matches_rewriting(u, v):
    g = GroupElement.parse(" ".join(map(str, random_word(Z2Z, u))) or "e")
    h = GroupElement.parse(" ".join(map(str, random_word(Z2Z, v))) or "e")
    assert multiply(g, h).syllables == reduce_letters(letters_of(g) + letters_of(h))


def test_associativity_on_small_ball():
    ball = ZZ.abs_ball(3)
    for g, h, k in itertools.product(ball[:20], ball[:20], ball):
        assert (g * h) * k == g * (h * k)


@settings(max_examples=200, deadline=None)
@given(words)
def test_inverse(u):
    g = GroupElement.parse(" ".join(map(str, random_word(Z2Z, u))) or "e")
    assert g * inverse(g) == IDENTITY == inverse(g) * g


def test_lengths():
    g = Z2Z.element("A(2,-1) B(3) A(0,1)")
    assert g.abs_length == 7
    assert g.rel_length == 5


def test_coset_rep_and_h_part():
    g = ZZ.element("B(1) A(4)")
    assert coset_rep(g) == ZZ.element("B(1)")
    assert h_part(g) == ZZ.element("A(4)")
    assert coset_rep(g) * h_part(g) == g
    assert same_coset(g, ZZ.element("B(1) A(-2)"))
    assert not same_coset(g, ZZ.element("A(1) B(1)"))


def test_generators():
    assert [str(s) for s in Z2Z.generators] == ["A(1,0)", "A(-1,0)", "A(0,1)", "A(0,-1)", "B(1)", "B(-1)"]


# --- balls


def test_enumerate_ball_small():
    ball = ZZ.enumerate_ball(1, 3)
    # e, A(k) for 1 <= |k| <= 3, B(+-1)
    assert len(ball) == 9
    assert {str(g) for g in ball} == {"e", "A(1)", "A(-1)", "A(2)", "A(-2)", "A(3)", "A(-3)", "B(1)", "B(-1)"}


@pytest.mark.parametrize("G", [ZZ, Z2Z])
@pytest.mark.parametrize("n,cap", [(1, 2), (2, 3), (3, 3)])
def test_enumerate_ball_matches_filter(G, n, cap):
    want = {g for g in G.abs_ball(cap) if g.rel_length <= n}
    assert set(G.enumerate_ball(n, cap)) == want


def test_abs_ball_matches_bfs():
    for G in (ZZ, Z2Z):
        dist = bfs_s(G, 4)
        assert set(dist) == set(G.abs_ball(4))
        assert all(d == g.abs_length for g, d in dist.items())


# --- Cayley graph oracles


def test_relative_bfs_matches_rel_length():
    dist = bfs_relative_capped(Z2Z, 4)
    assert dist and all(d == g.rel_length for g, d in dist.items())


def test_metrics_are_left_invariant():
    ball = ZZ.abs_ball(2)
    g = ZZ.element("B(1) A(2)")
    for x, y in itertools.product(ball, ball):
        assert dist_s(g * x, g * y) == dist_s(x, y)
        assert dist_rel(g * x, g * y) == dist_rel(x, y)
        assert dist_rel(x, y) <= dist_s(x, y)


def test_geodesic_count():
    # B(1) A(1) B(1): each syllable is a single forced step
    assert count_shortest_paths(ZZ, 4, ZZ.element("B(1) A(1) B(1)")) == 1
    # B(1,?) in Z^2 * Z: within a B-syllable of Z^1 the walk is unique; in Z^2 for A it is one H-letter
    assert count_shortest_paths(Z2Z, 4, Z2Z.element("A(1,1) B(1)")) == 1


def test_geodesic_count_in_lattice_factor():
    G = FreeProductGroup(1, 2)
    assert count_shortest_paths(G, 4, G.element("B(1,1)")) == 2
    assert count_shortest_paths(G, 5, G.element("B(2,1)")) == 3


def test_target_outside_cap_unreached():
    assert count_shortest_paths(ZZ, 2, ZZ.element("B(3)")) == 0


def test_syllable_zero_is_identity():
    assert syllable("A", (0, 0)) == IDENTITY
