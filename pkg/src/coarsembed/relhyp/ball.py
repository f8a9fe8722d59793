"""Coarse embedding of relative balls ``B(n)`` by induction on ``n``.

The ball is taken with the absolute metric ``d_S`` and confined to absolute
length ``<= cap``.  Level ``n`` reuses level ``n - 1`` on the thickened core
``Y_R`` and puts each coset ``g_i H`` outside the core into its own block::

    phi(y) = phi_1(y)                     y in Y_R      (slot "Y")
    phi(x) = phi_1(g_i) (+) phi_2(x_i)    x = g_i x_i   (slot "coset:g_i")
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from ..embedding import CoarseMap, ConditionReport, coordinate_map, rescale_to_scale, verify_conditions
from ..lp import BlockVector, p_norm
from ..metric import FiniteMetricSpace, SeparationCheck, SubsetPair, check_s_separated
from .bcp import DEFAULT_BUDGET, BCPConstant, bcp_constant
from .group import IDENTITY, FreeProductGroup, GroupElement, coset_rep, dist_s, h_part, inverse, multiply, rel_length, sort_key

Y_SLOT = "Y"
DELTA_FLOOR = 1e-6


class SeparationFailure(ValueError):
    """The off-core cosets are closer than ``R``; ``check`` holds the witness."""

    def __init__(self, message: str, check: SeparationCheck):
        super().__init__(message)
        self.check = check


def coset_slot(g: GroupElement) -> str:
    return f"coset:{g}"


def group_space(elements) -> FiniteMetricSpace:
    """``elements`` (sorted by absolute length) with ``d_S``, labeled by their normal-form strings."""
    els = sorted(elements, key=sort_key)
    n = len(els)
    dist = np.zeros((n, n))
    for i in range(n):
        gi = inverse(els[i])
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = multiply(gi, els[j]).abs_length
    return FiniteMetricSpace([str(g) for g in els], dist)


def h_space(G: FreeProductGroup, cap: int) -> FiniteMetricSpace:
    """``H`` capped at absolute length ``cap``, with ``d_S``."""
    return group_space(G.h_elements(cap))


def scaled_identity_phi(G: FreeProductGroup, cap: int, scale: float = 1.0, p: float = 2.0) -> CoarseMap:
    """``h -> scale * exponent vector`` on capped ``H``."""
    space = h_space(G, cap)
    coords = {}
    for lab in space.labels:
        g = GroupElement.parse(lab)
        coords[lab] = scale * np.array(g.syllables[0][1] if g.syllables else (0,) * G.rank_a, dtype=float)
    return coordinate_map(space, coords, p)


def constant_phi(G: FreeProductGroup, cap: int, p: float = 2.0) -> CoarseMap:
    space = h_space(G, cap)
    return CoarseMap(space, {lab: BlockVector.single(p, np.zeros(G.rank_a)) for lab in space.labels})


def coset_representatives(G: FreeProductGroup, n: int, cap: int) -> list[GroupElement]:
    """One representative per left coset of ``H`` meeting ``B(n-1)`` (capped).

    The representative has least absolute length in its coset (then least
    normal form); this is the element with any trailing A-syllable removed.
    """
    if n < 1:
        raise ValueError("coset representatives need n >= 1")
    return sorted({coset_rep(b) for b in G.enumerate_ball(n - 1, cap)}, key=sort_key)


@dataclass(frozen=True)
class DecompositionCheck:
    ok: bool
    covered: int
    overlaps: list
    missing: list
    outside: list


def check_coset_decomposition(G: FreeProductGroup, n: int, cap: int) -> DecompositionCheck:
    """Brute-force check that ``B(n-1)H`` (capped) is the disjoint union of ``g H``, ``g`` in the representatives.

    The left side is built from products ``b h`` independently of :func:`coset_rep`;
    membership of each product in a coset is tested by ``g^-1 x in H``.
    """
    reps = coset_representatives(G, n, cap)
    lhs = set()
    for b in G.enumerate_ball(n - 1, cap):
        for h in G.h_elements(2 * cap):
            x = multiply(b, h)
            if x.abs_length <= cap:
                lhs.add(x)
    overlaps, missing = [], []
    covered = 0
    for x in lhs:
        owners = [g for g in reps if G.in_h(multiply(inverse(g), x))]
        if not owners:
            missing.append(x)
        elif len(owners) > 1:
            overlaps.append((x, owners))
        else:
            covered += 1
    outside = [g for g in reps if g not in lhs]
    return DecompositionCheck(not overlaps and not missing and not outside, covered, overlaps, missing, outside)


# --------------------------------------------------------------------------
# the embedding


@dataclass(frozen=True, eq=False)
class BallEmbedding:
    group: FreeProductGroup
    n: int
    cap: int
    map: CoarseMap
    elements: dict  # label -> GroupElement
    core: frozenset  # labels of Y_R
    phi1: CoarseMap | None  # on Y_R, tuned
    phi2: CoarseMap  # on capped H, translated and tuned
    R: float
    eps: float
    provenance: dict
    separation: SeparationCheck | None = None
    previous: BallEmbedding | None = field(default=None, repr=False)

    @property
    def p(self) -> float:
        return self.map.p

    def slot_of(self, label) -> str:
        g = self.elements[label]
        return Y_SLOT if label in self.core else coset_slot(coset_rep(g))

    def slots_ok(self) -> bool:
        """Every image uses only the ``Y`` slot or its own coset slot (plus ``Y``)."""
        for lab, v in self.map.images.items():
            tops = {k.split("/", 1)[0] for k in v.blocks}
            allowed = {Y_SLOT} if lab in self.core else {Y_SLOT, self.slot_of(lab)}
            if not tops <= allowed:
                return False
        return True

    def derived_delta(self) -> tuple[float, float]:
        """``(delta, s_star)`` for verification: ``s_star`` is the diameter and ``delta``
        the least compression of the ingredient maps at the scale that the
        three-way split of ``d(x, y)`` guarantees (floored at a tiny positive
        value, so collapsing ingredients fail instead of passing vacuously)."""
        s_star = float(self.map.space.diameter)
        vals = []
        if self.n == 1:
            vals.append(self.phi2.moduli.rho_minus_at(s_star - 2))
        elif self.n >= 2:
            vals.append(self.phi1.moduli.rho_minus_at(s_star / 3))
            vals.append(self.phi2.moduli.rho_minus_at(s_star / 3))
        finite = [v for v in vals if math.isfinite(v)]
        delta = min(finite) if finite else DELTA_FLOOR
        return max(delta, DELTA_FLOOR), s_star

    def verify(self, tol: float = 1e-9) -> ConditionReport:
        delta, s_star = self.derived_delta()
        return verify_conditions(self.map, self.R, self.eps, delta, s_star, tol)

    def case_identities(self, tol: float = 1e-9) -> dict:
        """Check the two exact norm identities on every applicable pair.

        ``case_1b``: ``x in g_i H \\ Y``, ``y in g_i H ∩ Y``:
        ``|phi x - phi y|^p = |phi_1(g_i) - phi_1(y)|^p + |phi_2(x_i)|^p``.
        ``case_2a``: ``x in g_i H \\ Y``, ``y in g_j H \\ Y``, ``i != j``:
        ``|phi x - phi y|^p = |phi_1(g_i) - phi_1(g_j)|^p + |phi_2(x_i)|^p + |phi_2(y_j)|^p``.
        """
        out = {"case_1b": {"pairs": 0, "max_error": 0.0}, "case_2a": {"pairs": 0, "max_error": 0.0}}
        if self.n < 2:
            out["ok"] = True
            return out
        p = self.p
        off = [lab for lab in self.map.space.labels if lab not in self.core]
        rep = {lab: coset_rep(self.elements[lab]) for lab in self.map.space.labels}
        x_part = {lab: str(h_part(self.elements[lab])) for lab in off}
        n1 = {lab: p_norm(self.phi2(x_part[lab])) ** p for lab in off}
        by_coset: dict = {}
        for lab in self.core:
            by_coset.setdefault(rep[lab], []).append(lab)
        D = self.map.image_distances()
        idx = self.map.space.index
        D1 = self.phi1.image_distances()
        idx1 = self.phi1.space.index

        def record(case, lhs, rhs):
            err = float(abs(lhs - rhs) / max(1.0, abs(rhs)))
            out[case]["pairs"] += 1
            out[case]["max_error"] = max(out[case]["max_error"], err)

        for x in off:
            gi = str(rep[x])
            for y in by_coset.get(rep[x], []):
                lhs = D[idx[x], idx[y]] ** p
                rhs = D1[idx1[gi], idx1[y]] ** p + n1[x]
                record("case_1b", lhs, rhs)
        for a_, x in enumerate(off):
            gi = str(rep[x])
            for y in off[a_ + 1 :]:
                if rep[y] == rep[x]:
                    continue
                gj = str(rep[y])
                lhs = D[idx[x], idx[y]] ** p
                rhs = D1[idx1[gi], idx1[gj]] ** p + n1[x] + n1[y]
                record("case_2a", lhs, rhs)
        out["ok"] = all(out[c]["max_error"] <= tol for c in ("case_1b", "case_2a"))
        return out

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "cap": self.cap,
            "group": {"factorA_rank": self.group.rank_a, "factorB_rank": self.group.rank_b},
            "R": self.R,
            "eps": self.eps,
            "p": self.p,
            "provenance": self.provenance,
            "map": self.map.to_json(),
        }


def _tuned_phi2(phi_H: CoarseMap, scale: float, eps: float) -> tuple[CoarseMap, int]:
    centered = phi_H.translate(str(IDENTITY))
    return rescale_to_scale(centered, scale, eps / 2)


def _nearest(elements: list[GroupElement], targets: list[GroupElement]) -> dict:
    """For each element, the closest target in ``d_S`` (ties to the least target) and the distance."""
    out = {}
    for y in elements:
        best, arg = math.inf, None
        yi = inverse(y)
        for t in targets:
            d = multiply(yi, t).abs_length
            if d < best:
                best, arg = d, t
        out[y] = (arg, best)
    return out


def _offset_coords(displacements: set, radius: int, G: FreeProductGroup) -> dict:
    """Frechet coordinates of short displacements against the absolute ball of ``radius``."""
    anchors = G.abs_ball(radius)
    return {u: np.array([float(dist_s(u, z)) for z in anchors]) for u in displacements}


def _extend(base_images, nearest, G, p, eps, radius):
    """``y -> base(pi(y)) (+) lam * tau(pi(y)^-1 y)`` with the offset scaled to at most ``eps / 2``."""
    disp = {y: multiply(inverse(t), y) for y, (t, _) in nearest.items()}
    tau = _offset_coords(set(disp.values()), radius, G)
    arr = np.array([tau[u] for u in tau.keys()])
    spread = 0.0
    if len(arr) > 1:
        spread = float(pdist(arr, "minkowski", p=p).max()) if p != 2 else float(pdist(arr).max())
    lam = (eps / 2) / spread if spread > 0 else 0.0
    images = {}
    for y, (t, _) in nearest.items():
        off = BlockVector.single(p, lam * tau[disp[y]], "off/0")
        images[str(y)] = base_images[str(t)].prefixed("base") + off
    return images, lam


def embed_ball(
    G: FreeProductGroup,
    n: int,
    cap: int,
    phi_H: CoarseMap,
    R: int = 1,
    eps: float = 1.0,
    p: float | None = None,
    previous: BallEmbedding | None = None,
    bcp: BCPConstant | None = None,
    search_radius: int | None = None,
    margin=None,
    budget: int = DEFAULT_BUDGET,
    tol: float = 1e-9,
) -> BallEmbedding:
    """Embed ``B(n) ∩ {|g|_S <= cap}`` following the induction on ``n``.

    ``phi_H`` is a coarse map on capped ``H`` (labels as produced by
    :func:`h_space`).  ``a(R)`` comes from :func:`bcp_constant` unless given.
    Raises ``ValueError`` with witnesses when the ``R``-separation of the
    off-core cosets fails or a point off the core is not a geodesic
    ``g_i x_i`` product.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if cap < n:
        raise ValueError("cap must be at least n")
    if p is None:
        p = phi_H.p
    if phi_H.p != p:
        raise ValueError(f"phi_H uses p={phi_H.p}, asked for p={p}")
    expected = set(h_space(G, cap).labels)
    if set(phi_H.space.labels) != expected:
        raise ValueError("phi_H must be defined on H capped at the same cap, labeled by normal forms")
    if bcp is None:
        bcp = bcp_constant(G, R, search_radius if search_radius is not None else cap, margin, budget)
    a = bcp.a
    tuning_scale = 3 * a
    phi2, h2 = _tuned_phi2(phi_H, tuning_scale, eps)

    ball = G.enumerate_ball(n, cap)
    elements = {str(g): g for g in ball}
    space = group_space(ball)
    common = {"a_R": a, "bcp": bcp.to_json(), "h2": h2, "tuning_scale": tuning_scale, "cap_note": f"under cap {cap}"}

    if n == 0:
        images = {str(IDENTITY): BlockVector.zero(p)}
        cmap = CoarseMap(space, images)
        prov = dict(common, reps=[], basepoints={}, Y_size=1)
        return BallEmbedding(G, 0, cap, cmap, elements, frozenset(images), cmap, phi2, R, eps, prov)

    if n == 1:
        hs = G.h_elements(cap)
        nearest = _nearest(ball, hs)
        radius = max(d for _, d in nearest.values())
        images, lam = _extend(phi2.images, nearest, G, p, eps, radius)
        images = {k: v.prefixed(Y_SLOT) for k, v in images.items()}
        cmap = CoarseMap(space, images)
        prov = dict(common, reps=[str(IDENTITY)], basepoints={str(IDENTITY): str(IDENTITY)}, Y_size=len(ball), lam=lam)
        core = frozenset(space.labels)
        return BallEmbedding(G, 1, cap, cmap, elements, core, cmap, phi2, R, eps, prov)

    if previous is None:
        previous = embed_ball(G, n - 1, cap, phi_H, R, eps, p, bcp=bcp, tol=tol)
    elif previous.n != n - 1 or previous.cap != cap:
        raise ValueError("previous embedding must be for n - 1 at the same cap")

    inner = [previous.elements[lab] for lab in previous.map.space.labels]
    nearest = _nearest(ball, inner)
    core_els = [y for y in ball if nearest[y][1] <= a]
    core = frozenset(str(y) for y in core_els)
    reps = coset_representatives(G, n, cap)
    rep_set = set(reps)

    off = [x for x in ball if str(x) not in core]
    for x in off:
        g = coset_rep(x)
        if g not in rep_set:
            raise ValueError(f"{x} lies outside Y_R and outside B(n-1)H")
        if rel_length(x) != rel_length(g) + 1:
            raise ValueError(f"{x} = {g} * {h_part(x)} is not a geodesic product")

    parts = []
    members: dict = {}
    for lab in space.labels:
        members.setdefault(coset_rep(elements[lab]), set()).add(lab)
    for g in reps:
        parts.append(frozenset(members.get(g, ())))
    pair = SubsetPair(space, tuple(parts), core=lambda s: core)
    sep = check_s_separated(pair, R, tol)
    if not sep.ok:
        raise SeparationFailure(
            f"off-core cosets are not {R}-separated: {sep.witness} at distance {sep.distance} "
            f"(cap too small or a(R)={a} underestimated)",
            sep,
        )

    core_sub = {y: nearest[y] for y in core_els}
    radius = max((d for _, d in core_sub.values()), default=0)
    ext_images, lam = _extend(previous.map.images, core_sub, G, p, eps, radius)
    ext = CoarseMap(space.subspace(core), ext_images)
    phi1, h1 = rescale_to_scale(ext, tuning_scale, eps / 2)

    images = {}
    for lab in space.labels:
        if lab in core:
            images[lab] = phi1(lab).prefixed(Y_SLOT)
        else:
            x = elements[lab]
            g = coset_rep(x)
            images[lab] = phi1(str(g)).prefixed(Y_SLOT) + phi2(str(h_part(x))).prefixed(coset_slot(g))
    cmap = CoarseMap(space, images)
    prov = dict(
        common,
        h1=h1,
        lam=lam,
        reps=[str(g) for g in reps],
        basepoints={str(g): str(g) for g in reps},
        Y_size=len(core),
        retraction_radius=radius,
        separation={"R": R, "distance": sep.distance, "ok": sep.ok},
    )
    return BallEmbedding(G, n, cap, cmap, elements, core, phi1, phi2, R, eps, prov, sep, previous)
