"""Coarse maps into ``E^p``, the three-condition checker, and the amalgamation
``x -> (+)_n (phi_n(x) - phi_n(x0))`` over a scale family.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .lp import BlockVector, direct_sum, p_norm
from .metric import TOL, FiniteMetricSpace, ModulusTable, compression_moduli, label_key


@dataclass(frozen=True, eq=False)
class CoarseMap:
    """A total table ``point -> BlockVector`` on a finite metric space."""

    space: FiniteMetricSpace
    images: Mapping

    def __post_init__(self):
        images = dict(self.images)
        missing = [x for x in self.space.labels if x not in images]
        if missing:
            raise ValueError(f"map is not total, missing images for {missing[:5]}")
        extra = [x for x in images if x not in self.space]
        if extra:
            raise ValueError(f"images given for points outside the space: {extra[:5]}")
        ps = {v.p for v in images.values()}
        if len(ps) > 1:
            raise ValueError(f"images use several exponents: {sorted(ps)}")
        object.__setattr__(self, "images", {x: images[x] for x in self.space.labels})

    @property
    def p(self) -> float:
        if not self.images:
            return 2.0
        return next(iter(self.images.values())).p

    def __call__(self, x) -> BlockVector:
        return self.images[x]

    @cached_property
    def layout(self) -> dict[str, int]:
        """Block key -> dimension, in first-seen order."""
        dims: dict[str, int] = {}
        for v in self.images.values():
            for k, blk in v.blocks.items():
                if dims.setdefault(k, blk.size) != blk.size:
                    raise ValueError(f"block {k!r} has inconsistent dimensions")
        return dims

    def as_array(self) -> np.ndarray:
        """Images flattened to rows over the union block layout (missing blocks are zero)."""
        offsets = {}
        pos = 0
        for k, dim in self.layout.items():
            offsets[k] = pos
            pos += dim
        out = np.zeros((len(self.space), pos))
        for i, v in enumerate(self.images.values()):
            for k, blk in v.blocks.items():
                out[i, offsets[k] : offsets[k] + blk.size] = blk
        return out

    def image_distances(self) -> np.ndarray:
        return self._image_distances

    @cached_property
    def _image_distances(self) -> np.ndarray:
        arr = self.as_array()
        n = len(self.space)
        if arr.shape[1] == 0:
            return np.zeros((n, n))
        if self.p == 2:
            d = cdist(arr, arr, "euclidean")
        elif self.p == 1:
            d = cdist(arr, arr, "cityblock")
        else:
            d = cdist(arr, arr, "minkowski", p=self.p)
        np.fill_diagonal(d, 0.0)
        return d

    def image_distance(self, x, y) -> float:
        return p_norm(self.images[x] - self.images[y])

    @cached_property
    def moduli(self) -> ModulusTable:
        return compression_moduli(self)

    def translate(self, basepoint) -> CoarseMap:
        """``x -> f(x) - f(basepoint)``."""
        ref = self.images[basepoint]
        return CoarseMap(self.space, {x: v - ref for x, v in self.images.items()})

    def scaled(self, c: float) -> CoarseMap:
        return CoarseMap(self.space, {x: c * v for x, v in self.images.items()})

    def restrict(self, labels) -> CoarseMap:
        sub = self.space.subspace(labels)
        return CoarseMap(sub, {x: self.images[x] for x in sub.labels})

    def to_json(self, space_ref=None) -> dict:
        return {
            "space": space_ref,
            "p": self.p,
            "images": {str(x): v.to_json() for x, v in self.images.items()},
        }


def constant_map(space: FiniteMetricSpace, p: float = 2.0, dim: int = 1) -> CoarseMap:
    z = BlockVector.single(p, np.zeros(dim))
    return CoarseMap(space, {x: z for x in space.labels})


def coordinate_map(space: FiniteMetricSpace, coords: Mapping, p: float = 2.0, key: str = "0") -> CoarseMap:
    """Map each point to the given coordinate vector (one block)."""
    return CoarseMap(space, {x: BlockVector.single(p, np.atleast_1d(coords[x]), key) for x in space.labels})


def frechet_embedding(space: FiniteMetricSpace, p: float = 2.0, key: str = "0") -> CoarseMap:
    """``x -> (d(x, z))_z``: expansion at most ``n^(1/p) d``, compression at least ``d``."""
    return CoarseMap(space, {x: BlockVector.single(p, space.dist[i], key) for i, x in enumerate(space.labels)})


def scale_divisor(coarse_map: CoarseMap, R: float, eps: float, strict: bool = False) -> int:
    """Smallest natural ``h`` with ``rho_plus(R) / h <= eps`` (``< eps`` if strict)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    top = coarse_map.moduli.rho_plus_at(R)
    h = max(1, math.ceil(top / eps))
    while (top / h >= eps) if strict else (top / h > eps):
        h += 1
    return h


def rescale_to_scale(coarse_map: CoarseMap, R: float, eps: float, strict: bool = False) -> tuple[CoarseMap, int]:
    """``phi = psi / h`` with the least natural ``h`` making ``sup_{d <= R} |phi x - phi y| <= eps``."""
    h = scale_divisor(coarse_map, R, eps, strict)
    return (coarse_map if h == 1 else coarse_map.scaled(1.0 / h)), h


# --------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class ConditionReport:
    R: float
    eps: float
    delta: float
    s_star: float
    sup_near: float  # sup of image distance over d <= R
    near_witness: tuple | None
    cond1: bool
    c_table: dict[int, float]  # m -> sup over d <= m
    cond2: bool
    inf_far: float  # inf of image distance over d >= s_star
    far_witness: tuple | None
    cond3: bool
    vacuous3: bool

    @property
    def ok(self) -> bool:
        return self.cond1 and self.cond2 and self.cond3

    @property
    def margins(self) -> dict[str, float]:
        return {"cond1": self.eps - self.sup_near, "cond3": self.inf_far - self.delta}

    def to_json(self) -> dict:
        return {
            "R": self.R,
            "eps": self.eps,
            "delta": self.delta,
            "s_star": self.s_star,
            "condition1": {"ok": self.cond1, "sup": self.sup_near, "witness": _wit(self.near_witness), "margin": self.margins["cond1"]},
            "condition2": {"ok": self.cond2, "C_m": {str(m): v for m, v in self.c_table.items()}},
            "condition3": {
                "ok": self.cond3,
                "inf": self.inf_far,
                "witness": _wit(self.far_witness),
                "margin": self.margins["cond3"],
                "vacuous": self.vacuous3,
            },
            "ok": self.ok,
        }


def _wit(w):
    return None if w is None else [str(x) for x in w]


def verify_conditions(
    coarse_map: CoarseMap,
    R: float,
    eps: float,
    delta: float,
    s_star: float | None = None,
    tol: float = TOL,
) -> ConditionReport:
    """Check the three embedding conditions at finite scale.

    (1) ``sup{|f x - f y| : d(x,y) <= R} <= eps``;
    (2) the table ``C_m = sup{|f x - f y| : d(x,y) <= m}`` for integers
    ``m <= diameter`` (always finite here, reported so growth can be judged);
    (3) ``inf{|f x - f y| : d(x,y) >= s_star} >= delta``, the finite reading of
    the limit; vacuous if no pair is that far apart.  ``s_star`` defaults to
    the diameter.
    """
    space = coarse_map.space
    if delta <= 0:
        raise ValueError("delta must be positive")
    if s_star is None:
        s_star = space.diameter
    if s_star > space.diameter + tol:
        raise ValueError(f"s_star={s_star} exceeds the diameter {space.diameter}")
    n = len(space)
    iu = np.triu_indices(n, 1)
    d = space.dist[iu]
    e = coarse_map.image_distances()[iu]

    near = d <= R + tol
    if near.any():
        k = int(np.argmax(np.where(near, e, -np.inf)))
        sup_near, near_w = float(e[k]), (space.labels[iu[0][k]], space.labels[iu[1][k]])
    else:
        sup_near, near_w = 0.0, None
    cond1 = sup_near <= eps + tol

    table = coarse_map.moduli
    c_table = {m: table.rho_plus_at(m) for m in range(1, int(math.floor(space.diameter + tol)) + 1)}
    cond2 = all(math.isfinite(v) for v in c_table.values())

    far = d >= s_star - tol
    if far.any():
        k = int(np.argmin(np.where(far, e, np.inf)))
        inf_far, far_w = float(e[k]), (space.labels[iu[0][k]], space.labels[iu[1][k]])
    else:
        inf_far, far_w = math.inf, None
    cond3 = inf_far >= delta - tol

    return ConditionReport(
        R=R,
        eps=eps,
        delta=delta,
        s_star=s_star,
        sup_near=sup_near,
        near_witness=None if cond1 else near_w,
        cond1=cond1,
        c_table=c_table,
        cond2=cond2,
        inf_far=inf_far,
        far_witness=None if cond3 else far_w,
        cond3=cond3,
        vacuous3=far_w is None,
    )


def verify_unbounded(coarse_map: CoarseMap, bound: float, tol: float = TOL) -> tuple[bool, float]:
    """Infinite-delta reading: at the largest threshold the compression must exceed ``bound``."""
    rm = coarse_map.moduli.rho_minus
    top = float(rm[-1]) if len(rm) else math.inf
    return top > bound + tol, top


# --------------------------------------------------------------------------
# scale family and amalgamation


def default_schedule(n: int) -> tuple[float, float]:
    """``R_n = n``, ``eps_n = 2^-n``."""
    return float(n), 2.0**-n


def select_separation_scales(maps: Sequence[CoarseMap], delta: float, tol: float = TOL) -> list[float]:
    """For each map, the least realized threshold ``s`` with ``rho_minus(s) > delta/2``.

    Ties with the previous scale are pushed up to ``s_{n-1} + gap`` where
    ``gap`` is the least positive difference between realized distances, so
    the result is strictly increasing.
    """
    if not maps:
        return []
    space = maps[0].space
    if any(m.space is not space and m.space.labels != space.labels for m in maps):
        raise ValueError("all maps of a family must live on the same space")
    real = np.concatenate([[0.0], space.realized_distances])
    gap = float(np.diff(real).min()) if len(real) > 1 else 1.0
    out: list[float] = []
    for i, m in enumerate(maps):
        table = m.moduli
        hits = np.flatnonzero(table.rho_minus > delta / 2 + tol)
        if hits.size == 0:
            raise ValueError(f"map #{i + 1} never separates pairs by more than delta/2 = {delta / 2}")
        s = float(table.thresholds[hits[0]])
        if out and s <= out[-1]:
            s = out[-1] + gap
        out.append(s)
    return out


@dataclass(frozen=True)
class ScaleMember:
    n: int
    R: float
    eps: float
    phi: CoarseMap
    s: float


@dataclass(frozen=True)
class ScaleFamily:
    """Maps ``phi_n`` tuned to ``(R_n, eps_n)`` with increasing separation scales ``s_n``."""

    members: tuple[ScaleMember, ...]
    delta: float
    basepoint: object
    truncation: int = field(default=0)

    def __post_init__(self):
        if not self.members:
            raise ValueError("empty scale family")
        space = self.space
        if self.basepoint not in space:
            raise ValueError(f"basepoint {self.basepoint!r} is not a point of the space")
        ss = [m.s for m in self.members]
        if any(b <= a for a, b in zip(ss, ss[1:])):
            raise ValueError(f"separation scales must increase strictly: {ss}")
        for m in self.members:
            if m.phi.moduli.rho_minus_at(m.s) <= self.delta / 2:
                raise ValueError(f"member n={m.n}: rho_minus(s_n) does not exceed delta/2")
        if len({m.phi.p for m in self.members}) > 1:
            raise ValueError("members must share the target exponent")
        if sum(m.eps ** m.phi.p for m in self.members) == math.inf:
            raise ValueError("eps schedule is not p-summable")
        if not self.truncation:
            object.__setattr__(self, "truncation", len(self.members))

    @property
    def space(self) -> FiniteMetricSpace:
        return self.members[0].phi.space

    @property
    def p(self) -> float:
        return self.members[0].phi.p

    @property
    def scales(self) -> list[float]:
        return [m.s for m in self.members]


def default_basepoint(space: FiniteMetricSpace):
    return min(space.labels, key=label_key)


def build_scale_family(
    maps: Sequence[CoarseMap],
    delta: float,
    basepoint=None,
    schedule: Callable[[int], tuple[float, float]] = default_schedule,
    check_schedule: bool = True,
    tol: float = TOL,
) -> ScaleFamily:
    """Wrap ``maps[n-1]`` as ``phi_n`` with ``(R_n, eps_n) = schedule(n)``.

    With ``check_schedule`` each map must satisfy
    ``sup_{d <= R_n} |phi_n x - phi_n y| <= eps_n``.
    """
    if not maps:
        raise ValueError("no maps")
    space = maps[0].space
    if basepoint is None:
        basepoint = default_basepoint(space)
    scales = select_separation_scales(maps, delta, tol)
    members = []
    for n, (phi, s) in enumerate(zip(maps, scales), start=1):
        R, eps = schedule(n)
        if check_schedule and phi.moduli.rho_plus_at(R) > eps + tol:
            raise ValueError(f"phi_{n} expands pairs at distance <= {R} beyond eps_{n} = {eps}")
        members.append(ScaleMember(n, R, eps, phi, s))
    return ScaleFamily(tuple(members), delta, basepoint)


def family_from_coarse_embedding(
    psi: CoarseMap,
    delta: float | None = None,
    n_members: int | None = None,
    basepoint=None,
    schedule: Callable[[int], tuple[float, float]] = default_schedule,
) -> ScaleFamily:
    """Scale family from a single coarse map ``psi`` by rescaling, ``phi_n = psi / h_n``.

    ``h_n`` is the least natural number with ``rho_plus(R_n) / h_n < eps_n``.
    The family is truncated at ``ceil(diameter)`` members by default.  When
    ``delta`` is omitted it is set to the least top-threshold compression over
    the members, so every ``s_n`` falls inside the diameter before the
    strict-increase adjustment.
    """
    space = psi.space
    if n_members is None:
        n_members = max(1, math.ceil(space.diameter))
    maps = []
    for n in range(1, n_members + 1):
        R, eps = schedule(n)
        maps.append(rescale_to_scale(psi, R, eps, strict=True)[0])
    if delta is None:
        tops = [float(m.moduli.rho_minus[-1]) for m in maps if len(m.moduli.rho_minus)]
        delta = min(tops) if tops else 1.0
        if delta <= 0:
            raise ValueError("psi collapses the farthest pairs; no positive delta")
    fam = build_scale_family(maps, delta, basepoint, schedule)
    object.__setattr__(fam, "truncation", n_members)
    return fam


def amalgamate(family: ScaleFamily) -> CoarseMap:
    """``Phi(x) = (+)_n (phi_n(x) - phi_n(x0))``; member ``n`` occupies slots ``"n<n>/..."``."""
    x0 = family.basepoint
    space = family.space
    translated = [m.phi.translate(x0) for m in family.members]
    prefixes = [f"n{m.n}" for m in family.members]
    images = {x: direct_sum([t(x) for t in translated], prefixes) for x in space.labels}
    return CoarseMap(space, images)


@dataclass(frozen=True)
class BoundCheck:
    pairs: int
    upper_violations: list
    lower_violations: list
    upper_worst_margin: float
    lower_worst_margin: float

    @property
    def ok(self) -> bool:
        return not self.upper_violations and not self.lower_violations


def amalgamation_bounds(family: ScaleFamily, phi: CoarseMap, tol: float = 1e-9) -> BoundCheck:
    """Check the two amalgamation inequalities on every pair.

    Upper: with ``k - 1 < d(x,y) <= k``,
    ``|Phi x - Phi y|^p <= sum_{n<k} (C_n^k)^p + sum_{n>=k} eps_n^p`` where
    ``C_n^k = sup{|phi_n x - phi_n y| : d <= k}`` and both sums run over the
    family.  Lower: if ``d(x,y) >= s_{k-1}`` then
    ``|Phi x - Phi y|^p > (k-1)(delta/2)^p``, checked with the largest such ``k``.
    """
    space = family.space
    p = family.p
    members = family.members
    scales = np.array(family.scales)
    n = len(space)
    iu = np.triu_indices(n, 1)
    d = space.dist[iu]
    e_p = phi.image_distances()[iu] ** p
    up_bad, lo_bad = [], []
    up_margin, lo_margin = math.inf, math.inf

    ks = np.ceil(d - tol).astype(int)
    cache: dict[int, float] = {}
    for k in np.unique(ks):
        k = int(k)
        total = 0.0
        for m in members:
            if m.R >= k:
                total += m.eps**p
            else:
                total += m.phi.moduli.rho_plus_at(k) ** p
        cache[k] = total
    bound_up = np.array([cache[int(k)] for k in ks])
    slack = bound_up * (1 + tol) + tol - e_p
    if slack.size:
        up_margin = float(slack.min())
    for idx in np.flatnonzero(slack < 0):
        up_bad.append((space.labels[iu[0][idx]], space.labels[iu[1][idx]], float(e_p[idx]), float(bound_up[idx])))

    count = np.searchsorted(scales, d + tol, side="right")  # k - 1 = #{n : s_n <= d}
    bound_lo = count * (family.delta / 2) ** p
    has = count > 0
    lslack = e_p - bound_lo
    if has.any():
        lo_margin = float(lslack[has].min())
    for idx in np.flatnonzero(has & (lslack <= 0)):
        lo_bad.append((space.labels[iu[0][idx]], space.labels[iu[1][idx]], float(e_p[idx]), float(bound_lo[idx])))
    return BoundCheck(len(d), up_bad, lo_bad, up_margin, lo_margin)
