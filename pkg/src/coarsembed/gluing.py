"""Gluing coarse embeddings of pieces into one embedding of the union.

Two pieces separated off a bounded core are handled by :func:`glue_two`,
which has a variant for splittings with a remainder point
(:func:`glue_long_range`).  Any finite family of equi-embedded pieces, one
block slot each, goes through :func:`glue_family`.  Every
construction refuses (raises :class:`GlueError`) rather than emit a map
whose separation hypothesis fails.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .embedding import CoarseMap, coordinate_map, frechet_embedding, rescale_to_scale
from .lp import BlockVector, SlotRegistry
from .metric import TOL, FiniteMetricSpace, SeparationCheck, SubsetPair, check_s_separated, label_key


class GlueError(ValueError):
    """A gluing precondition failed; ``witness`` carries the offending data if any."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class MapProvider:
    """Scale-indexed maps ``r -> phi_r`` on a piece, over a ladder of scales."""

    build: Callable[[float, FiniteMetricSpace], CoarseMap]
    scales: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(sorted(float(s) for s in self.scales)))

    def at(self, r: float, piece: FiniteMetricSpace) -> CoarseMap:
        return self.build(r, piece)

    def scale_above(self, x: float) -> float:
        for s in self.scales:
            if s > x:
                return s
        raise GlueError(f"provider has no scale exceeding {x} (largest is {self.scales[-1] if self.scales else None})")


def scaled_coordinates_provider(coords: Mapping, scales: Iterable[float], factor: float = 2.0, p: float = 2.0) -> MapProvider:
    """``phi_r(x) = coords[x] / (factor * r)``."""

    def build(r, piece):
        return coordinate_map(piece, {x: np.asarray(coords[x], dtype=float) / (factor * r) for x in piece.labels}, p)

    return MapProvider(build, tuple(scales))


def fixed_provider(coords: Mapping, scales: Iterable[float] = (math.inf,), p: float = 2.0) -> MapProvider:
    """The same coordinate map at every scale."""
    return MapProvider(lambda r, piece: coordinate_map(piece, {x: coords[x] for x in piece.labels}, p), tuple(scales))


def frechet_provider(eps: float, scales: Iterable[float], p: float = 2.0) -> MapProvider:
    """Distance-coordinate embedding of the piece, divided by the least natural
    number that brings ``sup_{d <= r}`` down to ``eps``."""

    def build(r, piece):
        return rescale_to_scale(frechet_embedding(piece, p), r, eps)[0]

    return MapProvider(build, tuple(scales))


@dataclass(frozen=True)
class GlueInput:
    pair: SubsetPair
    embedders: tuple[MapProvider, ...]
    p: float = 2.0
    expansion_bound: Callable[[float], float] | None = None
    properness_bound: Callable[[float], float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "embedders", tuple(self.embedders))
        if len(self.embedders) != len(self.pair.parts):
            raise ValueError("one embedder per part")


@dataclass(frozen=True)
class GlueResult:
    map: CoarseMap
    branch: dict  # label -> part index, or None for the core / remainder
    core: frozenset
    basepoints: tuple
    scale: float  # the s at which the core was taken (2R, R, or n)
    k: float  # radius of the core about the reference point
    r: tuple[float, ...]  # provider scale used for each part
    piece_maps: tuple[CoarseMap, ...]
    kind: str
    separation: SeparationCheck | None = None
    contract: dict = field(default_factory=dict)

    def partition_ok(self) -> bool:
        """Every point lies in exactly one branch of the piecewise definition."""
        labels = self.map.space.labels
        if set(self.branch) != set(labels):
            return False
        for x in labels:
            b = self.branch[x]
            in_core = x in self.core
            if (b is None) != in_core:
                return False
            if b is not None and x not in self.piece_maps[b].space:
                return False
        return True

    def verification_params(self) -> tuple[float, float]:
        """``(delta, s_star)`` from the pieces: ``s_star`` is the diameter of the
        union, ``delta`` the least compression of a piece map at the piece's
        own diameter."""
        deltas = []
        for pm in self.piece_maps:
            rm = pm.moduli.rho_minus
            if len(rm):
                deltas.append(float(rm[-1]))
        delta = min(deltas) if deltas else 1.0
        return delta, self.map.space.diameter

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "scale": self.scale,
            "k": self.k,
            "r": list(self.r),
            "basepoints": [str(b) for b in self.basepoints],
            "core": sorted(str(c) for c in self.core),
            "branch": {str(x): (None if b is None else b + 1) for x, b in self.branch.items()},
            "contract": self.contract,
        }


def _first(labels: Iterable):
    return min(labels, key=label_key)


def _closest(space: FiniteMetricSpace, center, candidates: Iterable):
    return min(candidates, key=lambda x: (space.d(center, x), label_key(x)))


def _require_cover(pair: SubsetPair):
    covered = frozenset().union(*pair.parts)
    missing = [x for x in pair.base.labels if x not in covered]
    if missing:
        raise GlueError(f"parts do not cover the space, e.g. {missing[:5]}")


def _check_scale(phi: CoarseMap, r: float, eps: float, part: int, tol: float):
    sup = phi.moduli.rho_plus_at(r)
    if sup > eps + tol:
        raise GlueError(f"embedder of part {part + 1} at scale r={r} expands pairs within r to {sup} > eps={eps}", (part, r, sup))


def _assemble(space, p, branch, piece_maps, basepoints, slots):
    zero = BlockVector.zero(p)
    images = {}
    for x in space.labels:
        i = branch[x]
        if i is None:
            images[x] = zero
        else:
            images[x] = (piece_maps[i](x) - piece_maps[i](basepoints[i])).prefixed(slots[i])
    return CoarseMap(space, images)


def glue_two(inp: GlueInput, R: float, eps: float, tol: float = TOL) -> GlueResult:
    """Two-piece gluing off the core ``C_{2R}``.

    If the pieces meet, a common point ``x0`` is added to every core and both
    pieces are based at it; otherwise each piece is based at its own point of
    ``C_{2R}``.  Points of piece ``i`` off the core go to
    ``phi_r^i(x) - phi_r^i(base_i)`` in slot ``i``; core points go to 0.  The
    scale ``r`` is the least ladder scale above ``2R + k`` with
    ``C_{2R} ⊆ B(x0, k)``.
    """
    pair = inp.pair
    if len(pair.parts) != 2:
        raise GlueError("glue_two needs exactly two parts")
    if pair.core is None:
        raise GlueError("no core provider")
    _require_cover(pair)
    space = pair.base
    X1, X2 = pair.parts
    s = 2 * R
    meet = X1 & X2
    core = pair.core_at(s)
    if meet:
        x0 = _first(meet)
        core = core | {x0}
        basepoints = (x0, x0)
        kind = "intersecting"
    else:
        c1, c2 = X1 & core, X2 & core
        if not c1 or not c2:
            raise GlueError(f"disjoint pieces must both meet the core C({s})")
        x0 = _first(c1)
        basepoints = (x0, _first(c2))
        kind = "disjoint"
    aug = SubsetPair(space, pair.parts, lambda _s, c=core: c)
    sep = check_s_separated(aug, s, tol)
    if not sep.ok:
        raise GlueError(
            f"pieces off the core are not {s}-separated: {sep.witness} at distance {sep.distance}",
            sep.witness,
        )
    k = space.radius_about(x0, core)
    rs = tuple(e.scale_above(s + k) for e in inp.embedders)
    piece_maps = []
    for i, (prov, r) in enumerate(zip(inp.embedders, rs)):
        phi = prov.at(r, space.subspace(pair.parts[i]))
        _check_scale(phi, r, eps, i, tol)
        piece_maps.append(phi)
    branch = {}
    for x in space.labels:
        if x in core:
            branch[x] = None
        else:
            branch[x] = 0 if x in X1 else 1
    glued = _assemble(space, inp.p, branch, piece_maps, basepoints, ("1", "2"))
    return GlueResult(glued, branch, frozenset(core), basepoints, s, k, rs, tuple(piece_maps), kind, sep)


def cross_pair_claim(pair: SubsetPair, base_scale: float, m: float, tol: float = TOL) -> list[tuple]:
    """Pairs contradicting "cross-piece pairs within ``m`` off ``C_{base}`` have a point in ``C_m``".

    Returns the offending pairs (empty when the claim holds).
    """
    space = pair.base
    cm = pair.core_at(m)
    off = [sorted(pair.off_core(i, base_scale), key=space.index.get) for i in range(len(pair.parts))]
    bad = []
    for i in range(len(off)):
        for j in range(i + 1, len(off)):
            ii = [space.index[x] for x in off[i]]
            jj = [space.index[x] for x in off[j]]
            if not ii or not jj:
                continue
            block = space.dist[np.ix_(ii, jj)]
            for a, b in np.argwhere(block <= m + tol):
                x, y = off[i][a], off[j][b]
                if x != y and x not in cm and y not in cm:
                    bad.append((x, y))
    return bad


def glue_long_range(
    space: FiniteMetricSpace,
    pieces: Callable[[int], tuple[Iterable, Iterable] | None],
    embedders: Callable[[int, int, FiniteMetricSpace], CoarseMap],
    R: float,
    eps: float | None = None,
    max_n: int | None = None,
    p: float = 2.0,
    tol: float = TOL,
) -> GlueResult:
    """Gluing for a space split, at each ``n``, into two ``n``-separated pieces
    plus a bounded remainder.

    Picks the least integer ``n > R`` whose pieces are ``n``-separated and a
    point ``x_n`` of the remainder; piece ``i`` goes to
    ``phi_i^n(x) - phi_i^n(x_n)`` in slot ``i``, the remainder to 0.  The
    embedder for piece ``i`` is evaluated on the piece together with ``x_n``
    so that the translate is defined.
    """
    if max_n is None:
        max_n = int(math.ceil(space.diameter)) + 1
    chosen = None
    for n in range(int(math.floor(R)) + 1, max_n + 1):
        got = pieces(n)
        if got is None:
            continue
        X1, X2 = frozenset(got[0]), frozenset(got[1])
        if not X1 or not X2:
            continue
        dmin = min(space.d(x, y) for x in X1 for y in X2)
        if dmin >= n - tol:
            chosen = (n, X1, X2)
            break
    if chosen is None:
        raise GlueError(f"no n in ({R}, {max_n}] with {{n}}-separated pieces")
    n, X1, X2 = chosen
    remainder = frozenset(space.labels) - X1 - X2
    if not remainder:
        raise GlueError(f"no x_n: the remainder X \\ (X1 ∪ X2) is empty at n={n}", n)
    xn = _first(remainder)
    piece_maps = []
    for i, part in enumerate((X1, X2)):
        phi = embedders(i, n, space.subspace(part | {xn}))
        if eps is not None:
            _check_scale(phi, R, eps, i, tol)
        piece_maps.append(phi)
    branch = {x: (0 if x in X1 else 1 if x in X2 else None) for x in space.labels}
    glued = _assemble(space, p, branch, piece_maps, (xn, xn), ("1", "2"))
    k = space.radius_about(xn, remainder)
    return GlueResult(glued, branch, remainder, (xn,), float(n), k, (float(n), float(n)), tuple(piece_maps), "long_range")


def equi_embedding_tables(maps: Sequence[CoarseMap], scales: Sequence[float]) -> dict:
    """Common bounds for a family: ``S(s) = max_i sup{|f_i x - f_i y| : d <= s}`` and
    ``R(r) = max_i sup{d(x, y) : |f_i x - f_i y| <= r}``."""
    expansion = {float(s): max(m.moduli.rho_plus_at(s) for m in maps) for s in scales}
    proper = {}
    for r in scales:
        worst = 0.0
        for m in maps:
            n = len(m.space)
            iu = np.triu_indices(n, 1)
            d = m.space.dist[iu]
            e = m.image_distances()[iu]
            sel = d[e <= r + TOL]
            if sel.size:
                worst = max(worst, float(sel.max()))
        proper[float(r)] = worst
    return {"expansion": expansion, "properness": proper}


def _check_contract(inp: GlueInput, maps: Sequence[CoarseMap], scales: Sequence[float], tol: float) -> dict:
    tables = equi_embedding_tables(maps, scales)
    for i, m in enumerate(maps):
        for s in scales:
            if inp.expansion_bound is not None:
                got = m.moduli.rho_plus_at(s)
                if got > inp.expansion_bound(s) + tol:
                    raise GlueError(f"part {i + 1} breaks the expansion bound at s={s}: {got}", (i, s))
            if inp.properness_bound is not None:
                n = len(m.space)
                iu = np.triu_indices(n, 1)
                sel = m.space.dist[iu][m.image_distances()[iu] <= s + tol]
                got = float(sel.max()) if sel.size else 0.0
                if got > inp.properness_bound(s) + tol:
                    raise GlueError(f"part {i + 1} breaks the properness bound at r={s}: {got}", (i, s))
    return {k: {str(s): v for s, v in t.items()} for k, t in tables.items()}


def glue_family(inp: GlueInput, R: float, eps: float, tol: float = TOL) -> GlueResult:
    """Gluing of finitely many pieces, each in its own slot, off the core ``C_R``.

    ``x0`` is the centre of ``C_R`` (least eccentricity within it), ``k0`` its
    radius about ``x0``, and each piece is based at its point of ``C_R``
    nearest ``x0``.  The scale is the least ladder scale above ``k0 + 2R``.
    """
    pair = inp.pair
    if pair.core is None:
        raise GlueError("no core provider")
    _require_cover(pair)
    space = pair.base
    core = pair.core_at(R)
    for i, part in enumerate(pair.parts):
        if not part & core:
            raise GlueError(f"part {i + 1} misses the core C({R})", i)
    sub = space.subspace(core)
    ecc = sub.dist.max(axis=1)
    x0 = min(sub.labels, key=lambda x: (ecc[sub.index[x]], label_key(x)))
    k0 = space.radius_about(x0, core)
    basepoints = tuple(_closest(space, x0, part & core) for part in pair.parts)
    sep = check_s_separated(pair, R, tol)
    if not sep.ok:
        raise GlueError(f"pieces off the core are not {R}-separated: {sep.witness} at distance {sep.distance}", sep.witness)
    rs = tuple(e.scale_above(k0 + 2 * R) for e in inp.embedders)
    piece_maps = []
    for i, (prov, r) in enumerate(zip(inp.embedders, rs)):
        phi = prov.at(r, space.subspace(pair.parts[i]))
        _check_scale(phi, r, eps, i, tol)
        piece_maps.append(phi)
    scales = list(range(1, int(math.floor(space.diameter + tol)) + 1))
    contract = _check_contract(inp, piece_maps, scales, tol)
    registry = SlotRegistry()
    slots = tuple(registry.slot(i + 1) for i in range(len(pair.parts)))
    branch = {}
    for x in space.labels:
        if x in core:
            branch[x] = None
        else:
            branch[x] = next(i for i, part in enumerate(pair.parts) if x in part)
    glued = _assemble(space, inp.p, branch, piece_maps, basepoints, slots)
    return GlueResult(glued, branch, core, basepoints, R, k0, rs, tuple(piece_maps), "family", sep, contract)
