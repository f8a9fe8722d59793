"""Finite pieces of ``E^p``: block vectors under the aggregated p-norm.

Also the Mazur map between exponents and a sampled modulus of convexity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar


def _check_p(p: float) -> float:
    p = float(p)
    if not p >= 1 or math.isinf(p):
        raise ValueError(f"exponent must lie in [1, inf), got {p}")
    return p


def pnorm_array(x: np.ndarray, p: float) -> float:
    """p-norm of a flat array, rescaled by the max entry to avoid overflow."""
    x = np.abs(np.asarray(x, dtype=float)).ravel()
    if x.size == 0:
        return 0.0
    m = x.max()
    if m == 0:
        return 0.0
    if p == 1:
        return float(x.sum())
    if p == 2:
        return float(m * np.sqrt(np.sum((x / m) ** 2)))
    return float(m * np.sum((x / m) ** p) ** (1.0 / p))


@dataclass(frozen=True, eq=False)
class BlockVector:
    """An element of ``E^p`` with finitely many nonzero blocks.

    ``blocks`` maps a stable slot key to a dense coordinate block.  Missing
    keys are zero blocks, so vectors with different key sets can be
    subtracted.  Each block carries its own p-norm and blocks aggregate by
    the p-norm again, which is the same as the p-norm of all coordinates.
    """

    p: float
    blocks: Mapping[str, np.ndarray]

    def __post_init__(self):
        p = _check_p(self.p)
        blocks = {}
        for key, val in self.blocks.items():
            arr = np.array(val, dtype=float).ravel()
            if not np.isfinite(arr).all():
                raise ValueError(f"block {key!r} has non-finite coordinates")
            arr.flags.writeable = False
            blocks[str(key)] = arr
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def zero(cls, p: float) -> BlockVector:
        return cls(p, {})

    @classmethod
    def single(cls, p: float, coords, key: str = "0") -> BlockVector:
        return cls(p, {key: coords})

    @property
    def keys(self) -> tuple[str, ...]:
        return tuple(self.blocks)

    def block_norms(self) -> dict[str, float]:
        return {k: pnorm_array(v, self.p) for k, v in self.blocks.items()}

    def norm(self) -> float:
        return p_norm(self)

    def _combine(self, other: BlockVector, sign: float) -> BlockVector:
        if other.p != self.p:
            raise ValueError(f"exponent mismatch: {self.p} vs {other.p}")
        out = dict(self.blocks)
        for k, v in other.blocks.items():
            if k in out:
                if out[k].shape != v.shape:
                    raise ValueError(f"block {k!r} has dimension {out[k].shape} vs {v.shape}")
                out[k] = out[k] + sign * v
            else:
                out[k] = sign * v
        return BlockVector(self.p, out)

    def __add__(self, other: BlockVector) -> BlockVector:
        return self._combine(other, 1.0)

    def __sub__(self, other: BlockVector) -> BlockVector:
        return self._combine(other, -1.0)

    def __mul__(self, c: float) -> BlockVector:
        return BlockVector(self.p, {k: c * v for k, v in self.blocks.items()})

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> BlockVector:
        return self * (1.0 / c)

    def prefixed(self, prefix: str) -> BlockVector:
        return BlockVector(self.p, {f"{prefix}/{k}": v for k, v in self.blocks.items()})

    def allclose(self, other: BlockVector, atol: float = 1e-12) -> bool:
        return p_norm(self - other) <= atol

    def to_json(self) -> dict:
        return {"p": self.p, "blocks": {k: v.tolist() for k, v in self.blocks.items()}}

    @classmethod
    def from_json(cls, doc: Mapping) -> BlockVector:
        return cls(float(doc["p"]), {k: v for k, v in doc["blocks"].items()})


def p_norm(v: BlockVector) -> float:
    """``(sum_n |block_n|_p^p)^(1/p)``."""
    if not v.blocks:
        return 0.0
    return pnorm_array(np.concatenate(list(v.blocks.values())), v.p)


def direct_sum(vs: Sequence[BlockVector], prefixes: Sequence[str] | None = None) -> BlockVector:
    """Concatenate block lists.

    Without ``prefixes`` the key sets must be disjoint; with them, block
    ``k`` of ``vs[i]`` becomes ``f"{prefixes[i]}/{k}"``.
    """
    if not vs:
        raise ValueError("direct_sum of an empty list")
    p = vs[0].p
    if any(v.p != p for v in vs):
        raise ValueError("direct_sum needs a common exponent")
    if prefixes is not None:
        if len(prefixes) != len(vs):
            raise ValueError("one prefix per summand")
        vs = [v.prefixed(pre) for v, pre in zip(vs, prefixes)]
    out: dict[str, np.ndarray] = {}
    for v in vs:
        for k, blk in v.blocks.items():
            if k in out:
                raise ValueError(f"block key {k!r} occurs in two summands")
            out[k] = blk
    return BlockVector(p, out)


class SlotRegistry:
    """Stable ``key -> slot name`` assignment for indexed direct sums.

    Names are ``f"{prefix}{str(key)}"``; the registry only enforces that two
    distinct keys never share a name and remembers first-seen order.
    """

    def __init__(self, prefix: str = ""):
        self.prefix = prefix
        self._names: dict = {}
        self._owner: dict[str, object] = {}

    def slot(self, key) -> str:
        if key in self._names:
            return self._names[key]
        name = f"{self.prefix}{key}"
        if name in self._owner:
            raise ValueError(f"slot name {name!r} already taken by {self._owner[name]!r}")
        self._names[key] = name
        self._owner[name] = key
        return name

    def __len__(self):
        return len(self._names)

    def items(self):
        return list(self._names.items())


def mazur_map(v: BlockVector, q: float) -> BlockVector:
    """``x_i -> sign(x_i) |x_i|^(p/q)``, landing in ``l^q``.

    ``|M(v)|_q = |v|_p^(p/q)``, so unit spheres go to unit spheres.
    """
    q = _check_p(q)
    r = v.p / q
    return BlockVector(q, {k: np.sign(b) * np.abs(b) ** r for k, b in v.blocks.items()})


def uniform_bound_check(images: Iterable[BlockVector], bound: float) -> tuple[bool, float]:
    """Is every image norm below ``bound``?  Returns the flag and the observed max."""
    worst = max((p_norm(v) for v in images), default=0.0)
    return worst < bound, worst


# --------------------------------------------------------------------------
# modulus of convexity


@dataclass(frozen=True)
class ConvexityEstimate:
    p: float
    eps: float
    delta: float
    samples: int
    witness: tuple[tuple[float, float], tuple[float, float]] | None


def _unit(theta: float, p: float) -> np.ndarray:
    v = np.array([math.cos(theta), math.sin(theta)])
    return v / pnorm_array(v, p)


def _chord(theta: float, t: float, p: float) -> float:
    return pnorm_array(_unit(theta, p) - _unit(theta + t, p), p)


def _gap(theta: float, t: float, p: float) -> float:
    return 1.0 - pnorm_array((_unit(theta, p) + _unit(theta + t, p)) / 2, p)


def convexity_modulus_estimate(p: float, eps: float, samples: int = 2000, seed: int = 0) -> ConvexityEstimate:
    """Sampled ``delta(eps) = inf{1 - |(x+y)/2| : |x| = |y| = 1, |x - y| >= eps}`` in ``l^p``.

    Any pair spans a 2-plane, so the search runs over the unit circle of
    ``l^p_2``: for each sampled angle the partner at chord length exactly
    ``eps`` is found by root finding (chord length is monotone in the angle
    gap on a symmetric convex curve), a few partners further out are also
    scored, and the best angle is refined locally.  The result is a minimum
    over evaluated pairs, hence an upper bound on the true modulus.

    ``p = 1`` is rejected: the ``l^1`` sphere contains segments, so the
    modulus is 0 for every ``eps <= 1`` and ``l^1`` is not uniformly convex.
    """
    p = _check_p(p)
    if p == 1:
        raise ValueError("l^1 is not uniformly convex (its unit sphere contains segments)")
    if not 0 <= eps <= 2:
        raise ValueError("eps must lie in [0, 2]")
    if eps == 0:
        return ConvexityEstimate(p, eps, 0.0, 0, None)
    if samples < 1:
        raise ValueError("samples must be positive")

    def partner_gap(theta: float) -> float:
        if eps >= 2:
            t = math.pi
        else:
            t = brentq(lambda s: _chord(theta, s, p) - eps, 1e-15, math.pi, xtol=1e-15)
        return t

    rng = np.random.default_rng(seed)
    # four-fold symmetry of the l^p circle: angles in [0, pi/2) suffice
    thetas = (np.arange(samples) + rng.uniform(0, 1, samples)) * (math.pi / 2) / samples
    best = (math.inf, 0.0, 0.0)
    for theta in thetas:
        t0 = partner_gap(theta)
        for t in np.linspace(t0, math.pi, 4):
            g = _gap(theta, t, p)
            if g < best[0]:
                best = (g, float(theta), float(t))

    width = (math.pi / 2) / samples
    res = minimize_scalar(
        lambda th: _gap(th, partner_gap(th), p),
        bounds=(best[1] - width, best[1] + width),
        method="bounded",
        options={"xatol": 1e-12},
    )
    if res.fun < best[0]:
        best = (float(res.fun), float(res.x), partner_gap(float(res.x)))
    g, theta, t = best
    x, y = _unit(theta, p), _unit(theta + t, p)
    return ConvexityEstimate(p, eps, max(g, 0.0), samples, (tuple(x.tolist()), tuple(y.tolist())))
