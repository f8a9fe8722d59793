"""Finite metric spaces, separation of subsets, compression/expansion moduli."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

TOL = 1e-9

Label = Hashable


def label_key(label):
    """Sort key putting comparable labels in natural order, others by repr."""
    if isinstance(label, (int, float)) and not isinstance(label, bool):
        return (0, label, "")
    return (1, 0, repr(label) if not isinstance(label, str) else label)


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """A labeled point set with a validated distance matrix.

    Use :func:`check_metric` (or :meth:`from_matrix`) to build one; the
    constructor itself only checks shapes.
    """

    labels: tuple
    dist: np.ndarray

    def __post_init__(self):
        d = np.array(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] != len(self.labels):
            raise ValueError("distance matrix must be square and match the labels")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be distinct")
        d.flags.writeable = False
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "dist", d)

    @classmethod
    def from_matrix(cls, dist, labels=None, tol: float = TOL) -> FiniteMetricSpace:
        """Validate and build; raises :class:`MetricError` on any violation."""
        if labels is None:
            labels = list(range(len(dist)))
        report = check_metric(dist, labels, tol=tol)
        if not report.valid:
            raise MetricError(report.summary())
        return report.space

    @classmethod
    def from_function(cls, points: Sequence, metric: Callable, tol: float = TOL) -> FiniteMetricSpace:
        pts = list(points)
        n = len(pts)
        d = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                d[i, j] = d[j, i] = metric(pts[i], pts[j])
        return cls.from_matrix(d, pts, tol=tol)

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label):
        return label in self.index

    @cached_property
    def index(self) -> dict:
        return {lab: i for i, lab in enumerate(self.labels)}

    def d(self, x, y) -> float:
        return float(self.dist[self.index[x], self.index[y]])

    @cached_property
    def diameter(self) -> float:
        return float(self.dist.max()) if len(self) else 0.0

    @cached_property
    def realized_distances(self) -> np.ndarray:
        """Sorted distinct positive distances."""
        n = len(self)
        iu = np.triu_indices(n, 1)
        return np.unique(self.dist[iu])

    def subspace(self, labels: Iterable) -> FiniteMetricSpace:
        labs = sorted(set(labels), key=lambda lab: self.index[lab])
        idx = [self.index[lab] for lab in labs]
        return FiniteMetricSpace(tuple(labs), self.dist[np.ix_(idx, idx)])

    def radius_about(self, center, subset: Iterable) -> float:
        """Smallest ``k`` with ``subset`` inside the closed ball ``B(center, k)``."""
        idx = [self.index[lab] for lab in subset]
        if not idx:
            return 0.0
        return float(self.dist[self.index[center], idx].max())

    def ball(self, center, radius: float, tol: float = TOL) -> frozenset:
        row = self.dist[self.index[center]]
        return frozenset(lab for lab, dv in zip(self.labels, row) if dv <= radius + tol)

    def relabel(self, mapping: dict) -> FiniteMetricSpace:
        return FiniteMetricSpace(tuple(mapping[lab] for lab in self.labels), self.dist)


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    axiom: str  # "identity", "positivity", "symmetry", "triangle"
    points: tuple

    def __str__(self):
        return f"{self.axiom} violated at {self.points}"


@dataclass(frozen=True)
class MetricReport:
    space: FiniteMetricSpace | None
    violations: tuple[Violation, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.valid:
            return "valid"
        head = "; ".join(map(str, self.violations[:10]))
        more = f" (+{len(self.violations) - 10} more)" if len(self.violations) > 10 else ""
        return f"{len(self.violations)} metric axiom violation(s): {head}{more}"


def check_metric(candidate, labels: Sequence, tol: float = TOL) -> MetricReport:
    """Check the metric axioms on a square array.

    Malformed input (non-square, label mismatch, NaN, negative entries)
    raises :class:`MetricError`.  Axiom failures are collected, every one of
    them, into the returned report; triangle violations are reported as
    ``(x, y, z)`` with ``d(x, z) > d(x, y) + d(y, z)`` and ``x`` before ``z``.
    """
    d = np.asarray(candidate, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise MetricError(f"distance array must be square, got shape {d.shape}")
    n = d.shape[0]
    if len(labels) != n:
        raise MetricError(f"{len(labels)} labels for a {n}x{n} array")
    if np.isnan(d).any():
        i, j = np.argwhere(np.isnan(d))[0]
        raise MetricError(f"NaN distance at {(labels[i], labels[j])}")
    if (d < 0).any():
        i, j = np.argwhere(d < 0)[0]
        raise MetricError(f"negative distance at {(labels[i], labels[j])}")
    if not np.isfinite(d).all():
        raise MetricError("distances must be finite")
    if len(set(labels)) != n:
        raise MetricError("labels must be distinct")

    labels = list(labels)
    out: list[Violation] = []
    for i in np.flatnonzero(np.abs(np.diag(d)) > tol):
        out.append(Violation("identity", (labels[i],)))
    iu = np.triu_indices(n, 1)
    for i, j in zip(*iu):
        if d[i, j] <= tol or d[j, i] <= tol:
            out.append(Violation("positivity", (labels[i], labels[j])))
        if abs(d[i, j] - d[j, i]) > tol:
            out.append(Violation("symmetry", (labels[i], labels[j])))
    # slack[y, z] = d(x, y) + d(y, z) - d(x, z), one row x at a time
    for x in range(n if n >= 3 else 0):
        slack = d[x][:, None] + d - d[x][None, :]
        for y, z in np.argwhere(slack < -tol):
            if x < z and y != x and y != z:
                out.append(Violation("triangle", (labels[x], labels[y], labels[z])))
    if out:
        return MetricReport(None, tuple(out))
    return MetricReport(FiniteMetricSpace(tuple(labels), d))


# --------------------------------------------------------------------------
# subsets and separation


@dataclass(frozen=True)
class SubsetPair:
    """Parts ``X_i`` of a base space, optionally with a bounded-core provider ``s -> C_s``.

    Despite the name it holds any finite indexed family of parts.
    """

    base: FiniteMetricSpace
    parts: tuple[frozenset, ...]
    core: Callable[[float], Iterable] | None = None

    def __post_init__(self):
        parts = tuple(frozenset(p) for p in self.parts)
        for i, p in enumerate(parts):
            missing = [x for x in p if x not in self.base]
            if missing:
                raise ValueError(f"part {i} has points outside the base space: {missing[:5]}")
        object.__setattr__(self, "parts", parts)

    def core_at(self, s: float) -> frozenset:
        if self.core is None:
            return frozenset()
        c = frozenset(self.core(s))
        bad = [x for x in c if x not in self.base]
        if bad:
            raise ValueError(f"core C({s}) has points outside the base space: {bad[:5]}")
        return c

    def core_diameter(self, s: float) -> float:
        c = self.core_at(s)
        if not c:
            return 0.0
        return float(self.base.subspace(c).diameter)

    def off_core(self, i: int, s: float | None) -> frozenset:
        if s is None or self.core is None:
            return self.parts[i]
        return self.parts[i] - self.core_at(s)


def ball_core(space: FiniteMetricSpace, center) -> Callable[[float], frozenset]:
    """Core provider ``C(s) = B(center, s)``."""
    return lambda s: space.ball(center, s)


def _cross_min(space: FiniteMetricSpace, p: Iterable, q: Iterable):
    ip = [space.index[x] for x in p]
    iq = [space.index[x] for x in q]
    if not ip or not iq:
        return math.inf, None
    block = space.dist[np.ix_(ip, iq)]
    k = int(np.argmin(block))
    a, b = divmod(k, len(iq))
    return float(block[a, b]), (space.labels[ip[a]], space.labels[iq[b]])


def separation(pair: SubsetPair, i: int, j: int, s: float | None = None) -> float:
    """``d(X_i \\ C_s, X_j \\ C_s)``; ``math.inf`` when either side is empty after removing the core.

    With ``s=None`` no core is removed.
    """
    for k in (i, j):
        if not pair.parts[k] and pair.core is None:
            raise ValueError(f"part {k} is empty and no core is supplied")
    return _cross_min(pair.base, pair.off_core(i, s), pair.off_core(j, s))[0]


@dataclass(frozen=True)
class SeparationCheck:
    ok: bool
    s: float
    distance: float  # smallest cross distance found (inf if vacuous)
    witness: tuple | None  # closest offending pair when not ok
    parts: tuple[int, int] | None
    core_diameter: float


def check_s_separated(pair: SubsetPair, s: float, tol: float = TOL) -> SeparationCheck:
    """Are the parts, after removing ``C(s)``, pairwise at distance ``>= s``?"""
    if pair.core is None:
        raise ValueError("check_s_separated needs a bounded-core provider")
    best = (math.inf, None, None)
    k = len(pair.parts)
    off = [pair.off_core(i, s) for i in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            dmin, wit = _cross_min(pair.base, off[i], off[j])
            if dmin < best[0]:
                best = (dmin, wit, (i, j))
    ok = best[0] >= s - tol
    return SeparationCheck(
        ok=ok,
        s=s,
        distance=best[0],
        witness=None if ok else best[1],
        parts=None if ok else best[2],
        core_diameter=pair.core_diameter(s),
    )


# --------------------------------------------------------------------------
# moduli


@dataclass(frozen=True)
class ModulusTable:
    """``rho_minus(t) = inf{|f x - f y| : d(x,y) >= t}``, ``rho_plus(t) = sup{|f x - f y| : d(x,y) <= t}``.

    Tabulated at each realized positive distance; ``*_at`` evaluate at
    arbitrary thresholds (``inf`` of an empty set is ``math.inf``, ``sup`` of
    pairs closer than the smallest realized distance is 0).
    """

    thresholds: np.ndarray
    rho_minus: np.ndarray
    rho_plus: np.ndarray
    tol: float = field(default=TOL)

    def rho_minus_at(self, t: float) -> float:
        k = int(np.searchsorted(self.thresholds, t - self.tol, side="left"))
        return float(self.rho_minus[k]) if k < len(self.thresholds) else math.inf

    def rho_plus_at(self, t: float) -> float:
        k = int(np.searchsorted(self.thresholds, t + self.tol, side="right"))
        return float(self.rho_plus[k - 1]) if k > 0 else 0.0

    def rows(self):
        return list(zip(self.thresholds.tolist(), self.rho_minus.tolist(), self.rho_plus.tolist()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["threshold", "rho_minus", "rho_plus"])
        for t, lo, hi in self.rows():
            w.writerow([f"{t:.12g}", f"{lo:.12g}", f"{hi:.12g}"])
        return buf.getvalue()


def moduli_from_matrices(dist: np.ndarray, image_dist: np.ndarray, tol: float = TOL) -> ModulusTable:
    n = dist.shape[0]
    iu = np.triu_indices(n, 1)
    d = dist[iu]
    e = image_dist[iu]
    if d.size == 0:
        empty = np.zeros(0)
        return ModulusTable(empty, empty, empty, tol)
    thresholds, inverse = np.unique(d, return_inverse=True)
    m = len(thresholds)
    group_max = np.full(m, -np.inf)
    group_min = np.full(m, np.inf)
    np.maximum.at(group_max, inverse, e)
    np.minimum.at(group_min, inverse, e)
    rho_plus = np.maximum.accumulate(group_max)
    rho_minus = np.minimum.accumulate(group_min[::-1])[::-1]
    return ModulusTable(thresholds, rho_minus, rho_plus, tol)


def compression_moduli(coarse_map, tol: float = TOL) -> ModulusTable:
    """Exact moduli of a :class:`~coarsembed.embedding.CoarseMap` over all point pairs."""
    return moduli_from_matrices(coarse_map.space.dist, coarse_map.image_distances(), tol)
