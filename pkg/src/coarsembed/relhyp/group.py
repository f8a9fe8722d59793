"""Free products of two free abelian groups, in alternating-syllable normal form.

``G = A * B`` with ``A = Z^k1`` (the peripheral subgroup ``H``) and
``B = Z^k2``.  An element is a tuple of syllables ``(tag, exponents)`` with
alternating tags and no zero exponent vector; the empty tuple is the identity.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

A = "A"
B = "B"

Syllable = tuple[str, tuple[int, ...]]

_SYLLABLE_RE = re.compile(r"\s*([AB])\(\s*(-?\d+(?:\s*,\s*-?\d+)*)\s*\)\s*")


@dataclass(frozen=True, order=True)
class GroupElement:
    syllables: tuple[Syllable, ...] = ()

    def __post_init__(self):
        prev = None
        for tag, exps in self.syllables:
            if tag not in (A, B):
                raise ValueError(f"unknown syllable tag {tag!r}")
            if not any(exps):
                raise ValueError("zero syllable in normal form")
            if tag == prev:
                raise ValueError("adjacent syllables share a tag")
            prev = tag

    def __str__(self):
        if not self.syllables:
            return "e"
        return " ".join(f"{tag}({','.join(map(str, exps))})" for tag, exps in self.syllables)

    def __repr__(self):
        return f"GroupElement({str(self)!r})"

    def __mul__(self, other: GroupElement) -> GroupElement:
        return multiply(self, other)

    def __invert__(self) -> GroupElement:
        return inverse(self)

    @property
    def is_identity(self) -> bool:
        return not self.syllables

    @cached_property
    def abs_length(self) -> int:
        return abs_length(self)

    @cached_property
    def rel_length(self) -> int:
        return rel_length(self)

    @classmethod
    def parse(cls, text: str) -> GroupElement:
        """Parse ``"A(2,0) B(3) A(-1)"``; ``"e"`` or ``""`` is the identity.

        Input need not be reduced: adjacent equal tags are merged.
        """
        text = text.strip()
        if text in ("", "e"):
            return IDENTITY
        pos = 0
        out = IDENTITY
        while pos < len(text):
            m = _SYLLABLE_RE.match(text, pos)
            if m is None:
                raise ValueError(f"cannot parse group element {text!r} at offset {pos}")
            exps = tuple(int(v) for v in m.group(2).split(","))
            out = multiply(out, syllable(m.group(1), exps))
            pos = m.end()
        return out


IDENTITY = GroupElement(())


def _make(syllables: tuple) -> GroupElement:
    # skips normal-form validation; callers guarantee it
    g = object.__new__(GroupElement)
    object.__setattr__(g, "syllables", syllables)
    return g


def syllable(tag: str, exps) -> GroupElement:
    exps = tuple(int(v) for v in exps)
    if not any(exps):
        return IDENTITY
    return GroupElement(((tag, exps),))


def _add(u: tuple[int, ...], v: tuple[int, ...]) -> tuple[int, ...]:
    if len(u) != len(v):
        raise ValueError("exponent vectors of different rank")
    return tuple(x + y for x, y in zip(u, v))


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    if not h.syllables:
        return g
    if not g.syllables:
        return h
    left = list(g.syllables)
    right = list(h.syllables)
    while left and right and left[-1][0] == right[0][0]:
        tag = left[-1][0]
        merged = _add(left.pop()[1], right.pop(0)[1])
        if any(merged):
            left.append((tag, merged))
            break
    return _make(tuple(left + right))


def inverse(g: GroupElement) -> GroupElement:
    return _make(tuple((tag, tuple(-x for x in exps)) for tag, exps in reversed(g.syllables)))


def abs_length(g: GroupElement) -> int:
    """Word length over the standard generators of both factors."""
    return sum(sum(abs(x) for x in exps) for _, exps in g.syllables)


def rel_length(g: GroupElement) -> int:
    """Word length over ``S`` together with every nontrivial element of ``H = A``.

    Each A-syllable is a single relative letter; B-syllables are spelled out.
    """
    return sum(1 if tag == A else sum(abs(x) for x in exps) for tag, exps in g.syllables)


def dist_s(g: GroupElement, h: GroupElement) -> int:
    return abs_length(multiply(inverse(g), h))


def dist_rel(g: GroupElement, h: GroupElement) -> int:
    return rel_length(multiply(inverse(g), h))


def coset_rep(g: GroupElement) -> GroupElement:
    """Shortest element of ``gH``: drop a trailing A-syllable."""
    if g.syllables and g.syllables[-1][0] == A:
        return _make(g.syllables[:-1])
    return g


def h_part(g: GroupElement) -> GroupElement:
    """The ``x`` in ``g = coset_rep(g) * x`` (an element of ``H``)."""
    if g.syllables and g.syllables[-1][0] == A:
        return _make(g.syllables[-1:])
    return IDENTITY


def same_coset(g: GroupElement, h: GroupElement) -> bool:
    return coset_rep(g) == coset_rep(h)


def sort_key(g: GroupElement):
    return (abs_length(g), g.syllables)


@dataclass(frozen=True)
class FreeProductGroup:
    """``Z^rank_a * Z^rank_b`` with ``H`` the first factor.

    With ``rank_b >= 2`` the pair is not relatively hyperbolic (``B`` contains
    a flat); the arithmetic still works but the BCP/embedding routines then
    have no reason to succeed.
    """

    rank_a: int
    rank_b: int

    def __post_init__(self):
        if self.rank_a < 1 or self.rank_b < 1:
            raise ValueError("factor ranks must be positive")

    @property
    def identity(self) -> GroupElement:
        return IDENTITY

    def rank(self, tag: str) -> int:
        return self.rank_a if tag == A else self.rank_b

    @cached_property
    def generators(self) -> tuple[GroupElement, ...]:
        """``S``: standard generators of both factors and their inverses."""
        gens = []
        for tag in (A, B):
            k = self.rank(tag)
            for i in range(k):
                for sign in (1, -1):
                    vec = [0] * k
                    vec[i] = sign
                    gens.append(syllable(tag, vec))
        return tuple(gens)

    def element(self, text: str) -> GroupElement:
        g = GroupElement.parse(text)
        self.validate(g)
        return g

    def validate(self, g: GroupElement) -> None:
        for tag, exps in g.syllables:
            if len(exps) != self.rank(tag):
                raise ValueError(f"syllable {tag}{exps} has wrong rank for {self}")

    def in_h(self, g: GroupElement) -> bool:
        return len(g.syllables) == 0 or (len(g.syllables) == 1 and g.syllables[0][0] == A)

    def factor_ball(self, tag: str, radius: int, *, nonzero: bool = False) -> list[tuple[int, ...]]:
        """Exponent vectors of ``Z^k`` with l1 norm <= radius."""
        k = self.rank(tag)
        out = [v for v in _l1_ball(k, radius) if (any(v) or not nonzero)]
        out.sort(key=lambda v: (sum(map(abs, v)), v))
        return out

    def h_elements(self, cap: int) -> list[GroupElement]:
        """Elements of ``H`` with absolute length <= cap."""
        return [syllable(A, v) for v in self.factor_ball(A, cap)]

    def enumerate_ball(self, n: int, cap: int) -> list[GroupElement]:
        """``B(n)`` capped: ``rel_length <= n`` and ``abs_length <= cap``.

        Generated directly from normal forms, sorted by ``sort_key``.
        """
        if n < 0 or cap < 0:
            raise ValueError("n and cap must be nonnegative")
        out: list[GroupElement] = []
        balls = {A: self.factor_ball(A, cap, nonzero=True), B: self.factor_ball(B, cap, nonzero=True)}

        def grow(prefix: tuple[Syllable, ...], last: str | None, rel_left: int, abs_left: int):
            out.append(_make(prefix))
            for tag in (A, B):
                if tag == last:
                    continue
                for vec in balls[tag]:
                    a = sum(map(abs, vec))
                    if a > abs_left:
                        break
                    r = 1 if tag == A else a
                    if r > rel_left:
                        continue
                    grow(prefix + ((tag, vec),), tag, rel_left - r, abs_left - a)

        grow((), None, n, cap)
        out.sort(key=sort_key)
        return out

    def abs_ball(self, radius: int) -> list[GroupElement]:
        """All elements with ``abs_length <= radius``."""
        return self.enumerate_ball(radius, radius)


def _l1_ball(k: int, radius: int) -> Iterator[tuple[int, ...]]:
    if k == 0:
        yield ()
        return
    for x in range(-radius, radius + 1):
        for rest in _l1_ball(k - 1, radius - abs(x)):
            yield (x,) + rest
