"""Paths in the relative Cayley graph and their H-components."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

from .group import A, IDENTITY, GroupElement, coset_rep, inverse, multiply, syllable


def _is_letter(label: GroupElement) -> bool:
    """An edge label of ``(G, S ∪ H)``: a generator of either factor, or any nontrivial element of H."""
    if label.is_identity or len(label.syllables) != 1:
        return False
    tag, exps = label.syllables[0]
    return tag == A or sum(abs(x) for x in exps) == 1


@dataclass(frozen=True)
class RelPath:
    vertices: tuple[GroupElement, ...]
    edges: tuple[GroupElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        if not self.vertices:
            raise ValueError("a path has at least one vertex")
        if len(self.edges) != len(self.vertices) - 1:
            raise ValueError("need one edge label per step")
        for i, lab in enumerate(self.edges):
            if not _is_letter(lab):
                raise ValueError(f"edge {i} label {lab} is not in S ∪ H")
            if multiply(self.vertices[i], lab) != self.vertices[i + 1]:
                raise ValueError(f"edge {i} label {lab} does not join {self.vertices[i]} to {self.vertices[i + 1]}")

    @classmethod
    def from_vertices(cls, vertices: Sequence[GroupElement]) -> RelPath:
        vs = tuple(vertices)
        return cls(vs, tuple(multiply(inverse(u), v) for u, v in zip(vs, vs[1:])))

    @property
    def start(self) -> GroupElement:
        return self.vertices[0]

    @property
    def end(self) -> GroupElement:
        return self.vertices[-1]

    def __len__(self):
        return len(self.edges)

    def translate(self, g: GroupElement) -> RelPath:
        return RelPath(tuple(multiply(g, v) for v in self.vertices), self.edges)


@dataclass(frozen=True)
class HComponent:
    coset: GroupElement  # shortest representative of the left coset
    first: int  # index of the entry vertex in the path
    last: int  # index of the exit vertex

    def entry(self, path: RelPath) -> GroupElement:
        return path.vertices[self.first]

    def exit(self, path: RelPath) -> GroupElement:
        return path.vertices[self.last]

    @property
    def n_edges(self) -> int:
        return self.last - self.first


def h_components(path: RelPath, with_edges_only: bool = False) -> tuple[list[HComponent], bool]:
    """Maximal runs of consecutive vertices in a single left coset of H.

    Returns the runs and a backtracking flag, true when two distinct runs lie
    in the same coset.  ``with_edges_only`` drops single-vertex runs (and
    judges backtracking on the remaining ones).
    """
    runs: list[HComponent] = []
    cosets = [coset_rep(v) for v in path.vertices]
    start = 0
    for i in range(1, len(cosets) + 1):
        if i == len(cosets) or cosets[i] != cosets[start]:
            runs.append(HComponent(cosets[start], start, i - 1))
            start = i
    if with_edges_only:
        runs = [c for c in runs if c.n_edges > 0]
    seen = [c.coset for c in runs]
    return runs, len(set(seen)) != len(seen)


def _lattice_walks(tag: str, exps: tuple[int, ...]) -> Iterator[tuple[GroupElement, ...]]:
    """All shortest generator sequences spelling ``exps`` in ``Z^k``."""
    letters = [i for i, x in enumerate(exps) for _ in range(abs(x))]
    units = {}
    for i, x in enumerate(exps):
        unit = [0] * len(exps)
        unit[i] = 1 if x > 0 else -1
        units[i] = syllable(tag, unit)
    for order in sorted(set(itertools.permutations(letters))):
        yield tuple(units[i] for i in order)


def canonical_geodesic(g: GroupElement, start: GroupElement = IDENTITY) -> RelPath:
    """The geodesic from ``start`` to ``start * g`` that reads off the normal form of
    ``g``: one H-letter per A-syllable, unit steps in coordinate order per B-syllable."""
    return next(relative_geodesics(g, start))


def relative_geodesics(g: GroupElement, start: GroupElement = IDENTITY) -> Iterator[RelPath]:
    """Every geodesic from ``start`` to ``start * g`` built from the normal form.

    A-syllables are single H-letters; B-syllables range over all shortest
    lattice walks.
    """
    choices = []
    for tag, exps in g.syllables:
        if tag == A:
            choices.append([(syllable(A, exps),)])
        else:
            choices.append(list(_lattice_walks(tag, exps)))
    for combo in itertools.product(*choices):
        vertices = [start]
        edges = []
        for step in combo:
            for lab in step:
                edges.append(lab)
                vertices.append(multiply(vertices[-1], lab))
        yield RelPath(tuple(vertices), tuple(edges))


def penetrations(g: GroupElement) -> dict[GroupElement, tuple[GroupElement, GroupElement]]:
    """Cosets entered by geodesics from ``e`` to ``g`` along an H-edge: ``coset -> (entry, exit)``.

    These are the same for every relative geodesic to ``g`` (they sit at the
    A-syllable boundaries of the normal form).
    """
    out = {}
    prefix = IDENTITY
    for tag, exps in g.syllables:
        nxt = multiply(prefix, syllable(tag, exps))
        if tag == A:
            out[coset_rep(prefix)] = (prefix, nxt)
        prefix = nxt
    return out
