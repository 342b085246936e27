"""Homogeneous trees T_q seen from a fixed end.

A vertex is encoded by its Busemann value ``h`` and the finitely supported
word of edge labels on the geodesic from the reference end down to it.
Index ``k`` of the word labels the edge between horocycles ``k`` and
``k + 1``; indices run over ``h - len(word) <= k < h`` and every label below
the stored range is zero. Words are trimmed so that their lowest stored
label is nonzero, which makes the encoding canonical and hashable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


class TreeError(ValueError):
    """Invalid tree operation (bad label, bad level, bad witness)."""


class InsufficientWitnessError(TreeError):
    """A boundary approximation is too shallow for the requested level."""


def _trim(word: Iterable[int]) -> tuple[int, ...]:
    word = tuple(word)
    start = 0
    while start < len(word) and word[start] == 0:
        start += 1
    return word[start:]


@dataclass(frozen=True, order=True)
class TreeVertex:
    """Vertex of T_q: Busemann value plus trimmed label word (lowest index first)."""

    h: int
    word: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "word", _trim(self.word))

    @property
    def low(self) -> int:
        """Lowest index carrying a stored label."""
        return self.h - len(self.word)

    def label(self, index: int) -> int:
        """Label on the edge from horocycle ``index`` to ``index + 1``."""
        if index >= self.h:
            raise TreeError(f"index {index} is not above level {self.h}")
        if index < self.low:
            return 0
        return self.word[index - self.low]

    def labels(self, start: int, stop: int) -> tuple[int, ...]:
        """Labels at indices ``start <= k < stop`` (``stop <= h``)."""
        return tuple(self.label(k) for k in range(start, stop))

    def text(self) -> str:
        return f"{self.h}:" + ",".join(str(a) for a in self.word)

    def __str__(self) -> str:
        return self.text()

    @classmethod
    def parse(cls, text: str) -> "TreeVertex":
        head, _, tail = text.partition(":")
        word = tuple(int(a) for a in tail.split(",")) if tail else ()
        return cls(int(head), word)

    @classmethod
    def from_labels(cls, h: int, labels: dict[int, int]) -> "TreeVertex":
        """Build from an ``index -> label`` map (indices must be below ``h``)."""
        support = [k for k, a in labels.items() if a]
        if not support:
            return cls(h)
        low = min(support)
        if max(support) >= h:
            raise TreeError("label index must lie below the vertex level")
        return cls(h, tuple(labels.get(k, 0) for k in range(low, h)))


ORIGIN = TreeVertex(0)


def check_label(q: int, label: int) -> None:
    if q < 2:
        raise TreeError(f"branching number must be >= 2, got {q}")
    if not 0 <= label < q:
        raise TreeError(f"label {label} outside 0..{q - 1}")


def predecessor(v: TreeVertex) -> TreeVertex:
    return TreeVertex(v.h - 1, v.word[:-1])


def successor(v: TreeVertex, label: int, q: int | None = None) -> TreeVertex:
    if q is not None:
        check_label(q, label)
    elif label < 0:
        raise TreeError(f"negative label {label}")
    if not v.word and label == 0:
        return TreeVertex(v.h + 1)
    return TreeVertex(v.h + 1, v.word + (label,))


def successors(v: TreeVertex, q: int) -> list[TreeVertex]:
    return [successor(v, a) for a in range(q)]


def ancestor(v: TreeVertex, level: int) -> TreeVertex:
    """The ancestor of ``v`` on horocycle ``level`` (``level <= v.h``)."""
    if level > v.h:
        raise TreeError(f"level {level} is below vertex level {v.h}")
    cut = len(v.word) - (v.h - level)
    return TreeVertex(level, v.word[:max(cut, 0)])


def is_ancestor(a: TreeVertex, v: TreeVertex) -> bool:
    """True iff ``a`` lies on the geodesic from ``v`` to the reference end."""
    return a.h <= v.h and ancestor(v, a.h) == a


def confluent(u: TreeVertex, v: TreeVertex) -> TreeVertex:
    """Maximal common ancestor of ``u`` and ``v``."""
    top = min(u.h, v.h)
    bottom = min(u.low, v.low, top)
    level = top
    for k in range(top - 1, bottom - 1, -1):
        if u.label(k) != v.label(k):
            level = k
    return ancestor(u, level)


def distance(u: TreeVertex, v: TreeVertex) -> int:
    c = confluent(u, v)
    return (u.h - c.h) + (v.h - c.h)


def up(u: TreeVertex, v: TreeVertex) -> int:
    """Distance from ``u`` to the confluent of ``u`` and ``v``."""
    return u.h - confluent(u, v).h


def geodesic(u: TreeVertex, v: TreeVertex) -> list[TreeVertex]:
    """Vertices on the geodesic from ``u`` to ``v``, endpoints included."""
    c = confluent(u, v)
    rising = [ancestor(u, k) for k in range(u.h, c.h, -1)]
    falling = [ancestor(v, k) for k in range(c.h, v.h + 1)]
    return rising + falling


def ball(center: TreeVertex, radius: int, q: int) -> list[TreeVertex]:
    """All vertices within ``radius`` of ``center`` (sorted)."""
    found = set()
    for climb in range(radius + 1):
        top = ancestor(center, center.h - climb)
        frontier = [top]
        for depth in range(radius - climb + 1):
            found.update(frontier)
            if depth < radius - climb:
                frontier = [s for x in frontier for s in successors(x, q)]
    return sorted(found)


@dataclass(frozen=True)
class BoundaryApproxPoint:
    """Finite stand-in for a boundary point.

    ``kind == "omega"`` is the reference end itself; ``kind == "lower"``
    approximates a lower boundary point by a deep ``witness`` vertex whose
    ancestor chain agrees with the ray down to ``witness.h``.
    """

    kind: str
    witness: TreeVertex = ORIGIN

    def __post_init__(self) -> None:
        if self.kind not in ("omega", "lower"):
            raise TreeError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "lower" and self.witness.h <= 0:
            raise TreeError("a lower witness must lie below horocycle 0")


OMEGA = BoundaryApproxPoint("omega")


def ray_point(xi: BoundaryApproxPoint, k: int) -> TreeVertex:
    """Point on horocycle ``k`` of the geodesic from the origin towards ``xi``.

    On a lower ray the point is taken on the descending branch, so at
    ``k = 0`` this is the far one from the origin when the ray meets H_0 twice.
    """
    if xi.kind == "omega":
        if k > 0:
            raise TreeError("the ray towards the reference end stays at levels <= 0")
        return TreeVertex(k)
    if k > xi.witness.h:
        raise InsufficientWitnessError(
            f"witness depth {xi.witness.h} is too shallow for level {k}")
    return ancestor(xi.witness, k)


def coarsen(v: TreeVertex, s: int, q: int) -> TreeVertex:
    """Identify a vertex of T_q on a horocycle divisible by ``s`` with a vertex of T_{q^s}.

    Block ``n`` of the image collects the labels at indices ``s*n .. s*n+s-1``,
    read big-endian: the label at the highest index is the leading digit.
    """
    if s < 1:
        raise TreeError(f"block size must be >= 1, got {s}")
    if v.h % s:
        raise TreeError(f"level {v.h} is not divisible by {s}")
    if s == 1 or not v.word:
        return TreeVertex(v.h // s, v.word)
    top = v.h // s
    first = v.low // s
    digits = []
    for block in range(first, top):
        value = 0
        for index in range(block * s + s - 1, block * s - 1, -1):
            value = value * q + v.label(index)
        digits.append(value)
    return TreeVertex(top, tuple(digits))
