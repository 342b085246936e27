"""Cells of the DL complex, octahedra and Euler characteristics.

A cell is fixed by choosing, per coordinate, a single tree vertex ``x_i`` or
a tree edge ``{x_i, y_i}`` with ``y_i`` a successor of ``x_i``. Let ``I`` be
the doubled coordinates and ``c = -sum h(x_i)``; the cell's vertices pick
``y_j`` on exactly ``c`` coordinates of ``I``. It is an ``s``-cell with
``s = |I| - 1`` when ``1 <= c <= s``; ``c`` is called its kind.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Sequence

from .dl_graph import DEFAULT_CAP, DLParams, DLVertex, neighbors
from .tree_core import TreeVertex, confluent, geodesic, predecessor, successor, successors


class CellError(ValueError):
    """Invalid region or octahedron specification."""


@dataclass(frozen=True)
class Cell:
    """``gamma(E_1, ..., E_d)``; each entry of ``sides`` has one or two tree vertices (parent first)."""

    sides: tuple[tuple[TreeVertex, ...], ...]

    @property
    def doubled(self) -> tuple[int, ...]:
        return tuple(i for i, e in enumerate(self.sides) if len(e) == 2)

    @property
    def dimension(self) -> int:
        return sum(len(e) for e in self.sides) - len(self.sides) - 1

    @property
    def kind(self) -> int:
        return -sum(e[0].h for e in self.sides)

    @property
    def vertices(self) -> tuple[DLVertex, ...]:
        out = []
        for chosen in combinations(self.doubled, self.kind):
            out.append(DLVertex(tuple(e[1] if i in chosen else e[0] for i, e in enumerate(self.sides))))
        return tuple(sorted(out))

    @property
    def key(self) -> tuple[DLVertex, ...]:
        return self.vertices

    def faces(self) -> list["Cell | DLVertex"]:
        """Replace one doubled side by one of its endpoints; single-vertex results become vertices."""
        out: list[Cell | DLVertex] = []
        for j in self.doubled:
            for end in self.sides[j]:
                sides = self.sides[:j] + ((end,),) + self.sides[j + 1:]
                face = Cell(sides)
                out.extend([face] if _is_cell(face) else face.vertices)
        return out


def _is_cell(cell: Cell) -> bool:
    return 1 <= cell.kind <= cell.dimension


def _options(vertices: Iterable[TreeVertex]) -> list[tuple[TreeVertex, ...]]:
    pool = set(vertices)
    opts: list[tuple[TreeVertex, ...]] = [(v,) for v in sorted(pool)]
    for v in sorted(pool):
        parent = predecessor(v)
        if parent in pool:
            opts.append((parent, v))
    return opts


@dataclass
class CellSet:
    """Vertices and cells of a finite subcomplex, cells grouped by dimension."""

    vertices: list[DLVertex]
    cells: dict[int, list[Cell]]

    def counts(self) -> dict[int, int]:
        out = {0: len(self.vertices)}
        for s, cs in sorted(self.cells.items()):
            out[s] = len(cs)
        return out

    def edges(self) -> set[frozenset[DLVertex]]:
        return {frozenset(c.vertices) for c in self.cells.get(1, [])}


def cells_in_region(region: Sequence[Iterable[TreeVertex]], cap: int = DEFAULT_CAP) -> CellSet:
    """All cells whose sides lie inside the per-coordinate vertex sets of ``region``."""
    options = [_options(r) for r in region]
    if len(options) < 2:
        raise CellError("a region needs at least two coordinates")
    size = math.prod(len(o) for o in options)
    if size > cap:
        raise CellError(f"region has {size} side choices, above the cap {cap}")
    vertices = []
    cells: dict[int, list[Cell]] = defaultdict(list)
    for sides in product(*options):
        top = sum(e[0].h for e in sides)
        if all(len(e) == 1 for e in sides):
            if top == 0:
                vertices.append(DLVertex(tuple(e[0] for e in sides)))
            continue
        cell = Cell(tuple(sides))
        if _is_cell(cell):
            cells[cell.dimension].append(cell)
    for cs in cells.values():
        cs.sort(key=lambda c: c.key)
    return CellSet(sorted(vertices), dict(cells))


def euler_characteristic(cells: CellSet) -> int:
    return sum((-1) ** s * n for s, n in cells.counts().items())


# ---------------------------------------------------------------- octahedra

@dataclass(frozen=True)
class OctahedronSpec:
    b: tuple[TreeVertex, ...]
    t: tuple[TreeVertex, ...]
    t_prime: tuple[TreeVertex, ...]
    R: int

    def __post_init__(self) -> None:
        d = len(self.b)
        if d < 2 or len(self.t) != d or len(self.t_prime) != d:
            raise CellError("b, t and t' need the same length >= 2")
        if self.R < 1:
            raise CellError(f"R must be >= 1, got {self.R}")
        if sum(v.h for v in self.b) != -self.R:
            raise CellError("Busemann values of b must sum to -R")
        for bi, ti, si in zip(self.b, self.t, self.t_prime):
            if ti.h != bi.h + self.R or si.h != bi.h + self.R:
                raise CellError("t and t' must lie R levels below b")
            if confluent(ti, si) != bi:
                raise CellError(f"{bi} is not the confluent of {ti} and {si}")

    @property
    def d(self) -> int:
        return len(self.b)

    def region(self) -> list[list[TreeVertex]]:
        return [geodesic(ti, si) for ti, si in zip(self.t, self.t_prime)]

    def to_dict(self) -> dict:
        return {"R": self.R, "b": [v.text() for v in self.b], "t": [v.text() for v in self.t],
                "t_prime": [v.text() for v in self.t_prime]}


def descend(v: TreeVertex, labels: Sequence[int]) -> TreeVertex:
    for a in labels:
        v = successor(v, a)
    return v


def make_octahedron(qs: Sequence[int], R: int, words: Sequence[tuple[Sequence[int], Sequence[int]]] | None = None,
                    levels: Sequence[int] | None = None) -> OctahedronSpec:
    """Octahedron with ``b_i`` on horocycle ``levels[i]`` (default ``-R, 0, ..., 0``).

    ``words[i]`` gives the label words of ``b_i -> t_i`` and ``b_i -> t'_i``;
    the default is the basic choice ``(0, ..., 0)`` and ``(1, 0, ..., 0)``.
    """
    d = len(qs)
    levels = list(levels) if levels is not None else [-R] + [0] * (d - 1)
    if words is None:
        words = [((0,) * R, (1,) + (0,) * (R - 1))] * d
    b, t, tp = [], [], []
    for q, level, (w, w2) in zip(qs, levels, words):
        if len(w) != R or len(w2) != R:
            raise CellError(f"label words must have length R={R}")
        if any(not 0 <= a < q for a in (*w, *w2)):
            raise CellError(f"labels must lie in 0..{q - 1}")
        base = TreeVertex(level)
        b.append(base)
        t.append(descend(base, w))
        tp.append(descend(base, w2))
    return OctahedronSpec(tuple(b), tuple(t), tuple(tp), R)


def octahedron_complex(spec: OctahedronSpec, cap: int = DEFAULT_CAP) -> CellSet:
    return cells_in_region(spec.region(), cap)


def is_basic_octahedron(spec: OctahedronSpec) -> bool:
    """Both descending words agree except for the first label, which goes up by one."""
    for bi, ti, si in zip(spec.b, spec.t, spec.t_prime):
        w = ti.labels(bi.h, ti.h)
        w2 = si.labels(bi.h, si.h)
        if w2[0] != w[0] + 1 or w2[1:] != w[1:]:
            return False
    return True


def octahedron_report(spec: OctahedronSpec, cap: int = DEFAULT_CAP) -> dict:
    cells = octahedron_complex(spec, cap)
    top = cells.cells.get(spec.d - 1, [])
    return {
        "spec": spec.to_dict(),
        "counts": {str(k): v for k, v in cells.counts().items()},
        "euler_characteristic": euler_characteristic(cells),
        "sphere_value": 1 + (-1) ** (spec.d - 1),
        "extremal_vertices": len(extremal_vertices(spec)),
        "top_cells": len(top),
        "basic": is_basic_octahedron(spec),
    }


def extremal_vertices(spec: OctahedronSpec) -> list[DLVertex]:
    """The 2d vertices with one coordinate at t_i or t'_i and all others at b."""
    out = []
    for i in range(spec.d):
        for end in (spec.t[i], spec.t_prime[i]):
            out.append(DLVertex(tuple(end if j == i else spec.b[j] for j in range(spec.d))))
    return out


# ---------------------------------------------------------------- local counts

def tree_neighbourhood(v: TreeVertex, q: int) -> list[TreeVertex]:
    return [predecessor(v), v, *successors(v, q)]


def cells_at_vertex(params: DLParams, x: DLVertex, dimension: int) -> dict[int, int]:
    """Number of ``dimension``-cells containing ``x``, by kind."""
    region = [tree_neighbourhood(c, q) for c, q in zip(x.coords, params.qs)]
    counts: dict[int, int] = defaultdict(int)
    for cell in cells_in_region(region).cells.get(dimension, []):
        if x in cell.vertices:
            counts[cell.kind] += 1
    return dict(sorted(counts.items()))


def local_region(params: DLParams, x: DLVertex) -> tuple[list[list[TreeVertex]], list[DLVertex]]:
    """Tree neighbourhoods around ``x`` and the DL vertices they span."""
    region = [tree_neighbourhood(c, q) for c, q in zip(x.coords, params.qs)]
    verts = [DLVertex(combo) for combo in product(*region) if sum(v.h for v in combo) == 0]
    return region, verts


def skeleton_matches_graph(params: DLParams, region: Sequence[Sequence[TreeVertex]]) -> bool:
    """1-cells of the region coincide with DL adjacency restricted to its vertices."""
    cells = cells_in_region(region)
    verts = set(cells.vertices)
    graph_edges = {frozenset((v, w)) for v in verts for w in neighbors(params, v) if w in verts}
    return graph_edges == cells.edges()


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2)

