"""Horocyclic products DL(q_1, ..., q_d) of homogeneous trees."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterator, Sequence

from .tree_core import ORIGIN, TreeVertex, predecessor, successor

DEFAULT_CAP = 5_000_000


class DLError(ValueError):
    """Invalid DL parameters, vertices or moves."""


class BallTooLargeError(DLError):
    """A requested ball exceeds the configured vertex cap."""


@dataclass(frozen=True)
class DLParams:
    qs: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "qs", tuple(int(q) for q in self.qs))
        if len(self.qs) < 2:
            raise DLError("a horocyclic product needs at least two trees")
        if any(q < 2 for q in self.qs):
            raise DLError(f"branching numbers must be >= 2, got {self.qs}")

    @property
    def d(self) -> int:
        return len(self.qs)

    @property
    def degree(self) -> int:
        return (self.d - 1) * sum(self.qs)

    def origin(self) -> "DLVertex":
        return DLVertex((ORIGIN,) * self.d)

    def move_types(self) -> list["MoveType"]:
        return [MoveType(down=j, up=i) for i in range(self.d) for j in range(self.d) if i != j]


@dataclass(frozen=True, order=True)
class DLVertex:
    coords: tuple[TreeVertex, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", tuple(self.coords))
        if sum(c.h for c in self.coords) != 0:
            raise DLError("Busemann values of a DL vertex must sum to 0")

    @property
    def hor(self) -> tuple[int, ...]:
        return tuple(c.h for c in self.coords)

    def text(self) -> str:
        return "|".join(c.text() for c in self.coords)

    def __str__(self) -> str:
        return self.text()

    @classmethod
    def parse(cls, text: str) -> "DLVertex":
        return cls(tuple(TreeVertex.parse(part) for part in text.split("|")))


@dataclass(frozen=True)
class MoveType:
    """Coordinate ``down`` steps to a successor, coordinate ``up`` to its predecessor."""

    down: int
    up: int

    def __post_init__(self) -> None:
        if self.down == self.up:
            raise DLError("a move needs two distinct coordinates")


def _check_move(params: DLParams, move: MoveType) -> None:
    if not (0 <= move.down < params.d and 0 <= move.up < params.d):
        raise DLError(f"move {move} has coordinates outside 0..{params.d - 1}")


def neighbors_typed(params: DLParams, x: DLVertex, move: MoveType) -> list[DLVertex]:
    """The q_down neighbours reached by ``move``, ordered by label."""
    _check_move(params, move)
    coords = list(x.coords)
    coords[move.up] = predecessor(coords[move.up])
    out = []
    base = x.coords[move.down]
    for label in range(params.qs[move.down]):
        coords[move.down] = successor(base, label)
        out.append(DLVertex(tuple(coords)))
    return out


def iter_neighbors(params: DLParams, x: DLVertex) -> Iterator[tuple[MoveType, int, DLVertex]]:
    """Yield ``(move, label, neighbour)`` over all moves."""
    for move in params.move_types():
        for label, y in enumerate(neighbors_typed(params, x, move)):
            yield move, label, y


def neighbors(params: DLParams, x: DLVertex) -> list[DLVertex]:
    return [y for _, _, y in iter_neighbors(params, x)]


def move_between(params: DLParams, x: DLVertex, y: DLVertex) -> MoveType | None:
    """The move type taking ``x`` to ``y``, or None if they are not adjacent."""
    diff = [b.h - a.h for a, b in zip(x.coords, y.coords)]
    if sorted(diff) != [-1] + [0] * (params.d - 2) + [1]:
        return None
    down, up = diff.index(1), diff.index(-1)
    if predecessor(y.coords[down]) != x.coords[down] or predecessor(x.coords[up]) != y.coords[up]:
        return None
    if any(a != b for k, (a, b) in enumerate(zip(x.coords, y.coords)) if k not in (down, up)):
        return None
    return MoveType(down=down, up=up)


def are_adjacent(params: DLParams, x: DLVertex, y: DLVertex) -> bool:
    return move_between(params, x, y) is not None


@dataclass
class Ball:
    """Finite BFS ball with canonical vertex order and sorted adjacency lists."""

    params: DLParams
    center: DLVertex
    radius: int
    vertices: list[DLVertex]
    distances: list[int]
    adjacency: list[list[int]]
    index: dict[DLVertex, int] = field(repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        if not self.index:
            self.index = {v: i for i, v in enumerate(self.vertices)}

    def __len__(self) -> int:
        return len(self.vertices)

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, row in enumerate(self.adjacency) for j in row if i < j]

    def sphere_sizes(self) -> list[int]:
        sizes = [0] * (self.radius + 1)
        for dist in self.distances:
            sizes[dist] += 1
        return sizes

    def to_json(self) -> str:
        return json.dumps({
            "params": list(self.params.qs),
            "center": self.center.text(),
            "radius": self.radius,
            "vertices": [v.text() for v in self.vertices],
            "edges": [list(e) for e in self.edges()],
            "distances": self.distances,
        })

    @classmethod
    def from_json(cls, text: str) -> "Ball":
        data = json.loads(text)
        vertices = [DLVertex.parse(s) for s in data["vertices"]]
        adjacency: list[list[int]] = [[] for _ in vertices]
        for i, j in data["edges"]:
            adjacency[i].append(j)
            adjacency[j].append(i)
        for row in adjacency:
            row.sort()
        return cls(DLParams(tuple(data["params"])), DLVertex.parse(data["center"]),
                   data["radius"], vertices, list(data["distances"]), adjacency)


def estimate_ball_size(params: DLParams, radius: int) -> int:
    """Crude upper bound 1 + D + D^2 + ... + D^r used by the size guard."""
    total, layer = 1, 1
    for _ in range(radius):
        layer *= params.degree
        total += layer
    return total


def bfs_distances(params: DLParams, center: DLVertex, radius: int,
                  cap: int = DEFAULT_CAP) -> dict[DLVertex, int]:
    """Exact BFS distances from ``center`` up to ``radius``."""
    if radius < 0:
        raise DLError("radius must be >= 0")
    dist = {center: 0}
    queue = deque([center])
    while queue:
        x = queue.popleft()
        if dist[x] == radius:
            continue
        for y in neighbors(params, x):
            if y not in dist:
                dist[y] = dist[x] + 1
                if len(dist) > cap:
                    raise BallTooLargeError(
                        f"ball of radius {radius} exceeds cap {cap} "
                        f"(crude bound {estimate_ball_size(params, radius)})")
                queue.append(y)
    return dist


def ball(params: DLParams, center: DLVertex | None = None, radius: int = 1,
         cap: int = DEFAULT_CAP) -> Ball:
    center = params.origin() if center is None else center
    dist = bfs_distances(params, center, radius, cap)
    ordered = sorted(dist, key=DLVertex.text)
    index = {v: i for i, v in enumerate(ordered)}
    adjacency = []
    for v in ordered:
        row = sorted(index[y] for y in neighbors(params, v) if y in index)
        adjacency.append(row)
    return Ball(params, center, radius, ordered, [dist[v] for v in ordered], adjacency, index)


def growth(params: DLParams, radius: int, cap: int = DEFAULT_CAP) -> list[int]:
    """Sphere sizes |S_0|, ..., |S_radius| around the origin."""
    dist = bfs_distances(params, params.origin(), radius, cap)
    sizes = [0] * (radius + 1)
    for r in dist.values():
        sizes[r] += 1
    return sizes


@dataclass
class Link:
    """Induced subgraph on the neighbours of a vertex.

    ``plus[i]`` holds the neighbours whose i-th coordinate moved down
    (Busemann value +1), ``minus[i]`` those whose i-th coordinate moved up.
    """

    vertices: list[DLVertex]
    edges: list[tuple[int, int]]
    plus: list[list[int]]
    minus: list[list[int]]

    def is_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in set(self.edges)


def link(params: DLParams, x: DLVertex) -> Link:
    verts = sorted(set(neighbors(params, x)), key=DLVertex.text)
    plus: list[list[int]] = [[] for _ in range(params.d)]
    minus: list[list[int]] = [[] for _ in range(params.d)]
    for idx, y in enumerate(verts):
        for i, (a, b) in enumerate(zip(x.coords, y.coords)):
            if b.h == a.h + 1:
                plus[i].append(idx)
            elif b.h == a.h - 1:
                minus[i].append(idx)
    edges = [(a, b) for a in range(len(verts)) for b in range(a + 1, len(verts))
             if are_adjacent(params, verts[a], verts[b])]
    return Link(verts, edges, plus, minus)


def admissible_permutations(params: DLParams) -> list[tuple[int, ...]]:
    """Permutations sigma of the coordinates with q_sigma(j) = q_j."""
    return [s for s in permutations(range(params.d))
            if all(params.qs[s[j]] == params.qs[j] for j in range(params.d))]


def permute_coordinates(params: DLParams, sigma: Sequence[int], x: DLVertex) -> DLVertex:
    """Apply sigma: coordinate ``sigma[j]`` of the image is coordinate ``j`` of ``x``."""
    sigma = tuple(sigma)
    if sorted(sigma) != list(range(params.d)):
        raise DLError(f"{sigma} is not a permutation of 0..{params.d - 1}")
    if any(params.qs[sigma[j]] != params.qs[j] for j in range(params.d)):
        raise DLError(f"{sigma} does not preserve the branching numbers {params.qs}")
    coords: list[TreeVertex] = [ORIGIN] * params.d
    for j, s in enumerate(sigma):
        coords[s] = x.coords[j]
    return DLVertex(tuple(coords))
