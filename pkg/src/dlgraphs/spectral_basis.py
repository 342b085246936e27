"""Finitely supported eigenfunctions of the simple random walk on DL.

Functions on DL are plain dicts ``DLVertex -> float`` (absent keys are 0).
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .dl_graph import DLParams, DLVertex, iter_neighbors
from .lattice_spectrum import (
    SpectralPair, build_Qh, eig_sym, eigh, interior_points, is_interior, lambda_d3_all,
    psi_d3, rho_prime, simplex,
)
from .tree_core import ORIGIN, TreeVertex, ancestor, successor

Function = dict[DLVertex, float]


class BasisError(ValueError):
    """Invalid polyhedron, labels or eigenpair shape."""


# ---------------------------------------------------------------- generic helpers

def norm(f: Function) -> float:
    return math.sqrt(sum(v * v for v in f.values()))


def inner(f: Function, g: Function) -> float:
    if len(g) < len(f):
        f, g = g, f
    return sum(v * g.get(x, 0.0) for x, v in f.items())


def combine(*terms: tuple[float, Function]) -> Function:
    out: dict[DLVertex, float] = defaultdict(float)
    for coeff, f in terms:
        for x, v in f.items():
            out[x] += coeff * v
    return dict(out)


def apply_P(params: DLParams, f: Function) -> Function:
    """(Pf)(x) = (1/D) sum_{y ~ x} f(y), on the support and its neighbours."""
    out: dict[DLVertex, float] = defaultdict(float)
    share = 1.0 / params.degree
    for y, v in f.items():
        if v == 0:
            continue
        for _, _, x in iter_neighbors(params, y):
            out[x] += share * v
    return dict(out)


def is_horizontal(params: DLParams, f: Function, tol: float = 1e-10) -> bool:
    """All single-coordinate horocycle slice sums vanish (within ``tol``)."""
    for j in range(params.d):
        slices: dict[tuple, float] = defaultdict(float)
        for x, v in f.items():
            slices[x.coords[:j] + x.coords[j + 1:]] += v
        if any(abs(s) > tol for s in slices.values()):
            return False
    return True


def dense_approx(params: DLParams, n: int) -> Function:
    """Horizontal function close to the point mass at the origin.

    In every tree the anchor on horocycle -n is the vertex whose only nonzero
    label is a 1 at index -n-1, so it is not an ancestor of the origin. The
    factor is 1 at the origin and -q^-n on the q^n horocycle-0 descendants of
    the anchor.
    """
    if n < 1:
        raise BasisError("n must be >= 1")
    factors = []
    for q in params.qs:
        anchor = TreeVertex(-n, (1,))
        part = {ORIGIN: 1.0}
        for x in descendants(anchor, 0, q):
            part[x] = -float(q) ** (-n)
        factors.append(part)
    out = {}
    for combo in product(*(f.items() for f in factors)):
        out[DLVertex(tuple(x for x, _ in combo))] = math.prod(v for _, v in combo)
    return out


def dense_approx_error(qs: Sequence[int], n: int) -> float:
    """Closed form of ||f^(n) - delta_o||^2."""
    return math.prod(q ** (-n) + 1 for q in qs) - 1


def descendants(a: TreeVertex, level: int, q: int) -> list[TreeVertex]:
    """Descendants of ``a`` on horocycle ``level`` in label order."""
    layer = [a]
    for _ in range(level - a.h):
        layer = [successor(x, s) for x in layer for s in range(q)]
    return layer if level >= a.h else []


# ---------------------------------------------------------------- building blocks

def phi(q: int, l: int) -> np.ndarray:
    """The l-th member of the orthonormal zero-sum family on Z_q (1 <= l <= q-1)."""
    if not 1 <= l <= q - 1:
        raise BasisError(f"label selector {l} outside 1..{q - 1}")
    scale = math.sqrt((q - l) * (q + 1 - l))
    values = np.zeros(q)
    values[l - 1] = (q - l) / scale
    values[l:] = -1.0 / scale
    return values


@dataclass(frozen=True)
class Polyhedron:
    anchors: tuple[TreeVertex, ...]

    @property
    def hvec(self) -> tuple[int, ...]:
        return tuple(a.h for a in self.anchors)

    @property
    def height(self) -> int:
        return -sum(self.hvec)

    def contains(self, x: DLVertex) -> bool:
        return all(a.h <= c.h and ancestor(c, a.h) == a for a, c in zip(self.anchors, x.coords))

    def level(self, k: Sequence[int], qs: Sequence[int]) -> list[DLVertex]:
        """Vertices of the level with Busemann vector ``k``."""
        parts = [descendants(a, kj, q) for a, kj, q in zip(self.anchors, k, qs)]
        return [DLVertex(c) for c in product(*parts)]

    def vertices(self, qs: Sequence[int]) -> list[DLVertex]:
        out = []
        for k in simplex(len(qs), self.height).points:
            out.extend(self.level(tuple(kj + a for kj, a in zip(k, self._shift())), qs))
        return out

    def _shift(self) -> tuple[int, ...]:
        h = self.height
        return self.hvec[:-1] + (self.hvec[-1] + h,)

    def text(self) -> str:
        return "|".join(a.text() for a in self.anchors)


def make_polyhedron(params: DLParams, anchors: Sequence[TreeVertex]) -> Polyhedron:
    S = Polyhedron(tuple(anchors))
    if len(S.anchors) != params.d:
        raise BasisError("need one anchor per coordinate")
    if S.height < 2:
        raise BasisError(f"polyhedron height {S.height} is below 2")
    return S


def f_level(q: int, k: int, anchor: TreeVertex, l: int) -> dict[TreeVertex, float]:
    """Single-tree factor: phi_l(branch label) * q^((h(a) - k + 1)/2) on level k below ``anchor``."""
    if k <= anchor.h:
        return {}
    values = phi(q, l)
    scale = float(q) ** ((anchor.h - k + 1) / 2)
    out = {}
    for s in range(q):
        if values[s] == 0:
            continue
        for x in descendants(successor(anchor, s), k, q):
            out[x] = values[s] * scale
    return out


def f_product(params: DLParams, S: Polyhedron, K: Sequence[int], labels: Sequence[int]) -> Function:
    factors = [f_level(q, kj, a, l) for q, kj, a, l in zip(params.qs, K, S.anchors, labels)]
    if any(not f for f in factors):
        return {}
    return {DLVertex(tuple(x for x, _ in combo)): math.prod(v for _, v in combo)
            for combo in product(*(f.items() for f in factors))}


@dataclass
class BasisFunction:
    values: Function
    eigenvalue: float
    polyhedron: Polyhedron
    mode: int
    labels: tuple[int, ...]

    def provenance(self) -> dict:
        return {"anchors": self.polyhedron.text(), "mode": self.mode,
                "labels": list(self.labels), "eigenvalue": self.eigenvalue}


def _check_labels(params: DLParams, labels: Sequence[int]) -> tuple[int, ...]:
    labels = tuple(labels)
    if len(labels) != params.d or any(not 1 <= l < q for l, q in zip(labels, params.qs)):
        raise BasisError(f"labels {labels} invalid for branching numbers {params.qs}")
    return labels


def g_eigenfunction(params: DLParams, S: Polyhedron, pair: SpectralPair, labels: Sequence[int],
                    mode: int = -1) -> BasisFunction:
    """Combine the level functions of ``S`` with an eigenvector of Q_h(S)."""
    labels = _check_labels(params, labels)
    pts = interior_points(params.d, S.height)
    if len(pair.eigenvector) != len(pts):
        raise BasisError(f"eigenvector length {len(pair.eigenvector)} does not match "
                         f"|interior(B_{S.height})| = {len(pts)}")
    shift = S._shift()
    values: dict[DLVertex, float] = defaultdict(float)
    for coeff, k in zip(pair.eigenvector, pts):
        if coeff == 0:
            continue
        K = tuple(kj + s for kj, s in zip(k, shift))
        for x, v in f_product(params, S, K, labels).items():
            values[x] += float(coeff) * v
    return BasisFunction(dict(values), pair.eigenvalue, S, mode, labels)


@lru_cache(maxsize=256)
def _block_pairs(qs: tuple[int, ...], h: int, method: str) -> tuple[SpectralPair, ...]:
    M = build_Qh(len(qs), qs, h)
    return tuple(eig_sym(M, method)) if M.size else ()


def polyhedron_eigenfunctions(params: DLParams, S: Polyhedron, labels: Sequence[int],
                              method: str = "jacobi") -> list[BasisFunction]:
    pairs = _block_pairs(params.qs, S.height, method)
    return [g_eigenfunction(params, S, p, labels, m) for m, p in enumerate(pairs)]


def sub_polyhedra(params: DLParams, S: Polyhedron) -> list[Polyhedron]:
    """All polyhedra of height >= 2 inside ``S``, anchors in canonical order."""
    h = S.height
    choices = []
    for a, q in zip(S.anchors, params.qs):
        opts = []
        for depth in range(h - 1):
            opts.extend(descendants(a, a.h + depth, q))
        choices.append(opts)
    out = [Polyhedron(c) for c in product(*choices) if -sum(x.h for x in c) >= 2]
    out.sort(key=Polyhedron.text)
    return out


def label_choices(params: DLParams) -> list[tuple[int, ...]]:
    return list(product(*(range(1, q) for q in params.qs)))


def basis_for_polyhedron(params: DLParams, S: Polyhedron, cap: int = 200_000,
                         method: str = "jacobi") -> list[BasisFunction]:
    expected = horizontal_dimension(params, S)
    if expected > cap:
        raise BasisError(f"basis would have {expected} functions, above cap {cap}")
    out = []
    for sub in sub_polyhedra(params, S):
        for labels in label_choices(params):
            out.extend(polyhedron_eigenfunctions(params, sub, labels, method))
    return out


def horizontal_dimension(params: DLParams, S: Polyhedron) -> int:
    """Sum over levels of prod_j (q_j^(k_j - h(a_j)) - 1)."""
    total = 0
    for k in simplex(params.d, S.height).points:
        depths = list(k[:-1]) + [k[-1] + S.height]
        total += math.prod(q ** r - 1 for q, r in zip(params.qs, depths))
    return total


def basis_to_json(params: DLParams, basis: Iterable[BasisFunction]) -> str:
    return json.dumps({
        "params": list(params.qs),
        "functions": [dict(b.provenance(), support={x.text(): v for x, v in b.values.items()})
                      for b in basis],
    })


# ---------------------------------------------------------------- Plancherel data

@dataclass(frozen=True)
class PlancherelAtom:
    r: tuple[int, ...]
    weight: Fraction

    @property
    def h(self) -> int:
        return sum(self.r)

    @property
    def k(self) -> tuple[int, ...]:
        return self.r[:-1] + (self.r[-1] - self.h,)


def _compositions(total: int, parts: int) -> Iterable[tuple[int, ...]]:
    """Tuples of ``parts`` positive integers summing to ``total``."""
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def atom_weight(qs: Sequence[int], r: Sequence[int]) -> Fraction:
    return math.prod((Fraction(q - 1, q ** rj) for q, rj in zip(qs, r)), start=Fraction(1))


def plancherel_atoms(qs: Sequence[int], H: int) -> tuple[list[PlancherelAtom], Fraction]:
    """Atoms with height <= H and the exact mass of the remaining ones."""
    if H < 2:
        raise BasisError("H must be >= 2")
    atoms = [PlancherelAtom(r, atom_weight(qs, r))
             for h in range(len(qs), H + 1) for r in _compositions(h, len(qs))]
    tail = 1 - sum((a.weight for a in atoms), start=Fraction(0))
    return atoms, tail


def mass_of_height(qs: Sequence[int], h: int) -> Fraction:
    return sum((atom_weight(qs, r) for r in _compositions(h, len(qs))), start=Fraction(0))


@lru_cache(maxsize=512)
def _block_decomposition(qs: tuple[int, ...], h: int, method: str) -> tuple[np.ndarray, np.ndarray]:
    M = build_Qh(len(qs), qs, h)
    if M.size == 0:
        return np.zeros(0), np.zeros((0, 0))
    return eigh(M, method)


@lru_cache(maxsize=512)
def _block_eigenvalues(qs: tuple[int, ...], h: int, method: str) -> np.ndarray:
    if method == "closed":
        if len(qs) != 3 or len(set(qs)) != 1:
            raise BasisError("closed-form eigenvalues exist only for three equal branching numbers")
        return lambda_d3_all(h)
    return _block_decomposition(qs, h, method)[0]


def return_probabilities(qs: Sequence[int], ns: Sequence[int], H: int, method: str = "auto",
                         use_trace: bool | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Spectral p^(n)(o,o) for each n in ``ns``, with truncation bounds.

    The diagonal route sums weight(r) * (Q_h^n)[k(r), k(r)] over atoms. When
    all branching numbers agree the weights only depend on h, so the sum
    collapses to mass(h)/|interior| * trace(Q_h^n) per block ("trace route").
    """
    qs = tuple(qs)
    ns = np.asarray(ns, dtype=int)
    if np.any(ns < 0):
        raise BasisError("n must be >= 0")
    equal = len(set(qs)) == 1
    use_trace = equal if use_trace is None else use_trace
    if use_trace and not equal:
        raise BasisError("the trace route needs equal branching numbers")
    if method == "closed" and not use_trace:
        raise BasisError("closed-form eigenvalues are only available on the trace route")
    values = np.zeros(len(ns))
    if use_trace:
        d, q = len(qs), qs[0]
        mass = Fraction(0)
        for h in range(d, H + 1):
            w = atom_weight(qs, (1,) * (d - 1) + (h - d + 1,))
            mass += math.comb(h - 1, d - 1) * w
            lam = _block_eigenvalues(qs, h, method)
            values += float(w) * np.sum(np.power.outer(lam, ns), axis=0)
        tail = 1 - mass
    else:
        atoms, tail = plancherel_atoms(qs, H)
        by_height: dict[int, list[PlancherelAtom]] = defaultdict(list)
        for a in atoms:
            by_height[a.h].append(a)
        for h, group in by_height.items():
            lam, V = _block_decomposition(qs, h, method)
            index = {k: i for i, k in enumerate(interior_points(len(qs), h))}
            rows = np.array([index[a.k] for a in group])
            w = np.array([float(a.weight) for a in group])
            values += (w @ V[rows, :] ** 2) @ np.power.outer(lam, ns)
    growth = max(1.0, abs(rho_prime(qs)))
    bounds = np.array([float(tail) * growth ** int(n) for n in ns])
    return values, bounds


def return_probability(qs: Sequence[int], n: int, H: int, method: str = "auto",
                       use_trace: bool | None = None) -> tuple[float, float]:
    values, bounds = return_probabilities(qs, [n], H, method, use_trace)
    return float(values[0]), float(bounds[0])


def pullback_weight_d3(m: Sequence[int], h: int, q: int, multiples: int = 12) -> tuple[float, float]:
    """Spectral mass carried by psi_{lm, lh}, l = 1..multiples, at the origin (d=3, equal q).

    Returns the truncated sum and an upper bound for the omitted multiples.
    """
    m = tuple(m)
    if not is_interior(m, h):
        raise BasisError(f"{m} is not interior in B_{h}")
    qs = (q, q, q)
    total = 0.0
    for ell in range(1, multiples + 1):
        mm, hh = tuple(ell * v for v in m), ell * h
        for r in _compositions(hh, 3):
            k = r[:-1] + (r[-1] - hh,)
            total += float(atom_weight(qs, r)) * abs(psi_d3(mm, hh, k)) ** 2
    omitted = (q - 1) ** 3 * float(q) ** (-(multiples + 1) * h) / (1 - float(q) ** (-h))
    return total, omitted
