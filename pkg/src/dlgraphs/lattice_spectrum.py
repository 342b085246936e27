"""The projected operator Q on the lattice A_{d-1} and its Dirichlet blocks Q_h."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations, product
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize


class SpectrumError(ValueError):
    """Invalid lattice or eigenproblem input."""


class ConvergenceError(ArithmeticError):
    """The Jacobi iteration did not reach the requested tolerance."""


def degree(qs: Sequence[int]) -> int:
    return (len(qs) - 1) * sum(qs)


def _check_point(k: Sequence[int]) -> tuple[int, ...]:
    k = tuple(int(v) for v in k)
    if sum(k) != 0:
        raise SpectrumError(f"lattice point {k} does not sum to 0")
    return k


def q_apply(f: Callable[[tuple[int, ...]], float] | Mapping[tuple[int, ...], float],
            k: Sequence[int], qs: Sequence[int]) -> float:
    """(Qf)(k) = (1/D) sum_{i != j} sqrt(q_i q_j) f(k + e_i - e_j)."""
    k = _check_point(k)
    if len(k) != len(qs):
        raise SpectrumError("point and branching numbers disagree on d")
    value = f.get if isinstance(f, Mapping) else f
    total = 0.0
    d = len(qs)
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            shifted = list(k)
            shifted[i] += 1
            shifted[j] -= 1
            v = value(tuple(shifted))
            if v:
                total += math.sqrt(qs[i] * qs[j]) * v
    return total / degree(qs)


@dataclass(frozen=True)
class SimplexDomain:
    """B_h = {k : k_1..k_{d-1} >= 0, k_d >= -h} in lexicographic order."""

    d: int
    h: int
    points: tuple[tuple[int, ...], ...]
    interior_mask: tuple[bool, ...]

    @property
    def interior(self) -> list[tuple[int, ...]]:
        return [k for k, inner in zip(self.points, self.interior_mask) if inner]

    def is_boundary(self, k: Sequence[int]) -> bool:
        return not is_interior(tuple(k), self.h)


def is_interior(k: tuple[int, ...], h: int) -> bool:
    return all(v >= 1 for v in k[:-1]) and k[-1] >= 1 - h


def in_simplex(k: tuple[int, ...], h: int) -> bool:
    return all(v >= 0 for v in k[:-1]) and k[-1] >= -h


@lru_cache(maxsize=None)
def simplex(d: int, h: int) -> SimplexDomain:
    if d < 2 or h < 0:
        raise SpectrumError(f"need d >= 2 and h >= 0, got d={d}, h={h}")
    points = []
    for head in product(range(h + 1), repeat=d - 1):
        if sum(head) <= h:
            points.append(head + (-sum(head),))
    points.sort()
    return SimplexDomain(d, h, tuple(points), tuple(is_interior(k, h) for k in points))


def interior_points(d: int, h: int) -> list[tuple[int, ...]]:
    return simplex(d, h).interior


def build_Qh(d: int, qs: Sequence[int], h: int) -> np.ndarray:
    """Dirichlet restriction of Q to the interior of B_h (lexicographic order)."""
    if len(qs) != d:
        raise SpectrumError("len(qs) must equal d")
    if h < 2:
        raise SpectrumError("height must be >= 2")
    pts = interior_points(d, h)
    index = {k: n for n, k in enumerate(pts)}
    D = degree(qs)
    M = np.zeros((len(pts), len(pts)))
    for n, k in enumerate(pts):
        for i in range(d):
            for j in range(d):
                if i == j:
                    continue
                shifted = list(k)
                shifted[i] += 1
                shifted[j] -= 1
                m = index.get(tuple(shifted))
                if m is not None:
                    M[n, m] = math.sqrt(qs[i] * qs[j]) / D
    return M


@dataclass(frozen=True)
class SpectralPair:
    eigenvalue: float
    eigenvector: np.ndarray


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint pairings covering every index pair once (circle method)."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        left, right = [], []
        for a, b in zip(players[: m // 2], reversed(players[m // 2:])):
            if a >= 0 and b >= 0:
                left.append(min(a, b))
                right.append(max(a, b))
        rounds.append((np.array(left, dtype=int), np.array(right, dtype=int)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _off_norm(A: np.ndarray) -> float:
    off = A - np.diag(np.diag(A))
    return float(np.linalg.norm(off))


def jacobi_eigh(M: np.ndarray, tol: float = 1e-12, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi with a fixed round-robin order of disjoint rotations.

    Each round applies n/2 independent plane rotations at once. Returns
    ``(eigenvalues, eigenvectors)`` sorted ascending; eigenvectors are the
    columns, each normalised so that its first nonzero entry is positive.
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise SpectrumError("matrix must be square")
    n = A.shape[0]
    scale = float(np.linalg.norm(A))
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * max(scale, 1.0)):
        raise SpectrumError("matrix is not symmetric")
    A = (A + A.T) / 2
    V = np.eye(n)
    target = tol * scale
    rounds = _round_robin(n) if n > 1 else []
    for _ in range(max_sweeps):
        if _off_norm(A) <= target:
            break
        for P, Q in rounds:
            apq = A[P, Q]
            active = np.abs(apq) > 0.0
            if not active.any():
                continue
            P, Q, apq = P[active], Q[active], apq[active]
            theta = (A[Q, Q] - A[P, P]) / (2.0 * apq)
            big = np.abs(theta) > 1e150
            theta = np.where(big, 1.0, theta)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(big, 0.0, t)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            rp, rq = A[P, :], A[Q, :]
            A[P, :] = c[:, None] * rp - s[:, None] * rq
            A[Q, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = A[:, P], A[:, Q]
            A[:, P] = cp * c - cq * s
            A[:, Q] = cp * s + cq * c
            A[P, Q] = 0.0
            A[Q, P] = 0.0
            vp, vq = V[:, P], V[:, Q]
            V[:, P] = vp * c - vq * s
            V[:, Q] = vp * s + vq * c
    else:
        if _off_norm(A) > target:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    values = np.diag(A).copy()
    order = np.argsort(values, kind="stable")
    values, V = values[order], V[:, order]
    return values, _normalise_signs(V)


def _normalise_signs(V: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    for col in range(V.shape[1]):
        nz = np.flatnonzero(np.abs(V[:, col]) > eps)
        if nz.size and V[nz[0], col] < 0:
            V[:, col] = -V[:, col]
    return V


JACOBI_AUTO_LIMIT = 150


def eigh(M: np.ndarray, method: str = "jacobi") -> tuple[np.ndarray, np.ndarray]:
    """Symmetric eigendecomposition.

    ``method`` is ``"jacobi"`` (in-house), ``"lapack"`` (numpy) or ``"auto"``,
    which uses Jacobi up to ``JACOBI_AUTO_LIMIT`` rows and LAPACK above.
    """
    if method == "auto":
        method = "jacobi" if len(M) <= JACOBI_AUTO_LIMIT else "lapack"
    if method == "jacobi":
        return jacobi_eigh(M)
    if method == "lapack":
        A = np.asarray(M, dtype=float)
        if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * max(float(np.linalg.norm(A)), 1.0)):
            raise SpectrumError("matrix is not symmetric")
        values, V = np.linalg.eigh(A)
        return values, _normalise_signs(V)
    raise SpectrumError(f"unknown eigensolver {method!r}")


def eig_sym(M: np.ndarray, method: str = "jacobi") -> list[SpectralPair]:
    values, V = eigh(M, method)
    return [SpectralPair(float(values[i]), V[:, i].copy()) for i in range(len(values))]


def lambda_d3(m: Sequence[int], h: int) -> float:
    m = _check_point(m)
    if len(m) != 3 or not is_interior(m, h):
        raise SpectrumError(f"{m} is not an interior point of B_{h} for d=3")
    a = 2 * math.pi / (3 * h)
    return (math.cos(a * (m[0] - m[1])) + math.cos(a * (m[1] - m[2]))
            + math.cos(a * (m[2] - m[0]))) / 3


def _parity(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


_S3 = [(p, _parity(p)) for p in permutations(range(3))]


def psi_d3(m: Sequence[int], h: int, k: Sequence[int]) -> complex:
    """Complex eigenfunction of Q_h for d = 3 indexed by an interior point ``m``.

    Alternating sum of plane waves over the six coordinate permutations,
    scaled by 1/(sqrt(3) h) so that the family is orthonormal on B_h.
    """
    m = _check_point(m)
    k = _check_point(k)
    if len(m) != 3 or not is_interior(m, h):
        raise SpectrumError(f"{m} is not an interior point of B_{h} for d=3")
    total = 0j
    scale = 2 * math.pi / (3 * h)
    for perm, sign in _S3:
        pairing = sum(m[i] * k[perm[i]] for i in range(3))
        total += sign * cmath.exp(1j * sign * scale * pairing)
    return total / (math.sqrt(3) * h)


def psi_d3_matrix(h: int) -> np.ndarray:
    """Matrix ``[k, m]`` of psi values over interior points (vectorised)."""
    pts = np.array(interior_points(3, h), dtype=float).reshape(-1, 3)
    scale = 2 * math.pi / (3 * h)
    out = np.zeros((len(pts), len(pts)), dtype=complex)
    for perm, sign in _S3:
        pairing = pts[:, list(perm)] @ pts.T
        out += sign * np.exp(1j * sign * scale * pairing)
    return out / (math.sqrt(3) * h)


def lambda_d3_all(h: int) -> np.ndarray:
    pts = np.array(interior_points(3, h), dtype=float).reshape(-1, 3)
    a = 2 * math.pi / (3 * h)
    if not len(pts):
        return np.zeros(0)
    m1, m2, m3 = pts.T
    return (np.cos(a * (m1 - m2)) + np.cos(a * (m2 - m3)) + np.cos(a * (m3 - m1))) / 3


def rho(qs: Sequence[int]) -> float:
    d = len(qs)
    return sum(math.sqrt(qs[i] * qs[j]) for i in range(d) for j in range(d) if i != j) / degree(qs)


def symbol(t: np.ndarray, qs: Sequence[int]) -> np.ndarray:
    """Fourier symbol of Q at angles ``t`` (last axis has length d)."""
    amp = np.sqrt(np.asarray(qs, dtype=float))
    z = np.sum(amp * np.exp(1j * t), axis=-1)
    return (np.abs(z) ** 2 - sum(qs)) / degree(qs)


def _minimise_symbol(qs: Sequence[int], grid: int = 64) -> float:
    d = len(qs)
    axes = np.linspace(0.0, 2 * math.pi, grid, endpoint=False)
    best_val, best_t = math.inf, None
    for first in axes if d > 2 else [None]:
        if d == 2:
            t = np.stack([np.zeros_like(axes), axes], axis=-1)
        else:
            mesh = np.meshgrid(*([axes] * (d - 2)), indexing="ij")
            rest = np.stack([m.ravel() for m in mesh], axis=-1)
            t = np.concatenate([np.zeros((len(rest), 1)), np.full((len(rest), 1), first), rest], axis=1)
        vals = symbol(t, qs)
        n = int(np.argmin(vals))
        if vals[n] < best_val:
            best_val, best_t = float(vals[n]), t[n]
    res = minimize(lambda x: float(symbol(np.concatenate([[0.0], x]), qs)),
                   best_t[1:], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
    return min(best_val, float(res.fun))


def rho_prime(qs: Sequence[int]) -> float:
    """Bottom of spec(Q)."""
    d = len(qs)
    if d == 2:
        return -rho(qs)
    if all(sum(1 for p in qs if p == q) >= 2 for q in qs):
        return -1.0 / (d - 1)
    return _minimise_symbol(qs)


def spec_interval(qs: Sequence[int]) -> tuple[float, float]:
    return rho_prime(qs), rho(qs)


def block_eigenvalues(qs: Sequence[int], h: int, method: str = "jacobi") -> np.ndarray:
    d = len(qs)
    if method == "closed" and d == 3 and len(set(qs)) == 1:
        return np.sort(lambda_d3_all(h))
    M = build_Qh(d, qs, h)
    if M.size == 0:
        return np.zeros(0)
    return eigh(M, method)[0]


def spec_union(qs: Sequence[int], H: int, tol: float = 1e-9, method: str = "jacobi") -> list[float]:
    """Sorted union of spec(Q_h) over 2 <= h <= H, merged at ``tol``."""
    if H < 2:
        raise SpectrumError("H must be >= 2")
    values = sorted(float(v) for h in range(2, H + 1) for v in block_eigenvalues(qs, h, method))
    merged: list[float] = []
    for v in values:
        if not merged or v - merged[-1] > tol:
            merged.append(v)
    return merged
