"""Affine groups over Laurent-polynomial rings that realise DL_d(q) as a Cayley graph.

Coefficient rings are finite with elements encoded as integers ``0 .. q-1``;
this integer doubles as the tree label in the vertex correspondence.
Polynomials are tuples of ring elements, lowest degree first, without
trailing zeros. A Laurent element is a reduced fraction
``N(t) / prod_i (t + l_i)^{m_i}``.

Coordinates are numbered ``0 .. d-1``; coordinate ``i < d-1`` belongs to the
place ``t = -l_i`` and coordinate ``d-1`` to the place at infinity.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

from .dl_graph import DEFAULT_CAP, DLParams, DLVertex, ball as dl_ball
from .tree_core import TreeVertex

Poly = tuple[int, ...]


class AlgebraError(ValueError):
    """Invalid ring, element or group operation."""


class DecompositionError(AlgebraError):
    """The partial-fraction split did not reproduce its input."""


# ---------------------------------------------------------------- finite rings

def _poly_mod_p(a: list[int], modulus: list[int], p: int) -> list[int]:
    """Remainder of ``a`` by a monic ``modulus`` over F_p (lists, low degree first)."""
    a = a[:]
    s = len(modulus) - 1
    for deg in range(len(a) - 1, s - 1, -1):
        c = a[deg] % p
        if c:
            for k in range(s + 1):
                a[deg - s + k] = (a[deg - s + k] - c * modulus[k]) % p
    return [x % p for x in a[:s]] + [0] * max(0, s - len(a))


def _has_root_factor(modulus: list[int], p: int) -> bool:
    """True if ``modulus`` has a monic factor of degree 1 .. deg/2 over F_p."""
    s = len(modulus) - 1
    for deg in range(1, s // 2 + 1):
        for tail in product(range(p), repeat=deg):
            divisor = list(tail) + [1]
            if not any(_poly_mod_p(modulus, divisor, p)):
                return True
    return False


def lowest_irreducible(p: int, s: int) -> tuple[int, ...]:
    """Lexicographically smallest monic irreducible of degree ``s`` over F_p.

    Candidates are ordered by the integer ``sum c_k p^k`` of their lower
    coefficients; the result lists coefficients lowest degree first.
    """
    for code in range(p ** s):
        tail = [(code // p ** k) % p for k in range(s)]
        modulus = tail + [1]
        if s == 1 or (tail[0] and not _has_root_factor(modulus, p)):
            return tuple(modulus)
    raise AlgebraError(f"no irreducible polynomial of degree {s} over F_{p}")


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % k for k in range(2, math.isqrt(n) + 1))


@dataclass(frozen=True)
class _Factor:
    """One direct factor: Z_n (``modulus`` empty) or F_{p^s} modulo ``modulus``."""

    p: int
    s: int
    modulus: tuple[int, ...] = ()

    @property
    def size(self) -> int:
        return self.p ** self.s

    def tables(self) -> tuple[list[list[int]], list[list[int]]]:
        n = self.size
        if not self.modulus:
            return ([[(a + b) % n for b in range(n)] for a in range(n)],
                    [[(a * b) % n for b in range(n)] for a in range(n)])
        p, s = self.p, self.s
        digits = [[(a // p ** k) % p for k in range(s)] for a in range(n)]

        def encode(c: list[int]) -> int:
            return sum(x * p ** k for k, x in enumerate(c))

        add = [[encode([(x + y) % p for x, y in zip(digits[a], digits[b])]) for b in range(n)]
               for a in range(n)]
        mul = []
        for a in range(n):
            row = []
            for b in range(n):
                prod_ = [0] * (2 * s - 1)
                for i, x in enumerate(digits[a]):
                    for j, y in enumerate(digits[b]):
                        prod_[i + j] += x * y
                row.append(encode(_poly_mod_p(prod_, list(self.modulus), p)))
            mul.append(row)
        return add, mul


class CoefficientRing:
    """Finite commutative ring with distinguished elements ``l_1 .. l_{d-1}``.

    Elements of a product ring are encoded mixed-radix, first factor fastest.
    """

    def __init__(self, factors: Sequence[_Factor], ells: Sequence[int], kind: str):
        self.factors = tuple(factors)
        self.kind = kind
        sizes = [f.size for f in self.factors]
        self.q = math.prod(sizes)
        q = self.q
        parts = [f.tables() for f in self.factors]

        def split(a: int) -> list[int]:
            out = []
            for n in sizes:
                out.append(a % n)
                a //= n
            return out

        def join(cs: list[int]) -> int:
            a, scale = 0, 1
            for c, n in zip(cs, sizes):
                a += c * scale
                scale *= n
            return a

        comps = [split(a) for a in range(q)]
        self.add_table = [[join([parts[f][0][x][y] for f, (x, y) in enumerate(zip(comps[a], comps[b]))])
                           for b in range(q)] for a in range(q)]
        self.mul_table = [[join([parts[f][1][x][y] for f, (x, y) in enumerate(zip(comps[a], comps[b]))])
                           for b in range(q)] for a in range(q)]
        self.one = join([1] * len(sizes))
        self.neg_table = [self.add_table[a].index(0) for a in range(q)]
        self.inv_table = [row.index(self.one) if self.one in row else None for row in self.mul_table]
        self.ells = tuple(int(x) for x in ells)
        for x in self.ells:
            if not 0 <= x < q:
                raise AlgebraError(f"element {x} outside 0..{q - 1}")
        if len(set(self.ells)) != len(self.ells):
            raise AlgebraError(f"distinguished elements must be distinct, got {self.ells}")
        for i, a in enumerate(self.ells):
            for b in self.ells[i + 1:]:
                if self.inv(self.sub(a, b)) is None:
                    raise AlgebraError(f"difference {a} - {b} is not invertible in {self.describe()}")
        self._lam_pow: dict[tuple[int, int], Poly] = {}

    # scalar arithmetic
    def add(self, a: int, b: int) -> int:
        return self.add_table[a][b]

    def mul(self, a: int, b: int) -> int:
        return self.mul_table[a][b]

    def neg(self, a: int) -> int:
        return self.neg_table[a]

    def sub(self, a: int, b: int) -> int:
        return self.add_table[a][self.neg_table[b]]

    def inv(self, a: int) -> int | None:
        return self.inv_table[a]

    def from_int(self, n: int) -> int:
        """Image of the integer ``n`` under Z -> ring."""
        out, step = 0, (self.one if n >= 0 else self.neg(self.one))
        for _ in range(abs(n)):
            out = self.add(out, step)
        return out

    @property
    def d(self) -> int:
        return len(self.ells) + 1

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "q": self.q,
            "factors": [{"p": f.p, "s": f.s, "modulus": list(f.modulus)} for f in self.factors],
            "ells": list(self.ells),
        }

    def __repr__(self) -> str:
        return f"CoefficientRing({self.kind}, q={self.q}, ells={self.ells})"

    # polynomials
    def ptrim(self, a: Sequence[int]) -> Poly:
        n = len(a)
        while n and a[n - 1] == 0:
            n -= 1
        return tuple(a[:n])

    def padd(self, a: Poly, b: Poly) -> Poly:
        if len(a) < len(b):
            a, b = b, a
        add = self.add_table
        return self.ptrim([add[x][b[k]] if k < len(b) else x for k, x in enumerate(a)])

    def pneg(self, a: Poly) -> Poly:
        return tuple(self.neg_table[x] for x in a)

    def pscale(self, c: int, a: Poly) -> Poly:
        row = self.mul_table[c]
        return self.ptrim([row[x] for x in a])

    def pmul(self, a: Poly, b: Poly) -> Poly:
        if not a or not b:
            return ()
        add, mul = self.add_table, self.mul_table
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                row = mul[x]
                for j, y in enumerate(b):
                    out[i + j] = add[out[i + j]][row[y]]
        return self.ptrim(out)

    def peval(self, a: Poly, x: int) -> int:
        acc = 0
        for c in reversed(a):
            acc = self.add_table[self.mul_table[acc][x]][c]
        return acc

    def lam(self, i: int) -> Poly:
        """The linear polynomial t + l_i."""
        return self.ptrim((self.ells[i], self.one))

    def lam_pow(self, i: int, n: int) -> Poly:
        key = (i, n)
        if key not in self._lam_pow:
            self._lam_pow[key] = (self.one,) if n == 0 else self.pmul(self.lam_pow(i, n - 1), self.lam(i))
        return self._lam_pow[key]

    def divide_linear(self, a: Poly, i: int) -> tuple[Poly, int]:
        """Synthetic division of ``a`` by ``t + l_i``: (quotient, remainder)."""
        root = self.neg(self.ells[i])
        out = [0] * max(len(a) - 1, 0)
        acc = 0
        for k in range(len(a) - 1, -1, -1):
            acc = self.add(self.mul(acc, root), a[k])
            if k:
                out[k - 1] = acc
        return self.ptrim(out), acc

    def taylor_shift(self, a: Poly, c: int) -> Poly:
        """``a(s + c)`` as a polynomial in ``s``."""
        out: Poly = ()
        step = self.ptrim((c, self.one))
        for coeff in reversed(a):
            out = self.padd(self.pmul(out, step), (coeff,) if coeff else ())
        return out

    def series_inverse(self, a: Poly, depth: int) -> list[int]:
        """First ``depth`` coefficients of ``1 / a`` as a power series."""
        c0 = self.inv(a[0]) if a else None
        if c0 is None:
            raise AlgebraError("constant term is not invertible")
        out = []
        for n in range(depth):
            acc = self.one if n == 0 else 0
            for k in range(1, min(n, len(a) - 1) + 1):
                acc = self.sub(acc, self.mul(a[k], out[n - k]))
            out.append(self.mul(acc, c0))
        return out

    def series_mul(self, a: Sequence[int], b: Sequence[int], depth: int) -> list[int]:
        out = [0] * depth
        for i, x in enumerate(a[:depth]):
            if x:
                for j, y in enumerate(b[:depth - i]):
                    out[i + j] = self.add(out[i + j], self.mul(x, y))
        return out


def _validate_count(ells: Sequence[int], d: int | None) -> None:
    if d is not None and len(ells) != d - 1:
        raise AlgebraError(f"need {d - 1} distinguished elements for d={d}, got {len(ells)}")


def zq_ring(q: int, ells: Sequence[int] | None = None, d: int = 3) -> CoefficientRing:
    """Z_q; by default l = (0) for d = 2 and (0, 1) for d = 3."""
    if q < 2:
        raise AlgebraError(f"q must be >= 2, got {q}")
    if ells is None:
        if d > 3:
            raise AlgebraError("Z_q needs explicit distinguished elements when d > 3")
        ells = (0, 1)[:d - 1]
    ells = [e % q for e in ells]
    _validate_count(ells, d)
    return CoefficientRing([_Factor(q, 1)], ells, "Z")


def field_product_ring(prime_powers: Sequence[tuple[int, int]], ells: Sequence[int] | None = None,
                       d: int = 3) -> CoefficientRing:
    """F_{p_1^{s_1}} x ... x F_{p_r^{s_r}}.

    The default l_i has every component equal to the field element encoded by ``i``.
    """
    factors = []
    for p, s in prime_powers:
        if not _is_prime(p) or s < 1:
            raise AlgebraError(f"({p}, {s}) is not a prime power")
        factors.append(_Factor(p, s, lowest_irreducible(p, s)))
    if ells is None:
        if any(f.size < d - 1 for f in factors):
            raise AlgebraError(f"every field factor needs at least {d - 1} elements")
        sizes = [f.size for f in factors]
        ells = []
        for i in range(d - 1):
            a, scale = 0, 1
            for n in sizes:
                a += i * scale
                scale *= n
            ells.append(a)
    _validate_count(ells, d)
    return CoefficientRing(factors, ells, "field_product")


def ring_make(kind: str, q: int | None = None, prime_powers: Sequence[tuple[int, int]] | None = None,
              ells: Sequence[int] | None = None, d: int = 3) -> CoefficientRing:
    if kind in ("Z", "Zq", "z"):
        if q is None:
            raise AlgebraError("Z_q needs q")
        return zq_ring(q, ells, d)
    if kind in ("F", "field_product", "gf"):
        if prime_powers is None:
            raise AlgebraError("a field product needs its prime powers")
        return field_product_ring(prime_powers, ells, d)
    raise AlgebraError(f"unknown ring kind {kind!r}")


def parse_prime_powers(text: str) -> list[tuple[int, int]]:
    """``"2^2,3"`` -> [(2, 2), (3, 1)]."""
    out = []
    for part in text.split(","):
        base, _, exp = part.strip().partition("^")
        out.append((int(base), int(exp) if exp else 1))
    return out


# ---------------------------------------------------------------- Laurent elements

@dataclass(frozen=True)
class LaurentElement:
    """Reduced fraction ``num / prod_i (t + l_i)^{den[i]}``."""

    num: Poly
    den: tuple[int, ...]

    @property
    def is_zero(self) -> bool:
        return not self.num

    def to_dict(self) -> dict:
        return {"num": list(self.num), "den": list(self.den)}


def normalize(ring: CoefficientRing, num: Sequence[int], den: Sequence[int]) -> LaurentElement:
    num = ring.ptrim(num)
    den = list(den)
    if len(den) != ring.d - 1:
        raise AlgebraError(f"denominator needs {ring.d - 1} exponents")
    if any(m < 0 for m in den):
        raise AlgebraError("denominator exponents must be >= 0")
    if not num:
        return LaurentElement((), (0,) * len(den))
    for i, m in enumerate(den):
        while m:
            quotient, rem = ring.divide_linear(num, i)
            if rem:
                break
            num, m = quotient, m - 1
        den[i] = m
    return LaurentElement(num, tuple(den))


def zero(ring: CoefficientRing) -> LaurentElement:
    return LaurentElement((), (0,) * (ring.d - 1))


def constant(ring: CoefficientRing, c: int) -> LaurentElement:
    return normalize(ring, (c,), (0,) * (ring.d - 1))


def polynomial(ring: CoefficientRing, coeffs: Sequence[int]) -> LaurentElement:
    return normalize(ring, coeffs, (0,) * (ring.d - 1))


def unit(ring: CoefficientRing, k: Sequence[int]) -> LaurentElement:
    """The monomial ``prod_i (t + l_i)^{k_i}``."""
    num: Poly = (ring.one,)
    for i, e in enumerate(k):
        if e > 0:
            num = ring.pmul(num, ring.lam_pow(i, e))
    return LaurentElement(num, tuple(max(-e, 0) for e in k))


def t_power(ring: CoefficientRing, n: int) -> LaurentElement:
    """``t^n`` for ``n >= 0``; for ``n < 0`` this needs some l_i = 0."""
    if n >= 0:
        return polynomial(ring, (0,) * n + (ring.one,))
    if 0 not in ring.ells:
        raise AlgebraError("t is not invertible unless some l_i = 0")
    k = [0] * (ring.d - 1)
    k[ring.ells.index(0)] = n
    return unit(ring, k)


def _raise(ring: CoefficientRing, a: LaurentElement, den: Sequence[int]) -> Poly:
    num = a.num
    for i, (have, want) in enumerate(zip(a.den, den)):
        if want > have:
            num = ring.pmul(num, ring.lam_pow(i, want - have))
    return num


def add(ring: CoefficientRing, a: LaurentElement, b: LaurentElement) -> LaurentElement:
    if not a.num:
        return b
    if not b.num:
        return a
    den = tuple(max(x, y) for x, y in zip(a.den, b.den))
    return normalize(ring, ring.padd(_raise(ring, a, den), _raise(ring, b, den)), den)


def neg(ring: CoefficientRing, a: LaurentElement) -> LaurentElement:
    return LaurentElement(ring.pneg(a.num), a.den)


def sub(ring: CoefficientRing, a: LaurentElement, b: LaurentElement) -> LaurentElement:
    return add(ring, a, neg(ring, b))


def mul(ring: CoefficientRing, a: LaurentElement, b: LaurentElement) -> LaurentElement:
    if not a.num or not b.num:
        return zero(ring)
    return normalize(ring, ring.pmul(a.num, b.num), [x + y for x, y in zip(a.den, b.den)])


def scale(ring: CoefficientRing, c: int, a: LaurentElement) -> LaurentElement:
    return normalize(ring, ring.pscale(c, a.num), a.den)


def mul_unit(ring: CoefficientRing, a: LaurentElement, k: Sequence[int]) -> LaurentElement:
    """``a * prod_i (t + l_i)^{k_i}``."""
    if not a.num:
        return a
    num, den = a.num, list(a.den)
    for i, e in enumerate(k):
        if e > 0:
            cancel = min(e, den[i])
            den[i] -= cancel
            if e > cancel:
                num = ring.pmul(num, ring.lam_pow(i, e - cancel))
        elif e < 0:
            den[i] -= e
    return normalize(ring, num, den)


def inverse_unit(k: Sequence[int]) -> tuple[int, ...]:
    return tuple(-e for e in k)


def laurent_equal(ring: CoefficientRing, a: LaurentElement, b: LaurentElement) -> bool:
    """Equality by cross-multiplication (independent of the reduced form)."""
    den = tuple(max(x, y) for x, y in zip(a.den, b.den))
    return _raise(ring, a, den) == _raise(ring, b, den)


def valuation(ring: CoefficientRing, a: LaurentElement, place: int | str) -> float:
    """Order at ``t = -l_place``, or at infinity for ``place == "inf"``; +inf for zero."""
    if not a.num:
        return math.inf
    if place == "inf":
        return sum(a.den) - (len(a.num) - 1)
    i = int(place)
    if not 0 <= i < ring.d - 1:
        raise AlgebraError(f"place {place} outside 0..{ring.d - 2}")
    order, num = 0, a.num
    while True:
        quotient, rem = ring.divide_linear(num, i)
        if rem:
            break
        num, order = quotient, order + 1
    return order - a.den[i]


def expand_at(ring: CoefficientRing, a: LaurentElement, i: int, stop: int) -> dict[int, int]:
    """Coefficients of ``(t + l_i)^n`` for ``n < stop`` in the local expansion at ``-l_i``."""
    if not a.num:
        return {}
    m = a.den[i]
    depth = stop + m
    if depth <= 0:
        return {}
    li = ring.ells[i]
    num = ring.taylor_shift(a.num, ring.neg(li))
    other: Poly = (ring.one,)
    for j, mj in enumerate(a.den):
        if j != i and mj:
            shifted = ring.ptrim((ring.sub(ring.ells[j], li), ring.one))
            for _ in range(mj):
                other = ring.pmul(other, shifted)
    series = ring.series_mul(list(num), ring.series_inverse(other, depth), depth)
    return {r - m: c for r, c in enumerate(series) if c}


def expand_at_infinity(ring: CoefficientRing, a: LaurentElement, low: int) -> dict[int, int]:
    """Coefficients of ``t^e`` for ``e >= low`` in the expansion in ``t^{-1}``."""
    if not a.num:
        return {}
    top = len(a.num) - 1 - sum(a.den)
    depth = top - low + 1
    if depth <= 0:
        return {}
    reversed_num = list(reversed(a.num))
    other: Poly = (ring.one,)
    for j, mj in enumerate(a.den):
        if mj:
            factor = ring.ptrim((ring.one, ring.ells[j]))
            for _ in range(mj):
                other = ring.pmul(other, factor)
    series = ring.series_mul(reversed_num, ring.series_inverse(other, depth), depth)
    return {top - r: c for r, c in enumerate(series) if c}


# ---------------------------------------------------------------- affine group

@dataclass(frozen=True)
class AffineElement:
    """The matrix ``[[prod (t + l_i)^{k_i}, P], [0, 1]]``."""

    k: tuple[int, ...]
    P: LaurentElement

    def to_dict(self) -> dict:
        return {"k": list(self.k), "num": list(self.P.num), "den": list(self.P.den)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def element_from_dict(ring: CoefficientRing, data: dict) -> AffineElement:
    k = tuple(int(x) for x in data["k"])
    if len(k) != ring.d - 1:
        raise AlgebraError(f"expected {ring.d - 1} exponents")
    return AffineElement(k, normalize(ring, data["num"], data["den"]))


def element_from_json(ring: CoefficientRing, text: str) -> AffineElement:
    return element_from_dict(ring, json.loads(text))


def identity(ring: CoefficientRing) -> AffineElement:
    return AffineElement((0,) * (ring.d - 1), zero(ring))


def affine_mul(ring: CoefficientRing, g: AffineElement, h: AffineElement) -> AffineElement:
    k = tuple(x + y for x, y in zip(g.k, h.k))
    return AffineElement(k, add(ring, g.P, mul_unit(ring, h.P, g.k)))


def affine_inv(ring: CoefficientRing, g: AffineElement) -> AffineElement:
    k = inverse_unit(g.k)
    return AffineElement(k, neg(ring, mul_unit(ring, g.P, k)))


def affine_word(ring: CoefficientRing, elements: Sequence[AffineElement]) -> AffineElement:
    out = identity(ring)
    for g in elements:
        out = affine_mul(ring, out, g)
    return out


def affine_equal(ring: CoefficientRing, g: AffineElement, h: AffineElement) -> bool:
    return g.k == h.k and laurent_equal(ring, g.P, h.P)


# ---------------------------------------------------------------- decomposition

def principal_part(ring: CoefficientRing, a: LaurentElement, i: int) -> LaurentElement:
    """Sum of the negative powers of ``t + l_i`` in the expansion of ``a`` at ``-l_i``."""
    coeffs = expand_at(ring, a, i, 0)
    m = a.den[i]
    if not coeffs:
        return zero(ring)
    num: Poly = ()
    for n, c in coeffs.items():
        num = ring.padd(num, ring.pscale(c, ring.lam_pow(i, n + m)))
    den = [0] * (ring.d - 1)
    den[i] = m
    return normalize(ring, num, den)


def decompose(ring: CoefficientRing, P: LaurentElement, k: Sequence[int]) -> list[LaurentElement]:
    """Split ``P = P_1 + ... + P_d`` relative to the multiplier exponents ``k``.

    With ``u = prod (t + l_i)^{k_i}``, each ``P_i / u`` (``i < d``) is a polynomial
    in ``(t + l_i)^{-1}`` without constant term and ``P_d / u`` is a polynomial in t.
    This is the partial-fraction split of ``P / u``.
    """
    k = tuple(k)
    if len(k) != ring.d - 1:
        raise AlgebraError(f"expected {ring.d - 1} exponents")
    reduced = mul_unit(ring, P, inverse_unit(k))
    parts = [principal_part(ring, reduced, i) for i in range(ring.d - 1)]
    rest = reduced
    for part in parts:
        rest = sub(ring, rest, part)
    if any(rest.den):
        raise DecompositionError(f"remainder {rest} still has poles")
    components = [mul_unit(ring, part, k) for part in parts + [rest]]
    total = zero(ring)
    for c in components:
        total = add(ring, total, c)
    if not laurent_equal(ring, total, P):
        raise DecompositionError("components do not sum to the input")
    return components


def check_supports(ring: CoefficientRing, components: Sequence[LaurentElement],
                   k: Sequence[int]) -> bool:
    """Support conditions of a decomposition (see ``decompose``)."""
    inv_k = inverse_unit(k)
    for i, part in enumerate(components[:-1]):
        local = mul_unit(ring, part, inv_k)
        if any(m for j, m in enumerate(local.den) if j != i):
            return False
        if local.num and len(local.num) - 1 >= local.den[i]:
            return False
    return not any(mul_unit(ring, components[-1], inv_k).den)


# ---------------------------------------------------------------- vertices and generators

def dl_params(ring: CoefficientRing) -> DLParams:
    return DLParams((ring.q,) * ring.d)


def group_to_vertex(ring: CoefficientRing, g: AffineElement) -> DLVertex:
    """The vertex ``g o`` of DL_d(q).

    Coordinate ``i < d-1`` sits on horocycle ``k_i`` with label ``n`` equal to the
    coefficient of ``(t + l_i)^n``; the last coordinate sits on horocycle
    ``-sum k`` with label ``n`` equal to the coefficient of ``t^{-n-1}``.
    """
    coords = []
    for i, ki in enumerate(g.k):
        coords.append(TreeVertex.from_labels(ki, expand_at(ring, g.P, i, ki)))
    top = -sum(g.k)
    labels = {-e - 1: c for e, c in expand_at_infinity(ring, g.P, -top).items()}
    coords.append(TreeVertex.from_labels(top, labels))
    return DLVertex(tuple(coords))


@dataclass(frozen=True)
class GeneratorLabel:
    """``g_{i,j,lam}``: coordinate ``i`` moves down and coordinate ``j`` moves up."""

    i: int
    j: int
    lam: int

    def __str__(self) -> str:
        return f"g[{self.i},{self.j},{self.lam}]"


def _check_label(ring: CoefficientRing, label: GeneratorLabel) -> None:
    d, i, j = ring.d, label.i, label.j
    if i == j or not (0 <= i < d and 0 <= j < d):
        raise AlgebraError(f"bad generator indices ({i}, {j}) for d={d}")
    if not 0 <= label.lam < ring.q:
        raise AlgebraError(f"label {label.lam} outside the ring")


def generator(ring: CoefficientRing, label: GeneratorLabel) -> AffineElement:
    """``[[Lambda_i / Lambda_j, lam / Lambda_j], [0, 1]]`` with ``Lambda_{d-1} = 1``.

    In this form ``g_{i,j,lam}^{-1} = g_{j,i,-lam}`` and the triangle relators
    read uniformly in all coordinates.
    """
    _check_label(ring, label)
    last = ring.d - 1
    k = [0] * last
    den = [0] * last
    if label.i != last:
        k[label.i] += 1
    if label.j != last:
        k[label.j] -= 1
        den[label.j] = 1
    return AffineElement(tuple(k), normalize(ring, (label.lam,), den))


def tree_label(ring: CoefficientRing, label: GeneratorLabel) -> int:
    """Label of the edge that ``g_{i,j,lam}`` adds in coordinate ``i`` below ``o_i``.

    This is ``lam`` unless both coordinates are finite places, where it is
    ``lam / (l_j - l_i)``, the value of ``lam / (t + l_j)`` at ``t = -l_i``.
    """
    _check_label(ring, label)
    last = ring.d - 1
    if last in (label.i, label.j):
        return label.lam
    diff = ring.sub(ring.ells[label.j], ring.ells[label.i])
    return ring.mul(label.lam, ring.inv(diff))


def generator_labels(ring: CoefficientRing) -> list[GeneratorLabel]:
    d = ring.d
    return [GeneratorLabel(i, j, lam) for i in range(d) for j in range(d) if i != j
            for lam in range(ring.q)]


def generators(ring: CoefficientRing) -> dict[GeneratorLabel, AffineElement]:
    return {s: generator(ring, s) for s in generator_labels(ring)}


# ---------------------------------------------------------------- Cayley ball check

@dataclass
class CayleyReport:
    ring: dict
    d: int
    radius: int
    group_size: int
    ball_size: int
    edges_group: int
    edges_ball: int
    injective: bool
    onto: bool
    distances_match: bool
    edges_match: bool
    counterexamples: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.injective and self.onto and self.distances_match and self.edges_match

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["ok"] = self.ok
        return out


def cayley_ball(ring: CoefficientRing, radius: int, cap: int = DEFAULT_CAP,
                max_examples: int = 10) -> CayleyReport:
    """BFS ball of the Cayley graph compared with the DL ball through ``group_to_vertex``."""
    params = dl_params(ring)
    gens = list(generators(ring).values())
    e = identity(ring)
    dist = {e: 0}
    order = [e]
    queue = deque([e])
    while queue:
        g = queue.popleft()
        if dist[g] == radius:
            continue
        for s in gens:
            y = affine_mul(ring, g, s)
            if y not in dist:
                dist[y] = dist[g] + 1
                if len(dist) > cap:
                    raise AlgebraError(f"group ball exceeds cap {cap}")
                order.append(y)
                queue.append(y)
    image = {g: group_to_vertex(ring, g) for g in order}
    group_edges = set()
    for g in order:
        for s in gens:
            y = affine_mul(ring, g, s)
            if y in dist:
                group_edges.add(frozenset((image[g], image[y])))
    reference = dl_ball(params, None, radius, cap)
    ball_edges = {frozenset((reference.vertices[a], reference.vertices[b])) for a, b in reference.edges()}
    ref_dist = dict(zip(reference.vertices, reference.distances))
    examples: list[str] = []
    seen: dict[DLVertex, AffineElement] = {}
    for g, v in image.items():
        if v in seen and len(examples) < max_examples:
            examples.append(f"{seen[v].to_json()} and {g.to_json()} both map to {v}")
        seen[v] = g
    injective = len(seen) == len(image)
    onto = set(seen) == set(ref_dist)
    if not onto:
        for v in list(set(seen) ^ set(ref_dist))[:max_examples]:
            examples.append(f"vertex {v} only on the {'group' if v in seen else 'DL'} side")
    distances_match = all(ref_dist.get(image[g]) == r for g, r in dist.items())
    edges_match = group_edges == ball_edges
    if not edges_match:
        for edge in list(group_edges ^ ball_edges)[:max_examples]:
            a, b = sorted(edge, key=DLVertex.text) if len(edge) == 2 else (next(iter(edge)),) * 2
            examples.append(f"edge {a} -- {b} only on the {'group' if edge in group_edges else 'DL'} side")
    return CayleyReport(ring.describe(), ring.d, radius, len(order), len(reference),
                        len(group_edges), len(ball_edges), injective, onto,
                        distances_match, edges_match, examples)


# ---------------------------------------------------------------- presentation

@dataclass(frozen=True)
class Relator:
    kind: str
    word: tuple[GeneratorLabel, ...]

    def __str__(self) -> str:
        return " ".join(str(s) for s in self.word)


def _lambda_poly(ring: CoefficientRing, i: int) -> tuple[int, int]:
    """(constant, t-coefficient) of Lambda_i; the last coordinate has Lambda = 1."""
    if i == ring.d - 1:
        return ring.one, 0
    return ring.ells[i], ring.one


def relators(ring: CoefficientRing) -> list[Relator]:
    """Inverse pairs plus both kinds of length-3 relators, in the symmetric form."""
    d, q = ring.d, ring.q
    if d < 3:
        raise AlgebraError("the presentation needs d >= 3")
    out = [Relator("inverse", (GeneratorLabel(i, j, lam), GeneratorLabel(j, i, ring.neg(lam))))
           for i in range(d) for j in range(d) if i != j for lam in range(q)]
    triples = [(i, j, k) for i in range(d) for j in range(d) for k in range(d)
               if len({i, j, k}) == 3]
    for i, j, k in triples:
        for lam, mu in product(range(q), repeat=2):
            nu = ring.neg(ring.add(lam, mu))
            out.append(Relator("first", (GeneratorLabel(j, i, lam), GeneratorLabel(k, j, mu),
                                         GeneratorLabel(i, k, nu))))
    for i, j, k in triples:
        ci, ti = _lambda_poly(ring, i)
        cj, tj = _lambda_poly(ring, j)
        ck, tk = _lambda_poly(ring, k)
        for lam, mu, nu in product(range(q), repeat=3):
            t_coeff = ring.add(ring.add(ring.mul(lam, tk), ring.mul(mu, ti)), ring.mul(nu, tj))
            c_coeff = ring.add(ring.add(ring.mul(lam, ck), ring.mul(mu, ci)), ring.mul(nu, cj))
            if t_coeff == 0 and c_coeff == 0:
                out.append(Relator("second", (GeneratorLabel(i, j, lam), GeneratorLabel(j, k, mu),
                                              GeneratorLabel(k, i, nu))))
    return out


@dataclass
class RelatorReport:
    ring: dict
    d: int
    counts: dict[str, int]
    expected_counts: dict[str, int]
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures and self.counts == self.expected_counts

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["ok"] = self.ok
        return out


def relator_check(ring: CoefficientRing) -> RelatorReport:
    gens = generators(ring)
    e = identity(ring)
    counts: dict[str, int] = {"inverse": 0, "first": 0, "second": 0}
    failures = []
    for rel in relators(ring):
        counts[rel.kind] += 1
        value = affine_word(ring, [gens[s] for s in rel.word])
        if not affine_equal(ring, value, e):
            failures.append(f"{rel.kind}: {rel} = {value.to_json()}")
    d, q = ring.d, ring.q
    expected = {"inverse": d * (d - 1) * q, "first": d * (d - 1) * (d - 2) * q * q,
                "second": d * (d - 1) * (d - 2) * q}
    return RelatorReport(ring.describe(), d, counts, expected, failures)


# ---------------------------------------------------------------- automaton

def _check_automaton(ring: CoefficientRing, j: int) -> None:
    if not 0 <= j < ring.d - 1:
        raise AlgebraError(f"index {j} outside 0..{ring.d - 2}")
    if ring.inv(ring.ells[j]) is None:
        raise AlgebraError(f"l_{j} = {ring.ells[j]} is not invertible")


def automaton_step(ring: CoefficientRing, j: int, state: int, letter: int) -> tuple[int, int]:
    """One transition: (output letter, next state) = (l_j * letter + state, letter)."""
    return ring.add(ring.mul(ring.ells[j], letter), state), letter


def automaton_apply(ring: CoefficientRing, j: int, a: int, f: Sequence[int], depth: int) -> list[int]:
    """First ``depth`` coefficients of ``a + (t + l_j) f`` read off the transducer."""
    _check_automaton(ring, j)
    state, out = a, []
    for n in range(depth):
        letter = f[n] if n < len(f) else 0
        symbol, state = automaton_step(ring, j, state, letter)
        out.append(symbol)
    return out


def automaton_direct(ring: CoefficientRing, j: int, a: int, f: Sequence[int], depth: int) -> list[int]:
    """The same transformation computed with polynomial arithmetic."""
    _check_automaton(ring, j)
    value = ring.padd((a,) if a else (), ring.pmul(ring.lam(j), ring.ptrim(list(f[:depth]))))
    return [value[n] if n < len(value) else 0 for n in range(depth)]
