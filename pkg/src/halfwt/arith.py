"""Exact arithmetic: rationals, cyclotomic fields, polynomials, Newton polygons.

Elements of Q(zeta_m) are stored on the power basis 1, z, ..., z^(phi(m)-1)
as an ``fmpq_poly`` reduced modulo the m-th cyclotomic polynomial.  Fields
of different orders are combined by embedding both into Q(zeta_lcm).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm
from typing import Iterable, Sequence

import flint

Rational = Fraction


class NotRational(ValueError):
    pass


# ---------------------------------------------------------------- integers

@lru_cache(maxsize=None)
def factorint(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorisation of ``n > 0`` as ``((p, e), ...)`` with p increasing."""
    if n < 1:
        raise ValueError(f"factorint needs a positive integer, got {n}")
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def prime_divisors(n: int) -> list[int]:
    return [p for p, _ in factorint(n)]


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factorint(n):
        divs = [d * p**i for d in divs for i in range(e + 1)]
    return sorted(divs)


def euler_phi(n: int) -> int:
    out = n
    for p, _ in factorint(n):
        out = out // p * (p - 1)
    return out


def moebius(n: int) -> int:
    fac = factorint(n)
    if any(e > 1 for _, e in fac):
        return 0
    return -1 if len(fac) % 2 else 1


def is_prime(n: int) -> bool:
    return n > 1 and factorint(n) == ((n, 1),)


def primes_up_to(bound: int) -> list[int]:
    if bound < 2:
        return []
    sieve = bytearray([1]) * (bound + 1)
    sieve[0] = sieve[1] = 0
    for i in range(2, int(bound**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(sieve[i * i :: i]))
    return [i for i, flag in enumerate(sieve) if flag]


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n)."""
    if n == 0:
        return 1 if a in (1, -1) else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if a % 2 == 0:
            return 0
        if v % 2 and a % 8 in (3, 5):
            result = -result
    # Jacobi symbol (a/n), n odd positive
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, flint.fmpq):
        return Fraction(int(x.p), int(x.q))
    if isinstance(x, flint.fmpz):
        return Fraction(int(x))
    if isinstance(x, CycloElem):
        return x.to_fraction()
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def fmpq(x) -> flint.fmpq:
    if isinstance(x, flint.fmpq):
        return x
    if isinstance(x, int):
        return flint.fmpq(x)
    x = to_fraction(x)
    return flint.fmpq(x.numerator, x.denominator)


def padic_valuation(x, p: int):
    """v_p of a rational or cyclotomic element; ``float('inf')`` for zero.

    For an element of Q(zeta_m) with m > 2 the valuation is that of the
    norm to Q divided by the degree, i.e. the valuation normalised on Q for
    an extension of p where p is unramified and inert; for split p this
    is only an average over the primes above p and the caller should work
    with restriction of scalars instead.
    """
    if isinstance(x, CycloElem):
        if x.is_rational():
            x = x.to_fraction()
        else:
            return Fraction(padic_valuation(x.norm(), p), x.degree)
    x = to_fraction(x)
    if x == 0:
        return float("inf")
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


# ---------------------------------------------------------- cyclotomic data

@lru_cache(maxsize=None)
def _cyclo(m: int) -> flint.fmpq_poly:
    return flint.fmpq_poly(flint.fmpz_poly.cyclotomic(m))


@lru_cache(maxsize=None)
def zeta_reduction_table(m: int) -> tuple[tuple[int, ...], ...]:
    """Coordinates of z^e on the power basis of Q(zeta_m), for 0 <= e < m."""
    phi = euler_phi(m)
    cyc = _cyclo(m)
    rows = []
    for e in range(max(m, 2 * phi - 1)):
        r = flint.fmpq_poly([0] * e + [1]) % cyc
        c = [int(a) for a in r.coeffs()]
        rows.append(tuple(c + [0] * (phi - len(c))))
    return tuple(rows)


@lru_cache(maxsize=None)
def embedding_matrix(m: int, big: int) -> tuple[tuple[int, ...], ...]:
    """Row i = coordinates in Q(zeta_big) of zeta_m^i."""
    if big % m:
        raise ValueError(f"Q(zeta_{m}) does not embed in Q(zeta_{big})")
    step = big // m
    table = zeta_reduction_table(big)
    return tuple(table[(i * step) % big] for i in range(euler_phi(m)))


@lru_cache(maxsize=None)
def _basis_traces(m: int) -> tuple[Fraction, ...]:
    # normalised trace Tr(z^i)/phi(m) via Ramanujan sums
    phi = euler_phi(m)
    out = []
    for i in range(phi):
        g = gcd(i, m)
        c = moebius(m // g) * phi // euler_phi(m // g)
        out.append(Fraction(c, phi))
    return tuple(out)


def _poly_from_coords(coords: Sequence, m: int) -> flint.fmpq_poly:
    poly = flint.fmpq_poly([fmpq(c) for c in coords])
    if len(coords) > euler_phi(m):
        poly = poly % _cyclo(m)
    return poly


class CycloElem:
    """An element of the cyclotomic field Q(zeta_m).

    >>> z = CycloElem.zeta(4)
    >>> z * z == -1
    True
    """

    __slots__ = ("order", "_poly")

    def __init__(self, coords: Iterable = (), order: int = 1):
        if order < 1:
            raise ValueError("field order must be positive")
        self.order = order
        self._poly = _poly_from_coords(list(coords), order)

    @classmethod
    def _wrap(cls, poly: flint.fmpq_poly, order: int) -> "CycloElem":
        obj = cls.__new__(cls)
        obj.order = order
        obj._poly = poly
        return obj

    @classmethod
    def zeta(cls, order: int, power: int = 1) -> "CycloElem":
        power %= order
        return cls(zeta_reduction_table(order)[power], order)

    @classmethod
    def from_rational(cls, x, order: int = 1) -> "CycloElem":
        return cls._wrap(flint.fmpq_poly([fmpq(x)]), order)

    @property
    def degree(self) -> int:
        return euler_phi(self.order)

    @property
    def coords(self) -> tuple[Fraction, ...]:
        c = [to_fraction(a) for a in self._poly.coeffs()]
        return tuple(c + [Fraction(0)] * (self.degree - len(c)))

    @property
    def poly(self) -> flint.fmpq_poly:
        return self._poly

    def is_zero(self) -> bool:
        return self._poly.is_zero()

    def is_rational(self) -> bool:
        return self._poly.degree() <= 0

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise NotRational(f"{self} is not rational")
        return to_fraction(self._poly[0])

    def embed(self, order: int) -> "CycloElem":
        if order == self.order:
            return self
        if self.is_rational():
            return CycloElem._wrap(self._poly, order)
        mat = embedding_matrix(self.order, order)
        coeffs = [0] * euler_phi(order)
        for i, c in enumerate(self._poly.coeffs()):
            if c:
                for j, e in enumerate(mat[i]):
                    if e:
                        coeffs[j] += c * e
        return CycloElem._wrap(flint.fmpq_poly(coeffs), order)

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, CycloElem):
            if other.order == self.order:
                return self, other
            m = lcm(self.order, other.order)
            return self.embed(m), other.embed(m)
        if isinstance(other, (int, Fraction, flint.fmpq, flint.fmpz)):
            return self, CycloElem._wrap(flint.fmpq_poly([fmpq(other)]), self.order)
        return None

    def __add__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        return CycloElem._wrap(a._poly + b._poly, a.order)

    __radd__ = __add__

    def __neg__(self):
        return CycloElem._wrap(-self._poly, self.order)

    def __sub__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        return CycloElem._wrap(a._poly - b._poly, a.order)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        prod = a._poly * b._poly
        if prod.degree() >= a.degree:
            prod = prod % _cyclo(a.order)
        return CycloElem._wrap(prod, a.order)

    __rmul__ = __mul__

    def inverse(self) -> "CycloElem":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in a cyclotomic field")
        if self.is_rational():
            return CycloElem._wrap(flint.fmpq_poly([1 / self._poly[0]]), self.order)
        g, s, _ = self._poly.xgcd(_cyclo(self.order))
        return CycloElem._wrap(s / g[0], self.order)

    def __truediv__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        return a * b.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = CycloElem.from_rational(1, self.order)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        return a._poly == b._poly

    def __hash__(self):
        # normalised trace and the leading-power shape are field independent
        if self.is_rational():
            return hash(self.to_fraction())
        return hash(("cyclo", self.normalized_trace()))

    def normalized_trace(self) -> Fraction:
        tr = _basis_traces(self.order)
        return sum((to_fraction(c) * tr[i] for i, c in enumerate(self._poly.coeffs())), Fraction(0))

    def galois(self, a: int) -> "CycloElem":
        """Image under the automorphism zeta -> zeta^a (a coprime to the order)."""
        if gcd(a, self.order) != 1:
            raise ValueError("galois exponent must be coprime to the field order")
        table = zeta_reduction_table(self.order)
        coeffs = [Fraction(0)] * self.degree
        for i, c in enumerate(self._poly.coeffs()):
            if c:
                row = table[(i * a) % self.order]
                for j, e in enumerate(row):
                    if e:
                        coeffs[j] += to_fraction(c) * e
        return CycloElem(coeffs, self.order)

    def conj(self) -> "CycloElem":
        return self.galois(-1 % max(self.order, 1)) if self.order > 2 else self

    def mult_matrix(self) -> list[list[Fraction]]:
        """Matrix of multiplication by self on the power basis (columns = images)."""
        phi = self.degree
        cols = []
        z = CycloElem.zeta(self.order) if phi > 1 else None
        cur = self
        for i in range(phi):
            cols.append(cur.coords)
            if i + 1 < phi:
                cur = cur * z
        return [[cols[j][i] for j in range(phi)] for i in range(phi)]

    def norm(self) -> Fraction:
        if self.is_rational():
            return self.to_fraction() ** self.degree
        mat = flint.fmpq_mat([[fmpq(x) for x in row] for row in self.mult_matrix()])
        return to_fraction(mat.det())

    def minpoly(self) -> "Poly":
        mat = flint.fmpq_mat([[fmpq(x) for x in row] for row in self.mult_matrix()])
        return Poly.from_fmpq_poly(mat.minpoly())

    def __repr__(self):
        return f"CycloElem({self})"

    def __str__(self):
        if self.is_rational():
            return str(self.to_fraction())
        terms = []
        for i, c in enumerate(self.coords):
            if c == 0:
                continue
            mono = "" if i == 0 else ("z" if i == 1 else f"z^{i}")
            if not mono:
                terms.append(str(c))
            elif c == 1:
                terms.append(mono)
            elif c == -1:
                terms.append("-" + mono)
            else:
                terms.append(f"{c}*{mono}")
        return " + ".join(terms).replace("+ -", "- ") + f" [z=zeta_{self.order}]"

    def to_json(self) -> list[str]:
        return [str(c) for c in self.coords]

    @classmethod
    def from_json(cls, data: Sequence[str], order: int) -> "CycloElem":
        return cls([Fraction(s) for s in data], order)


def as_cyclo(x, order: int = 1) -> CycloElem:
    if isinstance(x, CycloElem):
        return x if x.order == order else x.embed(lcm(order, x.order))
    return CycloElem.from_rational(x, order)


def cyclo_embed(x: CycloElem, order: int) -> CycloElem:
    """Embed x into Q(zeta_order); the source order must divide ``order``."""
    return x.embed(order)


# -------------------------------------------------------------- polynomials

class Poly:
    """Univariate polynomial over Q(zeta_m), coefficients constant term first."""

    __slots__ = ("order", "coeffs", "padic_precision")

    def __init__(self, coeffs: Iterable = (), order: int | None = None, padic_precision=None):
        coeffs = list(coeffs)
        if order is None:
            order = 1
            for c in coeffs:
                if isinstance(c, CycloElem):
                    order = lcm(order, c.order)
        cs = [as_cyclo(c, order) for c in coeffs]
        cs = [c if c.order == order else c.embed(order) for c in cs]
        while cs and cs[-1].is_zero():
            cs.pop()
        self.order = order
        self.coeffs = tuple(cs)
        # (p, N): coefficients are only known modulo p^N
        self.padic_precision = padic_precision

    @classmethod
    def from_fmpq_poly(cls, f: flint.fmpq_poly) -> "Poly":
        return cls([to_fraction(c) for c in f.coeffs()])

    @classmethod
    def x(cls, order: int = 1) -> "Poly":
        return cls([0, 1], order)

    @classmethod
    def one(cls, order: int = 1) -> "Poly":
        return cls([1], order)

    def __len__(self):
        return len(self.coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, i: int) -> CycloElem:
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return CycloElem.from_rational(0, self.order)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_rational(self) -> bool:
        return all(c.is_rational() for c in self.coeffs)

    def rational_coeffs(self) -> list[Fraction]:
        return [c.to_fraction() for c in self.coeffs]

    def to_fmpq_poly(self) -> flint.fmpq_poly:
        return flint.fmpq_poly([fmpq(c) for c in self.rational_coeffs()])

    def embed(self, order: int) -> "Poly":
        return Poly([c.embed(order) for c in self.coeffs], order, self.padic_precision)

    def _pair(self, other):
        if not isinstance(other, Poly):
            other = Poly([other], self.order)
        m = lcm(self.order, other.order)
        return self.embed(m) if m != self.order else self, other.embed(m) if m != other.order else other

    def __add__(self, other):
        a, b = self._pair(other)
        n = max(len(a), len(b))
        return Poly([a[i] + b[i] for i in range(n)], a.order)

    __radd__ = __add__

    def __neg__(self):
        return Poly([-c for c in self.coeffs], self.order)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Poly) else -as_cyclo(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Poly):
            c = as_cyclo(other)
            return Poly([x * c for x in self.coeffs], lcm(self.order, c.order))
        a, b = self._pair(other)
        if a.is_zero() or b.is_zero():
            return Poly([], a.order)
        if a.is_rational() and b.is_rational():
            return Poly.from_fmpq_poly(a.to_fmpq_poly() * b.to_fmpq_poly()).embed(a.order)
        out = [CycloElem.from_rational(0, a.order)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a.coeffs):
            if x.is_zero():
                continue
            for j, y in enumerate(b.coeffs):
                out[i + j] = out[i + j] + x * y
        return Poly(out, a.order)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        result = Poly.one(self.order)
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other):
        if not isinstance(other, Poly):
            other = Poly([other])
        a, b = self._pair(other)
        return a.coeffs == b.coeffs

    def __hash__(self):
        return hash(tuple(hash(c) for c in self.coeffs))

    def __divmod__(self, other: "Poly"):
        a, b = self._pair(other)
        if b.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        if a.is_rational() and b.is_rational():
            q, r = divmod(a.to_fmpq_poly(), b.to_fmpq_poly())
            return Poly.from_fmpq_poly(q).embed(a.order), Poly.from_fmpq_poly(r).embed(a.order)
        rem = list(a.coeffs)
        lead_inv = b.coeffs[-1].inverse()
        quot = [CycloElem.from_rational(0, a.order)] * max(len(rem) - len(b) + 1, 0)
        for shift in range(len(rem) - len(b), -1, -1):
            c = rem[shift + len(b) - 1] * lead_inv
            quot[shift] = c
            if c.is_zero():
                continue
            for i, y in enumerate(b.coeffs):
                rem[shift + i] = rem[shift + i] - c * y
        return Poly(quot, a.order), Poly(rem[: len(b) - 1], a.order)

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def monic(self) -> "Poly":
        if self.is_zero():
            return self
        return self * self.coeffs[-1].inverse()

    def fredholm_normalized(self) -> "Poly":
        """Scale so that the constant term is 1."""
        if self[0].is_zero():
            raise ValueError("constant term vanishes; cannot normalise to 1")
        return self * self.coeffs[0].inverse()

    def derivative(self) -> "Poly":
        return Poly([c * i for i, c in enumerate(self.coeffs)][1:], self.order)

    def gcd(self, other: "Poly") -> "Poly":
        a, b = self._pair(other)
        if a.is_rational() and b.is_rational():
            return Poly.from_fmpq_poly(a.to_fmpq_poly().gcd(b.to_fmpq_poly())).embed(a.order)
        while not b.is_zero():
            a, b = b, a % b
        return a.monic()

    def divides(self, other: "Poly") -> bool:
        return (other % self).is_zero()

    def __call__(self, x):
        acc = CycloElem.from_rational(0, self.order)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def reverse(self, n: int | None = None) -> "Poly":
        n = self.degree if n is None else n
        cs = list(self.coeffs) + [CycloElem.from_rational(0, self.order)] * (n + 1 - len(self))
        return Poly(reversed(cs[: n + 1]), self.order)

    def __repr__(self):
        return f"Poly({self})"

    def __str__(self):
        if self.is_zero():
            return "0"
        terms = []
        for i, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            cs = str(c) if c.is_rational() else f"({c})"
            mono = "" if i == 0 else ("T" if i == 1 else f"T^{i}")
            terms.append(cs if not mono else f"{cs}*{mono}")
        return " + ".join(terms)

    def to_json(self) -> dict:
        return {"order": self.order, "coeffs": [c.to_json() for c in self.coeffs]}

    @classmethod
    def from_json(cls, data: dict) -> "Poly":
        order = data["order"]
        return cls([CycloElem.from_json(c, order) for c in data["coeffs"]], order)


def _hessenberg_charpoly(rows: list[list[CycloElem]], order: int) -> Poly:
    """Characteristic polynomial det(T - A) over Q(zeta_order)."""
    n = len(rows)
    zero = CycloElem.from_rational(0, order)
    a = [[as_cyclo(x, order) for x in row] for row in rows]
    # reduce to upper Hessenberg form by similarity
    for j in range(n - 2):
        piv = next((i for i in range(j + 1, n) if not a[i][j].is_zero()), None)
        if piv is None:
            continue
        if piv != j + 1:
            a[piv], a[j + 1] = a[j + 1], a[piv]
            for r in a:
                r[piv], r[j + 1] = r[j + 1], r[piv]
        inv = a[j + 1][j].inverse()
        for i in range(j + 2, n):
            if a[i][j].is_zero():
                continue
            f = a[i][j] * inv
            a[i] = [x - f * y for x, y in zip(a[i], a[j + 1])]
            for r in a:
                r[j + 1] = r[j + 1] + f * r[i]
    polys = [Poly.one(order)]
    x = Poly.x(order)
    for m in range(1, n + 1):
        p = (x - a[m - 1][m - 1]) * polys[m - 1]
        t = CycloElem.from_rational(1, order)
        for i in range(1, m):
            t = t * a[m - i][m - i - 1]
            if t.is_zero():
                break
            p = p - polys[m - i - 1] * (t * a[m - i - 1][m - 1])
        polys.append(p)
    del zero
    return polys[n]


def charpoly(rows: Sequence[Sequence], order: int | None = None) -> Poly:
    """Characteristic polynomial det(T - A) of a square matrix over Q(zeta_m)."""
    if order is None:
        order = 1
        for row in rows:
            for x in row:
                if isinstance(x, CycloElem):
                    order = lcm(order, x.order)
    if all(as_cyclo(x).is_rational() for row in rows for x in row):
        mat = flint.fmpq_mat([[fmpq(as_cyclo(x).to_fraction()) for x in row] for row in rows]) if rows else None
        if mat is None:
            return Poly.one(order)
        return Poly.from_fmpq_poly(mat.charpoly()).embed(order)
    return _hessenberg_charpoly([list(r) for r in rows], order)


def restrict_scalars_matrix(rows: Sequence[Sequence], order: int) -> flint.fmpq_mat:
    """The rational matrix of a Q(zeta_m)-linear map viewed over Q."""
    n = len(rows)
    phi = euler_phi(order)
    big = [[flint.fmpq(0)] * (n * phi) for _ in range(n * phi)]
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            x = as_cyclo(x, order)
            if x.is_zero():
                continue
            block = x.mult_matrix()
            for a in range(phi):
                for b in range(phi):
                    if block[a][b]:
                        big[i * phi + a][j * phi + b] = fmpq(block[a][b])
    return flint.fmpq_mat(big) if n else flint.fmpq_mat(0, 0)


def restrict_scalars_charpoly(rows: Sequence[Sequence], order: int | None = None) -> Poly:
    """Characteristic polynomial over Q of the restriction of scalars of A.

    >>> restrict_scalars_charpoly([[CycloElem.zeta(4)]])
    Poly(1 + 1*T^2)
    """
    if order is None:
        order = 1
        for row in rows:
            for x in row:
                if isinstance(x, CycloElem):
                    order = lcm(order, x.order)
    if not rows:
        return Poly.one()
    return Poly.from_fmpq_poly(restrict_scalars_matrix(rows, order).charpoly())


def squarefree_part(f: Poly) -> Poly:
    """f / gcd(f, f'), normalised to constant term 1 when f(0) = 1, else monic."""
    if f.is_zero():
        raise ValueError("squarefree part of the zero polynomial")
    if f.degree == 0:
        return Poly.one(f.order)
    g = f.gcd(f.derivative())
    out = f // g
    if f[0] == 1:
        return out.fredholm_normalized()
    return out.monic()


# ----------------------------------------------------------- Newton polygons

@dataclass(frozen=True)
class NewtonPolygon:
    """Lower convex hull of the points (i, v_p(c_i)).

    ``slopes`` lists each slope once per unit of horizontal length, in
    increasing order; for a Fredholm series these are the valuations of
    the reciprocal roots.
    """

    p: int
    vertices: tuple[tuple[int, Fraction], ...]
    slopes: tuple[Fraction, ...] = field(init=False)

    def __post_init__(self):
        slopes = []
        for (x0, y0), (x1, y1) in zip(self.vertices, self.vertices[1:]):
            s = Fraction(y1 - y0) / (x1 - x0)
            slopes.extend([s] * (x1 - x0))
        object.__setattr__(self, "slopes", tuple(slopes))

    def multiplicities(self) -> dict[Fraction, int]:
        out: dict[Fraction, int] = {}
        for s in self.slopes:
            out[s] = out.get(s, 0) + 1
        return out

    def distinct_slopes(self) -> list[Fraction]:
        return sorted(self.multiplicities())

    def segments(self) -> list[tuple[Fraction, int]]:
        return [(s, m) for s, m in sorted(self.multiplicities().items())]


def _lower_hull(points: list[tuple[int, Fraction]]) -> list[tuple[int, Fraction]]:
    hull: list[tuple[int, Fraction]] = []
    for pt in points:
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = hull[-2], hull[-1]
            # drop the middle point unless it lies strictly below the chord
            if (y1 - y0) * (pt[0] - x0) >= (pt[1] - y0) * (x1 - x0):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def _rational_coeffs(f) -> list[Fraction]:
    if isinstance(f, Poly):
        if not f.is_rational():
            raise NotRational(
                "Newton polygon needs rational coefficients; apply restriction of scalars first"
            )
        return f.rational_coeffs()
    if isinstance(f, flint.fmpq_poly):
        return [to_fraction(c) for c in f.coeffs()]
    return [to_fraction(c) for c in f]


def newton_polygon(f, p: int) -> NewtonPolygon:
    coeffs = _rational_coeffs(f)
    points = [(i, Fraction(padic_valuation(c, p))) for i, c in enumerate(coeffs) if c != 0]
    if not points:
        raise ValueError("Newton polygon of the zero polynomial")
    return NewtonPolygon(p, tuple(_lower_hull(points)))


def _pure_slope(f: flint.fmpq_poly, p: int):
    np_ = newton_polygon(f, p)
    distinct = np_.distinct_slopes()
    return distinct[0] if len(distinct) == 1 else None


def pure_slope_factor(f, p: int, sigma, padic_prec: int = 60) -> Poly:
    """The factor of the Fredholm polynomial f whose reciprocal roots have slope sigma.

    The result has constant term 1 and a single Newton segment of slope
    sigma.  When every Q-irreducible factor of f has a pure slope the
    factor is exact; otherwise it is a p-adic approximation whose
    ``padic_precision`` attribute is ``(p, padic_prec)``.
    """
    coeffs = _rational_coeffs(f)
    if not coeffs or coeffs[0] != 1:
        raise ValueError("pure_slope_factor expects a polynomial with constant term 1")
    sigma = Fraction(sigma)
    fq = flint.fmpq_poly([fmpq(c) for c in coeffs])
    if fq.degree() <= 0:
        return Poly.one()
    _, factors = fq.factor()
    exact = flint.fmpq_poly([1])
    mixed = False
    for g, e in factors:
        s = _pure_slope(g, p)
        if s is None:
            mixed = True
            break
        if s == sigma:
            exact *= g**e
    if not mixed:
        return Poly.from_fmpq_poly(exact / exact[0])
    return _padic_slope_factor(coeffs, p, sigma, padic_prec)


def slope_factors(f, p: int, padic_prec: int = 60) -> dict[Fraction, Poly]:
    slopes = newton_polygon(f, p).distinct_slopes()
    return {s: pure_slope_factor(f, p, s, padic_prec) for s in slopes}


def padic_round(x: Fraction, p: int, prec: int) -> Fraction:
    """Representative of x modulo p^prec (absolute), with p-power denominator."""
    if x == 0:
        return Fraction(0)
    v = padic_valuation(x, p)
    if v >= prec:
        return Fraction(0)
    unit = x / Fraction(p) ** v
    mod = p ** (prec - v)
    r = unit.numerator * pow(unit.denominator, -1, mod) % mod
    if r > mod // 2:
        r -= mod
    return Fraction(p) ** v * r


def _dominant_factor(coeffs: list[Fraction], p: int, d: int, gap: Fraction, prec: int) -> list[Fraction]:
    """Monic G with the d roots of smallest valuation of the monic polynomial
    x^n + coeffs[n-1] x^(n-1) + ... (coeffs constant first, length n+1).

    Computed by subspace iteration with the companion matrix; ``gap`` is the
    valuation gap to the remaining roots.
    """
    n = len(coeffs) - 1
    if d == n:
        return coeffs
    comp = flint.fmpq_mat(n, n)
    for i in range(1, n):
        comp[i, i - 1] = 1
    for i in range(n):
        comp[i, n - 1] = -fmpq(coeffs[i])
    previous = None
    steps = int((prec + 4 * n + 8) / gap) + 4
    while True:
        power = comp**steps
        # starting block: first d standard vectors pushed through the power
        block = flint.fmpq_mat(n, d)
        for i in range(n):
            for j in range(d):
                block[i, j] = power[i, j]
        rows = _padic_pivot_rows(block, p)
        sub = flint.fmpq_mat([[block[r, j] for j in range(d)] for r in rows])
        image = comp * block
        sub_img = flint.fmpq_mat([[image[r, j] for j in range(d)] for r in rows])
        restricted = sub.inv() * sub_img
        g = [to_fraction(c) for c in restricted.charpoly().coeffs()]
        rounded = [padic_round(c, p, prec) for c in g]
        if rounded == previous:
            return g
        previous = rounded
        steps *= 2
        if steps > 1 << 14:
            raise ArithmeticError("p-adic slope factorisation did not converge")


def _padic_pivot_rows(block: flint.fmpq_mat, p: int) -> list[int]:
    # Gaussian elimination choosing pivots of minimal valuation, carried out
    # on a common-denominator integer copy reduced mod p^M
    n, d = block.nrows(), block.ncols()
    fr = [[to_fraction(block[i, j]) for j in range(d)] for i in range(n)]
    den = 1
    for row in fr:
        for x in row:
            den = lcm(den, x.denominator)
    ints = [[x.numerator * (den // x.denominator) for x in row] for row in fr]
    M = 64
    while True:
        rows = _modular_pivots(ints, p, M)
        if rows is not None:
            return rows
        M *= 2
        if M > 1 << 16:
            raise ArithmeticError("degenerate dominant subspace")


def _modular_pivots(ints: list[list[int]], p: int, M: int) -> list[int] | None:
    mod = p**M
    work = [[x % mod for x in row] for row in ints]
    n, d = len(work), len(work[0]) if work else 0
    chosen: list[int] = []
    for j in range(d):
        best, best_v = None, None
        for i in range(n):
            a = work[i][j]
            if i in chosen or a == 0:
                continue
            v = 0
            while a % p == 0:
                a //= p
                v += 1
            if best_v is None or v < best_v:
                best, best_v = i, v
        if best is None or best_v >= M // 2:
            return None
        chosen.append(best)
        pv = p**best_v
        inv = pow(work[best][j] // pv, -1, mod)
        prow = work[best]
        for i in range(n):
            a = work[i][j]
            if i not in chosen and a:
                f = (a // pv) * inv % mod
                work[i] = [(x - f * y) % mod for x, y in zip(work[i], prow)]
    return chosen


def _padic_slope_factor(coeffs: list[Fraction], p: int, sigma: Fraction, prec: int) -> Poly:
    np_ = newton_polygon(coeffs, p)
    mult = np_.multiplicities()
    if sigma not in mult:
        return Poly.one()
    n = len(coeffs) - 1
    slopes = np_.slopes
    # reversed polynomial is monic (f(0) = 1); its roots are the reciprocal roots of f
    rev = list(reversed(coeffs))
    lead = rev[-1]
    rev = [c / lead for c in rev]
    below = sum(m for s, m in mult.items() if s < sigma)
    upto = below + mult[sigma]
    work_prec = prec + 10 + 2 * n

    def dominant(d: int) -> list[Fraction]:
        if d == 0:
            return [Fraction(1)]
        gap = slopes[d] - slopes[d - 1] if d < n else Fraction(1)
        return _dominant_factor(rev, p, d, gap, work_prec)

    num = flint.fmpq_poly([fmpq(c) for c in dominant(upto)])
    den = flint.fmpq_poly([fmpq(c) for c in dominant(below)])
    g = [to_fraction(c) for c in (num // den).coeffs()]
    fred = [padic_round(c, p, prec) for c in reversed(g)]
    return Poly(fred, 1, padic_precision=(p, prec))
