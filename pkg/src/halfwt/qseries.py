"""Truncated q-expansions with coefficients in Q(zeta_m).

A series is stored densely as phi(m) rational polynomials in q (one per
power-basis coordinate), each truncated below ``prec``.  Products of
cyclotomic series are computed with a single rational multiplication by
packing (q, zeta) into one variable x = q^S zeta with S = 2 phi - 1.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import ceil, lcm
from typing import Sequence

import flint
import numpy as np

from .arith import (
    CycloElem,
    as_cyclo,
    embedding_matrix,
    euler_phi,
    fmpq,
    prime_divisors,
    to_fraction,
    zeta_reduction_table,
)
from .dirichlet import DirichletChar

# v_ell and friends refuse to produce series longer than this
PRECISION_CEILING = 2_000_000


class PrecisionError(ValueError):
    pass


def _truncate(poly: flint.fmpq_poly, prec: int) -> flint.fmpq_poly:
    if poly.degree() < prec:
        return poly
    return poly.truncate(prec)


def _padded(poly: flint.fmpq_poly, n: int) -> list:
    c = poly.coeffs()
    if len(c) >= n:
        return c[:n]
    return c + [flint.fmpq(0)] * (n - len(c))


class QSeries:
    """sum_{n < prec} a_n q^n with a_n in Q(zeta_order)."""

    __slots__ = ("prec", "order", "rows")

    def __init__(self, coeffs: Sequence | dict = (), prec: int | None = None, order: int | None = None):
        if isinstance(coeffs, dict):
            items = sorted(coeffs.items())
            if prec is None:
                prec = items[-1][0] + 1 if items else 0
            dense = [0] * prec
            for n, c in items:
                if n >= prec:
                    raise PrecisionError(f"exponent {n} is not below the precision {prec}")
                dense[n] = c
            coeffs = dense
        coeffs = list(coeffs)
        if prec is None:
            prec = len(coeffs)
        if order is None:
            order = 1
            for c in coeffs:
                if isinstance(c, CycloElem):
                    order = lcm(order, c.order)
        phi = euler_phi(order)
        cols = [[flint.fmpq(0)] * min(len(coeffs), prec) for _ in range(phi)]
        for n, c in enumerate(coeffs[:prec]):
            if isinstance(c, CycloElem):
                c = c if c.order == order else c.embed(order)
                for t, a in enumerate(c.poly.coeffs()):
                    cols[t][n] = a
            elif c:
                cols[0][n] = fmpq(c)
        self.prec = prec
        self.order = order
        self.rows = tuple(flint.fmpq_poly(col) for col in cols)

    @classmethod
    def from_rows(cls, rows: Sequence[flint.fmpq_poly], prec: int, order: int) -> "QSeries":
        obj = cls.__new__(cls)
        obj.prec = prec
        obj.order = order
        obj.rows = tuple(_truncate(r, prec) for r in rows)
        return obj

    @classmethod
    def zero(cls, prec: int, order: int = 1) -> "QSeries":
        return cls.from_rows([flint.fmpq_poly()] * euler_phi(order), prec, order)

    @classmethod
    def one(cls, prec: int, order: int = 1) -> "QSeries":
        rows = [flint.fmpq_poly([1] if prec > 0 else [])] + [flint.fmpq_poly()] * (euler_phi(order) - 1)
        return cls.from_rows(rows, prec, order)

    @property
    def phi(self) -> int:
        return len(self.rows)

    def __getitem__(self, n: int) -> CycloElem:
        if n < 0:
            raise IndexError(n)
        if n >= self.prec:
            raise PrecisionError(f"coefficient {n} requested at precision {self.prec}")
        return CycloElem._wrap(flint.fmpq_poly([r[n] for r in self.rows]), self.order)

    coefficient = __getitem__

    def coefficients(self, stop: int | None = None) -> list[CycloElem]:
        stop = self.prec if stop is None else min(stop, self.prec)
        cols = [_padded(r, stop) for r in self.rows]
        return [CycloElem._wrap(flint.fmpq_poly([c[n] for c in cols]), self.order) for n in range(stop)]

    def rational_coefficients(self, stop: int | None = None) -> list[Fraction]:
        if any(not r.is_zero() for r in self.rows[1:]):
            raise ValueError("series has irrational coefficients")
        stop = self.prec if stop is None else min(stop, self.prec)
        return [to_fraction(c) for c in _padded(self.rows[0], stop)]

    def support(self) -> list[int]:
        idx = set()
        for r in self.rows:
            idx.update(n for n, c in enumerate(r.coeffs()) if c)
        return sorted(idx)

    def valuation(self) -> int | None:
        best = None
        for r in self.rows:
            for n, c in enumerate(r.coeffs()):
                if c:
                    best = n if best is None else min(best, n)
                    break
        return best

    def is_zero(self) -> bool:
        return all(r.is_zero() for r in self.rows)

    # promotion and truncation
    def embed(self, order: int) -> "QSeries":
        if order == self.order:
            return self
        mat = embedding_matrix(self.order, order)
        phi = euler_phi(order)
        rows = [flint.fmpq_poly() for _ in range(phi)]
        for i, src in enumerate(self.rows):
            if src.is_zero():
                continue
            for j, e in enumerate(mat[i]):
                if e:
                    rows[j] = rows[j] + src * e
        return QSeries.from_rows(rows, self.prec, order)

    def truncate(self, prec: int) -> "QSeries":
        if prec > self.prec:
            raise PrecisionError(f"cannot raise precision from {self.prec} to {prec}")
        return QSeries.from_rows(self.rows, prec, self.order)

    def _align(self, other: "QSeries") -> tuple["QSeries", "QSeries"]:
        if self.order == other.order:
            return self, other
        m = lcm(self.order, other.order)
        return self.embed(m), other.embed(m)

    # arithmetic
    def __add__(self, other):
        if not isinstance(other, QSeries):
            return self + QSeries.one(self.prec, self.order).scale(other)
        a, b = self._align(other)
        prec = min(a.prec, b.prec)
        return QSeries.from_rows([x + y for x, y in zip(a.rows, b.rows)], prec, a.order)

    __radd__ = __add__

    def __neg__(self):
        return QSeries.from_rows([-r for r in self.rows], self.prec, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "QSeries":
        c = as_cyclo(c, self.order)
        s = self if c.order == self.order else self.embed(c.order)
        if c.is_rational():
            x = c.poly[0]
            return QSeries.from_rows([r * x for r in s.rows], s.prec, s.order)
        phi = s.phi
        table = zeta_reduction_table(s.order)
        rows = [flint.fmpq_poly() for _ in range(phi)]
        for a_idx, a in enumerate(c.poly.coeffs()):
            if not a:
                continue
            for t, r in enumerate(s.rows):
                if r.is_zero():
                    continue
                for u, coef in enumerate(table[a_idx + t]):
                    if coef:
                        rows[u] = rows[u] + r * (a * coef)
        return QSeries.from_rows(rows, s.prec, s.order)

    def __mul__(self, other):
        if isinstance(other, QSeries):
            return qs_mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int) -> "QSeries":
        result = QSeries.one(self.prec, self.order)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def inverse(self) -> "QSeries":
        """Multiplicative inverse; the constant term must be a nonzero rational."""
        if self.phi > 1 and any(r[0] != 0 for r in self.rows[1:]):
            raise ValueError("inverse needs a rational constant term")
        c0 = self.rows[0][0] if self.prec else 0
        if c0 == 0:
            raise ZeroDivisionError("series with vanishing constant term is not invertible")
        if self.phi > 1 and any(not r.is_zero() for r in self.rows[1:]):
            raise NotImplementedError("inverse of an irrational series")
        poly = _inverse_series(self.rows[0], self.prec)
        return QSeries.from_rows([poly] + [flint.fmpq_poly()] * (self.phi - 1), self.prec, self.order)

    def __eq__(self, other):
        if not isinstance(other, QSeries):
            return NotImplemented
        a, b = self._align(other)
        prec = min(a.prec, b.prec)
        return all(_truncate(x, prec) == _truncate(y, prec) for x, y in zip(a.rows, b.rows))

    def __hash__(self):
        return hash((self.prec, tuple(str(r) for r in self.rows)))

    def map_coefficients(self, weights: Sequence[int]) -> "QSeries":
        """Multiply a_n by the integer weights[n] (pointwise)."""
        n = min(self.prec, len(weights))
        out = []
        for r in self.rows:
            c = _padded(r, n)
            out.append(flint.fmpq_poly([x * w if w else 0 for x, w in zip(c, weights)]))
        return QSeries.from_rows(out, n, self.order)

    def __repr__(self):
        return f"QSeries({self.to_string(12)})"

    def to_string(self, terms: int = 10) -> str:
        parts = []
        for n in self.support():
            if len(parts) >= terms:
                parts.append("...")
                break
            c = self[n]
            cs = str(c) if c.is_rational() else f"({c})"
            if n == 0:
                parts.append(cs)
            else:
                mono = "q" if n == 1 else f"q^{n}"
                parts.append(mono if cs == "1" else ("-" + mono if cs == "-1" else f"{cs}*{mono}"))
        body = " + ".join(parts).replace("+ -", "- ") if parts else "0"
        return f"{body} + O(q^{self.prec})"

    # serialization
    def to_json(self) -> dict:
        coeffs = []
        for n in self.support():
            coeffs.append([n, [str(x) for x in self[n].coords]])
        return {"prec": self.prec, "order": self.order, "coeffs": coeffs}

    @classmethod
    def from_json(cls, data: dict) -> "QSeries":
        order = int(data["order"])
        prec = int(data["prec"])
        phi = euler_phi(order)
        cols = [[flint.fmpq(0)] * prec for _ in range(phi)]
        for n, coords in data["coeffs"]:
            for t, s in enumerate(coords):
                x = Fraction(s)
                if x:
                    cols[t][n] = flint.fmpq(x.numerator, x.denominator)
        return cls.from_rows([flint.fmpq_poly(c) for c in cols], prec, order)


def _inverse_series(f: flint.fmpq_poly, prec: int) -> flint.fmpq_poly:
    # Newton iteration g <- g (2 - f g); flint's own series type caps precision globally
    g = flint.fmpq_poly([1 / f[0]])
    n = 1
    while n < prec:
        n = min(2 * n, prec)
        fg = _truncate(f, n).mul_low(g, n)
        g = g.mul_low(2 - fg, n)
    return g


def qs_mul(f: QSeries, g: QSeries) -> QSeries:
    """Truncated Cauchy product at precision min(f.prec, g.prec)."""
    f, g = f._align(g)
    prec = min(f.prec, g.prec)
    phi = f.phi
    if phi == 1:
        return QSeries.from_rows([f.rows[0].mul_low(g.rows[0], prec)], prec, f.order)
    stride = 2 * phi - 1
    pf = _pack(f.rows, prec, stride)
    pg = _pack(g.rows, prec, stride)
    prod = pf.mul_low(pg, prec * stride)
    coeffs = _padded(prod, prec * stride)
    table = zeta_reduction_table(f.order)
    rows = [flint.fmpq_poly() for _ in range(phi)]
    for e in range(stride):
        raw = flint.fmpq_poly(coeffs[e::stride])
        if raw.is_zero():
            continue
        for t, coef in enumerate(table[e]):
            if coef:
                rows[t] = rows[t] + raw * coef
    return QSeries.from_rows(rows, prec, f.order)


def _pack(rows: Sequence[flint.fmpq_poly], prec: int, stride: int) -> flint.fmpq_poly:
    packed = [flint.fmpq(0)] * (prec * stride)
    for t, r in enumerate(rows):
        packed[t::stride] = _padded(r, prec)
    return flint.fmpq_poly(packed)


def linear_combination(coeffs: Sequence, series: Sequence[QSeries]) -> QSeries:
    if not series:
        raise ValueError("empty linear combination")
    acc = None
    for c, f in zip(coeffs, series):
        c = as_cyclo(c)
        if c.is_zero():
            continue
        term = f.scale(c)
        acc = term if acc is None else acc + term
    if acc is None:
        prec = min(f.prec for f in series)
        return QSeries.zero(prec, series[0].order)
    return acc


# ----------------------------------------------------------- special series

@lru_cache(maxsize=32)
def theta(prec: int) -> QSeries:
    """Jacobi theta function sum_{n in Z} q^(n^2)."""
    if prec < 1:
        raise ValueError("theta needs prec >= 1")
    coeffs = [0] * prec
    coeffs[0] = 1
    n = 1
    while n * n < prec:
        coeffs[n * n] = 2
        n += 1
    return QSeries(coeffs, prec)


@lru_cache(maxsize=32)
def theta_inverse(prec: int) -> QSeries:
    return theta(prec).inverse()


def theta_psi(psi: DirichletChar, prec: int) -> QSeries:
    """(1/2) sum_{n in Z} psi(n) n q^(n^2) for an odd primitive psi."""
    if psi.is_even():
        raise ValueError("theta_psi needs an odd character (the sum vanishes otherwise)")
    if not psi.is_primitive():
        raise ValueError("theta_psi needs a primitive character")
    order = psi.value_order
    coeffs: dict[int, CycloElem] = {}
    n = 1
    while n * n < prec:
        v = psi(n, order)
        if not v.is_zero():
            coeffs[n * n] = v * n
        n += 1
    return QSeries(coeffs, prec, order)


def u_ell(f: QSeries, ell: int) -> QSeries:
    """a_n -> a_{ell n}."""
    if ell < 1:
        raise ValueError("u_ell needs ell >= 1")
    if ell == 1:
        return f
    prec = -(-f.prec // ell)
    rows = [flint.fmpq_poly([r[i] for i in range(0, min(r.degree() + 1, f.prec), ell)]) for r in f.rows]
    return QSeries.from_rows(rows, prec, f.order)


def v_ell(f: QSeries, ell: int, ceiling: int | None = None) -> QSeries:
    """a_n q^n -> a_n q^(ell n)."""
    ceiling = PRECISION_CEILING if ceiling is None else ceiling
    prec = ell * f.prec
    if prec > ceiling:
        raise PrecisionError(f"v_ell would need precision {prec} above the ceiling {ceiling}")
    rows = []
    for r in f.rows:
        c = _padded(r, f.prec)
        out = [flint.fmpq(0)] * prec
        out[::ell] = c
        rows.append(flint.fmpq_poly(out))
    return QSeries.from_rows(rows, prec, f.order)


def sturm_bound(k2: int, M: int) -> int:
    """ceil((k2/2) [SL2(Z) : Gamma1(M)] / 12) + 1 with index M^2 prod (1 - 1/l^2)."""
    if k2 < 1 or M < 1:
        raise ValueError("sturm_bound needs k2 >= 1 and M >= 1")
    index = Fraction(M * M)
    for ell in prime_divisors(M) if M > 1 else []:
        index *= 1 - Fraction(1, ell * ell)
    return ceil(Fraction(k2, 2) * index / 12) + 1


def gamma0_index(M: int) -> int:
    out = M
    for ell in prime_divisors(M) if M > 1 else []:
        out = out // ell * (ell + 1)
    return out


def character_sturm_bound(k2: int, M: int) -> int:
    """Bound for a space with a fixed nebentypus: floor(k [SL2 : Gamma0(M)] / 12) + 1."""
    return int(Fraction(k2, 2) * gamma0_index(M) / 12) + 1


# --------------------------------------------------------- Eisenstein series

def bernoulli_generalized(k: int, psi: DirichletChar) -> CycloElem:
    """B_{k,psi} from sum_{a=1}^f psi(a) t e^(at)/(e^(ft)-1) = sum B_{k,psi} t^k/k!.

    Expanding each summand with Bernoulli polynomials gives
    B_{k,psi} = f^(k-1) sum_a psi(a) B_k(a/f).
    """
    f = psi.modulus
    order = psi.value_order
    bk = flint.fmpq_poly.bernoulli_poly(k)
    total = CycloElem.from_rational(0, order)
    for a in range(1, f + 1):
        v = psi(a, order)
        if v.is_zero():
            continue
        total = total + v * to_fraction(bk(flint.fmpq(a, f)))
    return total * Fraction(f) ** (k - 1)


def _phase_indices(chi: DirichletChar, order: int, stop: int) -> np.ndarray:
    """idx[n] = k with chi(n) = zeta_order^k, or -1 when chi(n) = 0."""
    period = [
        -1 if (e := chi.value_exponent(a, order)) is None else e % order
        for a in range(chi.modulus)
    ]
    reps = -(-stop // chi.modulus)
    return np.tile(np.array(period, dtype=np.int64), reps)[:stop]


def divisor_sum_series(chi: DirichletChar, psi: DirichletChar, k: int, prec: int, order: int) -> list[flint.fmpq_poly]:
    """Rows of sum_{n>=1} (sum_{d|n} psi(d) chi(n/d) d^(k-1)) q^n (no constant term)."""
    phi = euler_phi(order)
    idx_chi = _phase_indices(chi, order, prec)
    idx_psi = _phase_indices(psi, order, prec)
    big = k > 5
    acc = np.zeros((order, prec), dtype=object if big else np.int64)
    for d in range(1, prec):
        pd = idx_psi[d]
        if pd < 0:
            continue
        e_max = (prec - 1) // d
        e = np.arange(1, e_max + 1)
        ce = idx_chi[e]
        mask = ce >= 0
        if not mask.any():
            continue
        e = e[mask]
        where = (ce[mask] + pd) % order
        weight = d ** (k - 1)
        acc[where, d * e] += weight
    table = np.array(zeta_reduction_table(order)[:order], dtype=np.int64 if not big else object)
    coords = table.T.dot(acc)  # phi x prec
    rows = []
    for t in range(phi):
        rows.append(flint.fmpq_poly([int(x) for x in coords[t]]))
    return rows


def eisenstein(chi: DirichletChar, psi: DirichletChar, k: int, prec: int, t: int = 1) -> QSeries:
    """E_k^{chi,psi}(q^t): a_n = sum_{d|n} psi(d) chi(n/d) d^(k-1).

    chi and psi must be primitive with (chi psi)(-1) = (-1)^k; the result
    lies in M_k(Gamma0(f_chi f_psi t), chi psi).  For k = 2 with both
    characters trivial this is E_2(q) - t E_2(q^t), which needs t > 1.
    """
    if k < 1:
        raise ValueError("weight must be positive")
    if (chi * psi).parity() != (-1) ** k:
        raise ValueError(f"parity mismatch: (chi psi)(-1) must equal (-1)^{k}")
    order = lcm(chi.value_order, psi.value_order)
    if k == 2 and chi.is_trivial() and psi.is_trivial():
        if t == 1:
            raise ValueError("E_2 is not modular; use t > 1 for E_2(q) - t E_2(q^t)")
        base = QSeries.from_rows(divisor_sum_series(chi, psi, 2, -(-prec // 1), order), prec, order)
        base = base + Fraction(-1, 24)
        return base - v_ell(base.truncate(-(-prec // t)), t).truncate(prec).scale(t)
    inner = -(-prec // t)
    rows = divisor_sum_series(chi, psi, k, inner, order)
    series = QSeries.from_rows(rows, inner, order)
    series = series + eisenstein_constant(chi, psi, k)
    if t > 1:
        series = v_ell(series, t).truncate(prec)
    return series


def eisenstein_constant(chi: DirichletChar, psi: DirichletChar, k: int) -> CycloElem:
    order = lcm(chi.value_order, psi.value_order)
    if chi.is_trivial():
        return (bernoulli_generalized(k, psi) * Fraction(-1, 2 * k)).embed(order)
    if k == 1 and psi.is_trivial():
        return (bernoulli_generalized(1, chi) * Fraction(-1, 2)).embed(order)
    return CycloElem.from_rational(0, order)
