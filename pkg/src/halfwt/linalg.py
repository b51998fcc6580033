"""Matrices over Q(zeta_m) stored as phi(m) rational coordinate matrices.

A K-matrix A is the tuple (A_0, ..., A_{phi-1}) with A = sum A_t z^t.
Vectors are rows and linear maps act on the right, so the rows of a
Hecke matrix are the coordinates of the images of the basis vectors.

Pivot and rank decisions are taken modulo a large prime l = 1 mod m
(where z maps to an m-th root of unity mod l) and then confirmed by an
exact computation, so every returned answer is exact.
"""

from __future__ import annotations

from functools import lru_cache
from math import lcm
from typing import Sequence

import flint

from .arith import (
    CycloElem,
    Poly,
    as_cyclo,
    charpoly,
    euler_phi,
    fmpq,
    prime_divisors,
    zeta_reduction_table,
)


class LinearAlgebraError(ArithmeticError):
    pass


def _zero_mat(r: int, c: int) -> flint.fmpq_mat:
    return flint.fmpq_mat(r, c)


def _qmul(x: flint.fmpq_mat, y: flint.fmpq_mat) -> flint.fmpq_mat:
    # clearing denominators lets flint use its fast integer product
    xn, xd = x.numer_denom()
    yn, yd = y.numer_denom()
    return flint.fmpq_mat(xn * yn) / (xd * yd)


@lru_cache(maxsize=None)
def modular_setup(order: int, index: int = 0) -> tuple[int, int]:
    """A prime l = 1 mod order below 2^62 and a primitive order-th root of unity mod l."""
    m = max(order, 1)
    k = ((1 << 62) - 1) // m
    found = -1
    while True:
        ell = k * m + 1
        if ell % 2 and is_prime_word(ell):
            found += 1
            if found == index:
                break
        k -= 1
    # primitive m-th root: g^((l-1)/m) for g generating enough
    for g in range(2, 1000):
        w = pow(g, (ell - 1) // m, ell)
        if all(pow(w, m // q, ell) != 1 for q in prime_divisors(m)) if m > 1 else True:
            return ell, w
    raise LinearAlgebraError("no root of unity found")


def is_prime_word(n: int) -> bool:
    # deterministic Miller-Rabin for n < 3.3e24
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for p in small:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class KMat:
    __slots__ = ("parts", "order", "nrows", "ncols")

    def __init__(self, parts: Sequence[flint.fmpq_mat], order: int):
        phi = euler_phi(order)
        if len(parts) != phi:
            raise ValueError("wrong number of coordinate matrices")
        self.parts = tuple(parts)
        self.order = order
        self.nrows = parts[0].nrows()
        self.ncols = parts[0].ncols()

    @property
    def phi(self) -> int:
        return len(self.parts)

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    @classmethod
    def zero(cls, r: int, c: int, order: int) -> "KMat":
        return cls([_zero_mat(r, c) for _ in range(euler_phi(order))], order)

    @classmethod
    def identity(cls, n: int, order: int) -> "KMat":
        parts = [_zero_mat(n, n) for _ in range(euler_phi(order))]
        for i in range(n):
            parts[0][i, i] = 1
        return cls(parts, order)

    @classmethod
    def from_entries(cls, rows: Sequence[Sequence], order: int | None = None, ncols: int | None = None) -> "KMat":
        if order is None:
            order = 1
            for row in rows:
                for x in row:
                    if isinstance(x, CycloElem):
                        order = lcm(order, x.order)
        phi = euler_phi(order)
        r = len(rows)
        c = len(rows[0]) if rows else (ncols or 0)
        flat = [[flint.fmpq(0)] * (r * c) for _ in range(phi)]
        for i, row in enumerate(rows):
            for j, x in enumerate(row):
                if isinstance(x, CycloElem):
                    if x.order != order:
                        x = x.embed(order)
                    for t, a in enumerate(x.poly.coeffs()):
                        flat[t][i * c + j] = a
                elif x:
                    flat[0][i * c + j] = fmpq(x)
        return cls([flint.fmpq_mat(r, c, f) for f in flat], order)

    @classmethod
    def from_flat(cls, flats: Sequence[list], r: int, c: int, order: int) -> "KMat":
        return cls([flint.fmpq_mat(r, c, f) for f in flats], order)

    def entry(self, i: int, j: int) -> CycloElem:
        return CycloElem._wrap(flint.fmpq_poly([p[i, j] for p in self.parts]), self.order)

    def to_entries(self) -> list[list[CycloElem]]:
        flats = [p.entries() for p in self.parts]
        c = self.ncols
        out = []
        for i in range(self.nrows):
            out.append(
                [
                    CycloElem._wrap(flint.fmpq_poly([f[i * c + j] for f in flats]), self.order)
                    for j in range(c)
                ]
            )
        return out

    def row(self, i: int) -> list[CycloElem]:
        return [self.entry(i, j) for j in range(self.ncols)]

    def embed(self, order: int) -> "KMat":
        if order == self.order:
            return self
        from .arith import embedding_matrix

        mat = embedding_matrix(self.order, order)
        phi_big = euler_phi(order)
        parts = [_zero_mat(self.nrows, self.ncols) for _ in range(phi_big)]
        for i, src in enumerate(self.parts):
            for j, e in enumerate(mat[i]):
                if e:
                    parts[j] = parts[j] + src * e
        return KMat(parts, order)

    def _aligned(self, other: "KMat") -> tuple["KMat", "KMat"]:
        if self.order == other.order:
            return self, other
        m = lcm(self.order, other.order)
        return self.embed(m), other.embed(m)

    def __add__(self, other: "KMat") -> "KMat":
        a, b = self._aligned(other)
        return KMat([x + y for x, y in zip(a.parts, b.parts)], a.order)

    def __sub__(self, other: "KMat") -> "KMat":
        a, b = self._aligned(other)
        return KMat([x - y for x, y in zip(a.parts, b.parts)], a.order)

    def __neg__(self) -> "KMat":
        return KMat([-x for x in self.parts], self.order)

    def __matmul__(self, other: "KMat") -> "KMat":
        a, b = self._aligned(other)
        phi = a.phi
        if phi == 1:
            return KMat([_qmul(a.parts[0], b.parts[0])], a.order)
        table = zeta_reduction_table(a.order)
        raw = [None] * (2 * phi - 1)
        for s, x in enumerate(a.parts):
            for t, y in enumerate(b.parts):
                prod = _qmul(x, y)
                raw[s + t] = prod if raw[s + t] is None else raw[s + t] + prod
        parts = [_zero_mat(a.nrows, b.ncols) for _ in range(phi)]
        for e, mat in enumerate(raw):
            if mat is None:
                continue
            for t, coef in enumerate(table[e]):
                if coef:
                    parts[t] = parts[t] + mat * coef
        return KMat(parts, a.order)

    def scale(self, c) -> "KMat":
        c = as_cyclo(c, self.order)
        if c.order != self.order:
            return self.embed(c.order).scale(c)
        return self._scale(c)

    def _scale(self, c: CycloElem) -> "KMat":
        phi = self.phi
        table = zeta_reduction_table(self.order)
        parts = [_zero_mat(self.nrows, self.ncols) for _ in range(phi)]
        for s, a in enumerate(c.poly.coeffs()):
            if not a:
                continue
            for t, x in enumerate(self.parts):
                for u, coef in enumerate(table[s + t]):
                    if coef:
                        parts[u] = parts[u] + x * (a * coef)
        return KMat(parts, self.order)

    def transpose(self) -> "KMat":
        return KMat([p.transpose() for p in self.parts], self.order)

    def take_columns(self, cols: Sequence[int]) -> "KMat":
        c = self.ncols
        out = []
        for p in self.parts:
            f = p.entries()
            out.append(flint.fmpq_mat(self.nrows, len(cols), [f[i * c + j] for i in range(self.nrows) for j in cols]))
        return KMat(out, self.order)

    def take_rows(self, rows: Sequence[int]) -> "KMat":
        c = self.ncols
        out = []
        for p in self.parts:
            f = p.entries()
            out.append(flint.fmpq_mat(len(rows), c, [f[i * c + j] for i in rows for j in range(c)]))
        return KMat(out, self.order)

    def column_window(self, start: int, stop: int) -> "KMat":
        return self.take_columns(range(start, stop))

    def stack(self, other: "KMat") -> "KMat":
        a, b = self._aligned(other)
        if a.nrows == 0:
            return b
        if b.nrows == 0:
            return a
        return KMat(
            [flint.fmpq_mat(a.nrows + b.nrows, a.ncols, x.entries() + y.entries()) for x, y in zip(a.parts, b.parts)],
            a.order,
        )

    def is_zero(self) -> bool:
        return all(all(e == 0 for e in p.entries()) for p in self.parts)

    def first_nonzero_column(self) -> int | None:
        best = None
        c = self.ncols
        for p in self.parts:
            for idx, e in enumerate(p.entries()):
                if e != 0:
                    j = idx % c
                    if best is None or j < best:
                        best = j
        return best

    def __eq__(self, other):
        if not isinstance(other, KMat):
            return NotImplemented
        a, b = self._aligned(other)
        return a.shape == b.shape and all(x == y for x, y in zip(a.parts, b.parts))

    # -- reduction modulo a prime
    def reduce_mod(self, index: int = 0) -> flint.nmod_mat:
        ell, w = modular_setup(self.order, index)
        out = flint.nmod_mat(self.nrows, self.ncols, ell)
        wt = 1
        for p in self.parts:
            num, den = p.numer_denom()
            den = int(den) % ell
            if den == 0:
                raise LinearAlgebraError("denominator divisible by the auxiliary prime")
            scale = wt * pow(den, -1, ell) % ell
            out = out + flint.nmod_mat(num, ell) * scale
            wt = wt * w % ell
        return out

    # -- restriction of scalars
    def times_zeta_power(self, a: int) -> "KMat":
        if a == 0:
            return self
        return self._scale(CycloElem.zeta(self.order, a))

    def restrict_scalars(self) -> flint.fmpq_mat:
        """Rational matrix on coordinates ordered (t, i): coordinate t of entry i."""
        phi = self.phi
        if phi == 1:
            return self.parts[0]
        r, c = self.nrows, self.ncols
        blocks = [self.times_zeta_power(a).parts for a in range(phi)]
        flat = []
        for a in range(phi):
            rows_a = [blk.entries() for blk in blocks[a]]
            for i in range(r):
                for b in range(phi):
                    flat.extend(rows_a[b][i * c : (i + 1) * c])
        return flint.fmpq_mat(phi * r, phi * c, flat)

    @classmethod
    def from_restricted(cls, big: flint.fmpq_mat, order: int) -> "KMat":
        """Inverse of ``restrict_scalars`` for a matrix of a K-linear map."""
        phi = euler_phi(order)
        r, c = big.nrows() // phi, big.ncols() // phi
        flat = big.entries()
        width = phi * c
        parts = []
        for b in range(phi):
            parts.append(flint.fmpq_mat(r, c, [flat[i * width + b * c + j] for i in range(r) for j in range(c)]))
        return cls(parts, order)

    @classmethod
    def from_restricted_rows(cls, vecs: flint.fmpq_mat, order: int) -> "KMat":
        """K-vectors whose coordinates (t, j) are the rows of ``vecs``."""
        phi = euler_phi(order)
        n, width = vecs.nrows(), vecs.ncols()
        c = width // phi
        flat = vecs.entries()
        parts = []
        for b in range(phi):
            parts.append(flint.fmpq_mat(n, c, [flat[i * width + b * c + j] for i in range(n) for j in range(c)]))
        return cls(parts, order)

    def __repr__(self):
        return f"KMat({self.nrows}x{self.ncols} over Q(zeta_{self.order}))"


# ------------------------------------------------------------ rank profiles

def _mod_pivots(mat: flint.nmod_mat) -> list[int]:
    red, rank = mat.rref()
    c = mat.ncols()
    flat = red.entries()
    pivots = []
    for i in range(rank):
        for j in range(c):
            if int(flat[i * c + j]):
                pivots.append(j)
                break
    return pivots


def pivot_columns(a: KMat, index: int = 0) -> list[int]:
    if a.nrows == 0 or a.ncols == 0:
        return []
    return _mod_pivots(a.reduce_mod(index))


def rank_profile(a: KMat, index: int = 0) -> tuple[list[int], list[int]]:
    """Row set J and column set I with a[J, I] invertible and |I| = rank."""
    cols = pivot_columns(a, index)
    if not cols:
        return [], []
    rows = _mod_pivots(a.take_columns(cols).reduce_mod(index).transpose())
    return rows, cols


def _column_restriction(a: KMat) -> flint.fmpq_mat:
    # matrix of x -> a x on column vectors, coordinates ordered (t, i)
    if a.phi == 1:
        return a.parts[0]
    return a.transpose().restrict_scalars().transpose()


def solve_right(a: KMat, b: KMat) -> KMat:
    """X with a X = b for square invertible a."""
    if a.nrows != a.ncols:
        raise LinearAlgebraError("solve_right needs a square matrix")
    a, b = a._aligned(b)
    n, c = a.nrows, b.ncols
    if n == 0:
        return KMat.zero(0, c, a.order)
    stacked = flint.fmpq_mat(n * a.phi, c, [x for p in b.parts for x in p.entries()])
    try:
        sol = _column_restriction(a).solve(stacked)
    except ZeroDivisionError as exc:
        raise LinearAlgebraError("singular matrix") from exc
    flat = sol.entries()
    return KMat([flint.fmpq_mat(n, c, flat[t * n * c : (t + 1) * n * c]) for t in range(a.phi)], a.order)


def inverse(a: KMat) -> KMat:
    if a.nrows != a.ncols:
        raise LinearAlgebraError("inverse of a non-square matrix")
    return solve_right(a, KMat.identity(a.nrows, a.order))


def solve_left(a: KMat, b: KMat) -> KMat:
    """X with X a = b for square invertible a."""
    return solve_right(a.transpose(), b.transpose()).transpose()


def echelon(rows: KMat) -> tuple[KMat, list[int]]:
    """Reduced echelon form of the row space: (basis, pivot columns).

    Rows need not be independent; the basis has rank many rows.
    """
    if rows.nrows == 0:
        return rows, []
    for index in range(3):
        sel_rows, cols = rank_profile(rows, index)
        if not cols:
            if rows.is_zero():
                return KMat.zero(0, rows.ncols, rows.order), []
            continue
        sub = rows.take_rows(sel_rows)
        basis = solve_right(sub.take_columns(cols), sub)
        # the discarded rows must lie in the span
        rest = [i for i in range(rows.nrows) if i not in set(sel_rows)]
        if rest:
            other = rows.take_rows(rest)
            resid = other - other.take_columns(cols) @ basis
            if not resid.is_zero():
                continue
        return basis, cols
    raise LinearAlgebraError("modular rank profile kept disagreeing with exact rank")


def left_kernel(a: KMat) -> KMat:
    """Basis (as rows) of {x : x a = 0}."""
    r = a.nrows
    if r == 0:
        return KMat.zero(0, 0, a.order)
    if a.ncols == 0 or a.is_zero():
        return KMat.identity(r, a.order)
    for index in range(3):
        rows, cols = rank_profile(a, index)
        free = [i for i in range(r) if i not in set(rows)]
        if not free:
            return KMat.zero(0, r, a.order)
        core = a.take_rows(rows).take_columns(cols)
        rhs = a.take_rows(free).take_columns(cols)
        coeffs = -solve_left(core, rhs)  # len(free) x len(rows)
        phi = a.phi
        # assemble kernel vectors
        parts = []
        pos_rows = {j: k for k, j in enumerate(rows)}
        pos_free = {j: k for k, j in enumerate(free)}
        for t in range(phi):
            flat = coeffs.parts[t].entries()
            width = len(rows)
            data = []
            for fi in range(len(free)):
                for j in range(r):
                    if j in pos_rows:
                        data.append(flat[fi * width + pos_rows[j]])
                    elif t == 0 and pos_free[j] == fi:
                        data.append(flint.fmpq(1))
                    else:
                        data.append(flint.fmpq(0))
            parts.append(flint.fmpq_mat(len(free), r, data))
        ker = KMat(parts, a.order)
        if (ker @ a).is_zero():
            return ker
    raise LinearAlgebraError("kernel verification failed")


def kmat_charpoly(a: KMat) -> Poly:
    """Characteristic polynomial over K."""
    if a.phi == 1:
        return Poly.from_fmpq_poly(a.parts[0].charpoly()).embed(a.order)
    return charpoly(a.to_entries(), a.order)


def res_charpoly(a: KMat) -> flint.fmpq_poly:
    """Characteristic polynomial over Q of the restriction of scalars."""
    if a.nrows == 0:
        return flint.fmpq_poly([1])
    return a.restrict_scalars().charpoly()


def poly_eval_matrix(coeffs: Sequence, mat: flint.fmpq_mat) -> flint.fmpq_mat:
    """Horner evaluation of a rational polynomial at a square rational matrix."""
    n = mat.nrows()
    ident = flint.fmpq_mat(n, n)
    for i in range(n):
        ident[i, i] = 1
    acc = flint.fmpq_mat(n, n)
    for c in reversed(list(coeffs)):
        acc = acc * mat + ident * c
    return acc


def q_nullspace_rows(mat: flint.fmpq_mat) -> flint.fmpq_mat:
    """Rows spanning {x : x mat = 0} over Q."""
    n = mat.nrows()
    num, _ = mat.numer_denom()
    ker, nullity = num.transpose().nullspace()
    rows = []
    kf = ker.entries()
    kc = ker.ncols()
    for j in range(nullity):
        rows.append([kf[i * kc + j] for i in range(n)])
    if not rows:
        return flint.fmpq_mat(0, n)
    return flint.fmpq_mat(len(rows), n, [flint.fmpq(x) for r in rows for x in r])
