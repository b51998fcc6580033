"""Naive reference computations used to cross-check the package.

Nothing here imports halfwt: values are produced with plain integers,
Fractions and sympy so that agreement is evidence rather than tautology.
"""

from __future__ import annotations

from fractions import Fraction

import sympy
from sympy.functions.combinatorial.numbers import jacobi_symbol


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d/n) for n >= 1, built from Jacobi symbols."""
    if n == 0:
        return 1 if abs(d) == 1 else 0
    out = 1
    while n % 2 == 0:
        n //= 2
        if d % 2 == 0:
            return 0
        out *= 1 if d % 8 in (1, 7) else -1
    if n == 1:
        return out
    return out * int(jacobi_symbol(d % n, n))


def sigma(n: int, k: int = 1) -> int:
    return sum(d**k for d in sympy.divisors(n))


def theta_psi_coeffs(d: int, prec: int) -> list[int]:
    """sum_{n >= 1} (d/n) n q^(n^2)."""
    a = [0] * prec
    n = 1
    while n * n < prec:
        a[n * n] = kronecker(d, n) * n
        n += 1
    return a


def e_psi_coeffs(d: int, prec: int) -> list[int]:
    """a_n = psi(n) sigma(n) for the quadratic character psi = (d/.)."""
    return [0] + [kronecker(d, n) * sigma(n) for n in range(1, prec)]


def p_stabilized(a: list[int], p: int, beta: int) -> list[int]:
    """f - beta V_p f."""
    return [a[n] - (beta * a[n // p] if n % p == 0 else 0) for n in range(len(a))]


def eta_product(exps: dict[int, int], prec: int) -> list[int]:
    """q-expansion of prod eta(m z)^e for an integral exponent of q."""
    shift = Fraction(sum(m * e for m, e in exps.items()), 24)
    assert shift.denominator == 1
    series = [0] * prec
    series[0] = 1
    for m, e in exps.items():
        prod = [0] * prec
        prod[0] = 1
        k = 1
        while m * k < prec:
            # multiply by (1 - q^(mk))
            step = m * k
            prod = [prod[i] - (prod[i - step] if i >= step else 0) for i in range(prec)]
            k += 1
        if e < 0:
            prod = _inverse(prod)
        for _ in range(abs(e)):
            series = _mul(series, prod)
    s = int(shift)
    return ([0] * s + series)[:prec]


def _mul(a: list[int], b: list[int]) -> list[int]:
    n = len(a)
    out = [0] * n
    for i, x in enumerate(a):
        if x:
            for j in range(n - i):
                out[i + j] += x * b[j]
    return out


def _inverse(a: list[int]) -> list[int]:
    n = len(a)
    out = [0] * n
    out[0] = Fraction(1, a[0])
    for k in range(1, n):
        out[k] = -sum(a[i] * out[k - i] for i in range(1, k + 1)) / a[0]
    return [int(x) for x in out]


def t_ellsq_half(a: list[int], ell: int, lam: int, eps, prec: int) -> list[int]:
    """T(ell^2) on weight lam + 1/2 and nebentypus eps (a function on integers)."""
    out = []
    for n in range(prec):
        v = a[ell * ell * n] if ell * ell * n < len(a) else None
        if v is None:
            break
        c = eps(ell) * kronecker((-1) ** lam * n, ell) * ell ** (lam - 1) * a[n]
        if n % (ell * ell) == 0:
            c += eps(ell) ** 2 * ell ** (2 * lam - 1) * a[n // (ell * ell)]
        out.append(v + c)
    return out


def newton_polygon_slopes(coeffs: list[Fraction], p: int) -> list[Fraction]:
    """Slopes (with multiplicity) of the lower convex hull of (i, v_p(c_i))."""
    pts = [(i, _val(c, p)) for i, c in enumerate(coeffs) if c != 0]
    hull = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    slopes = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        slopes += [Fraction(y2 - y1, x2 - x1)] * (x2 - x1)
    return slopes


def _val(c: Fraction, p: int) -> int:
    c = Fraction(c)
    v = 0
    num, den = c.numerator, c.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def sqf_part(coeffs: list[Fraction]) -> list[Fraction]:
    """Monic squarefree part over Q, constant term first."""
    x = sympy.Symbol("x")
    f = sympy.Poly(list(reversed([sympy.Rational(c.numerator, c.denominator) for c in coeffs])), x, domain="QQ")
    g = f.sqf_part().monic()
    return [Fraction(int(c.p), int(c.q)) for c in reversed(g.all_coeffs())]


def fredholm_det(rows: list[list[Fraction]]) -> list[Fraction]:
    """det(1 - M T), constant term first."""
    n = len(rows)
    if n == 0:
        return [Fraction(1)]
    m = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in r] for r in rows])
    out = [Fraction(int(c.p), int(c.q)) for c in m.charpoly().all_coeffs()]
    while out and out[-1] == 0:
        out.pop()
    return out
