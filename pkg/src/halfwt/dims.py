"""Closed-form dimensions of spaces of modular forms with character.

Integral weight uses the Cohen-Oesterle formula.  Half-integral weight
(level divisible by 4, Shimura's theta multiplier) uses Riemann-Roch on
X0(N) with the cusp data computed from theta as an eta quotient, plus the
Serre-Stark basis of weight 1/2 for the duality correction in weight 3/2.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd

from .arith import CycloElem, divisors, factorint, prime_divisors
from .dirichlet import DirichletChar, kronecker_character, primitive_characters


class DimensionError(ValueError):
    pass


def gamma0_index(N: int) -> int:
    out = N
    for p in prime_divisors(N) if N > 1 else []:
        out = out // p * (p + 1)
    return out


def _lambda(r: int, s: int, p: int) -> int:
    if 2 * s <= r:
        if r % 2 == 0:
            h = r // 2
            return p**h + p ** (h - 1)
        return 2 * p ** ((r - 1) // 2)
    return 2 * p ** (r - s)


def _root_sum(chi: DirichletChar, N: int, poly) -> Fraction:
    total = CycloElem.from_rational(0, chi.value_order)
    for x in range(N):
        if poly(x) % N == 0:
            total = total + chi(x)
    if not total.is_rational():
        raise DimensionError("character sum over elliptic points is not rational")
    return total.to_fraction()


def _check_character(N: int, eps: DirichletChar) -> DirichletChar:
    if N % eps.modulus:
        raise DimensionError(f"character modulus {eps.modulus} does not divide the level {N}")
    return eps.extend(N)


def _co_terms(k: int, N: int, eps: DirichletChar) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """(index term, cusp term, elliptic-2 sum, elliptic-3 sum)."""
    f = eps.conductor()
    fac = dict(factorint(N))
    ffac = dict(factorint(f))
    prod = 1
    for p, r in fac.items():
        prod *= _lambda(r, ffac.get(p, 0), p)
    s2 = _root_sum(eps, N, lambda x: x * x + 1)
    s3 = _root_sum(eps, N, lambda x: x * x + x + 1)
    return Fraction(gamma0_index(N), 12), Fraction(prod, 2), s2, s3


def _eps_k(k: int) -> Fraction:
    if k % 2:
        return Fraction(0)
    return Fraction(1, 4) if k % 4 == 0 else Fraction(-1, 4)


def _mu_k(k: int) -> Fraction:
    return {0: Fraction(1, 3), 1: Fraction(0), 2: Fraction(-1, 3)}[k % 3]


def integral_dimension(k: int, N: int, eps: DirichletChar, cuspidal: bool) -> int:
    if k < 2:
        raise DimensionError("weight 1 is outside the range of the dimension formula")
    eps = _check_character(N, eps)
    if eps.parity() != (-1) ** k:
        return 0
    idx, cusp, s2, s3 = _co_terms(k, N, eps)
    if cuspidal:
        val = (k - 1) * idx - cusp + _eps_k(k) * s2 + _mu_k(k) * s3
        if k == 2 and eps.is_trivial():
            val += 1
    else:
        # duality with weight 2 - k uses the conjugate character; the sums are real
        val = (k - 1) * idx + cusp - _eps_k(2 - k) * s2 - _mu_k(2 - k) * s3
    if val.denominator != 1 or val < 0:
        raise DimensionError(f"non-integral dimension {val} for weight {k}, level {N}")
    return int(val)


# ------------------------------------------------------------ half-integral

def cusps_gamma0(N: int) -> list[tuple[int, int]]:
    """Representatives a/d of the cusps of Gamma0(N), one per class."""
    out = []
    for d in divisors(N):
        g = gcd(d, N // d)
        for r in range(g):
            if gcd(r, g) != 1 and g > 1:
                continue
            a = r if g > 1 else 1
            while gcd(a, d) != 1 or a == 0:
                a += g
            out.append((a, d))
    return out


def cusp_width(d: int, N: int) -> int:
    return N // gcd(d * d, N)


# theta(z) = eta(2z)^5 / (eta(z)^2 eta(4z)^2)
_THETA_ETA = {1: -2, 2: 5, 4: -2}


def theta_order(d: int, N: int) -> Fraction:
    """Order of theta at a cusp with denominator d, in the local parameter of X0(N)."""
    if N % 4:
        raise DimensionError("theta is a form on Gamma0(4)")
    s = sum(Fraction(gcd(d, delta) ** 2 * r, gcd(d, N // d) * d * delta) for delta, r in _THETA_ETA.items())
    return s * Fraction(N, 24)


def _frac(x: Fraction) -> Fraction:
    return x - (x.numerator // x.denominator)


def cusp_kappas(k2: int, N: int, eps: DirichletChar) -> list[Fraction]:
    """kappa_c in [0, 1) for weight k2/2, one per cusp of Gamma0(N)."""
    eps = _check_character(N, eps)
    out = []
    for a, d in cusps_gamma0(N):
        w = cusp_width(d, N)
        phase = eps.phase((1 + a * d * w) % N)
        if phase is None:
            raise DimensionError("stabilizer entry not coprime to the level")
        out.append(_frac(k2 * theta_order(d, N) + phase))
    return out


def theta_character(t: int) -> DirichletChar:
    """Nebentypus of theta(tz) in Shimura's normalization: d -> (4t/d)."""
    return kronecker_character(4 * t)


def weight_half_dimension(N: int, eps: DirichletChar) -> int:
    """dim M_{1/2}(N, eps) by counting Serre-Stark theta series."""
    eps = _check_character(N, eps)
    count = 0
    for r in range(1, N + 1):
        if N % (4 * r * r):
            continue
        for psi in primitive_characters(r):
            if not psi.is_even():
                continue
            for t in range(1, N // (4 * r * r) + 1):
                if N % (4 * r * r * t):
                    continue
                if (psi * theta_character(t)).extend(N) == eps:
                    count += 1
    return count


def half_integral_dimension(k2: int, N: int, eps: DirichletChar) -> int:
    """dim S_{k2/2}(Gamma0(N), eps) for odd k2 >= 3 and 4 | N."""
    if k2 % 2 == 0 or k2 < 3:
        raise DimensionError("half-integral weight needs odd k2 >= 3")
    if N % 4:
        raise DimensionError("half-integral level must be divisible by 4")
    eps = _check_character(N, eps)
    if not eps.is_even():
        return 0
    kappas = cusp_kappas(k2, N, eps)
    reg = sum(1 for x in kappas if x == 0)
    irr = sum(Fraction(1, 2) - x for x in kappas if x != 0)
    val = Fraction(k2 - 2, 2) * gamma0_index(N) / 12 - Fraction(reg, 2) + irr
    if k2 == 3:
        val += weight_half_dimension(N, eps.conj())
    if val.denominator != 1 or val < 0:
        raise DimensionError(f"non-integral dimension {val} for weight {k2}/2, level {N}")
    return int(val)


@lru_cache(maxsize=None)
def _cached(k2: int, N: int, label: str, cuspidal: bool) -> int:
    eps = DirichletChar.from_label(label)
    if k2 % 2 == 0:
        return integral_dimension(k2 // 2, N, eps, cuspidal)
    if not cuspidal:
        raise DimensionError("only cuspidal half-integral spaces are modelled")
    return half_integral_dimension(k2, N, eps)


def dimension_oracle(k2: int, N: int, eps: DirichletChar, cuspidal: bool = True) -> int:
    """Dimension of the weight k2/2 space of level N and character eps."""
    if k2 < 2 or (k2 % 2 == 1 and k2 < 3):
        raise DimensionError("weights 1/2 and below are outside the formula's range")
    if k2 == 2:
        raise DimensionError("weight 1 is outside the range of the dimension formula")
    return _cached(k2, N, eps.extend(N).label, cuspidal)
