import random
from fractions import Fraction

import pytest

import oracle
from halfwt.arith import (
    CycloElem,
    Poly,
    divisors,
    euler_phi,
    factorint,
    kronecker,
    moebius,
    newton_polygon,
    padic_valuation,
    pure_slope_factor,
    slope_factors,
    squarefree_part,
)


def test_factorint_and_divisors():
    assert factorint(360) == ((2, 3), (3, 2), (5, 1))
    assert divisors(12) == [1, 2, 3, 4, 6, 12]
    assert [euler_phi(n) for n in (1, 9, 12, 97)] == [1, 6, 4, 96]
    assert [moebius(n) for n in (1, 6, 12, 30)] == [1, 1, 0, -1]


@pytest.mark.parametrize("d", [-3, -4, 5, 8, -7, 12, -15])
def test_kronecker_against_jacobi(d):
    for n in range(1, 120):
        assert kronecker(d, n) == oracle.kronecker(d, n), (d, n)


def test_cyclotomic_field_basics():
    z = CycloElem.zeta(3)
    assert z**3 == 1
    assert z * z + z + 1 == 0
    w = CycloElem.zeta(12)
    assert w**6 == -1
    assert (2 + w).inverse() * (2 + w) == 1
    assert CycloElem.zeta(4).norm() == 1


def test_padic_valuation():
    assert padic_valuation(Fraction(50, 3), 5) == 2
    assert padic_valuation(Fraction(3, 25), 5) == -2
    assert padic_valuation(0, 5) == float("inf")


def _random_fredholm(rng, p, n):
    # p-integral coefficients, so every reciprocal root has slope >= 0
    dens = [d for d in (1, 2, 3, 7, 11) if d % p]
    c = [Fraction(1)]
    for _ in range(n):
        c.append(Fraction(rng.randint(-60, 60) * p ** rng.randint(0, 6), rng.choice(dens)))
    if c[-1] == 0:
        c[-1] = Fraction(p ** rng.randint(0, 8))
    return Poly(c)


def test_newton_polygon_matches_naive_hull():
    rng = random.Random(11)
    for _ in range(60):
        p = rng.choice([2, 3, 5, 7])
        f = _random_fredholm(rng, p, rng.randint(1, 10))
        got = list(newton_polygon(f, p).slopes)
        assert got == oracle.newton_polygon_slopes(f.rational_coeffs(), p)


def test_pure_slope_factor_exact_split():
    # (1 - 5T)(1 - 25T)(1 - T): three rational slopes
    f = Poly([1, -5]) * Poly([1, -25]) * Poly([1, -1])
    assert pure_slope_factor(f, 5, 1) == Poly([1, -5])
    assert pure_slope_factor(f, 5, 2) == Poly([1, -25])
    assert pure_slope_factor(f, 5, 0) == Poly([1, -1])
    assert pure_slope_factor(f, 5, 3) == Poly.one()


def test_mixed_slope_factor_is_padic():
    # irreducible over Q with slopes 0 and 1
    f = Poly([1, 1, 5])
    parts = slope_factors(f, 5)
    assert set(parts) == {0, 1}
    for g in parts.values():
        assert g.padic_precision == (5, 60)
    prod = parts[Fraction(0)] * parts[Fraction(1)]
    for i in range(3):
        assert padic_valuation((prod[i] - f[i]).to_fraction(), 5) >= 60


def test_squarefree_against_sympy():
    rng = random.Random(5)
    for _ in range(30):
        pieces = [Poly([rng.randint(-5, 5) or 1, rng.randint(1, 4)]) for _ in range(rng.randint(1, 3))]
        f = Poly.one()
        for g in pieces:
            f = f * g ** rng.randint(1, 3)
        got = squarefree_part(f).monic().rational_coeffs()
        assert got == oracle.sqf_part(f.rational_coeffs())


def test_squarefree_normalisation():
    f = Poly([1, -2, 1])  # (1 - T)^2
    assert squarefree_part(f) == Poly([1, -1])
    with pytest.raises(ValueError):
        squarefree_part(Poly([]))
