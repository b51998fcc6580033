from fractions import Fraction

import pytest

import oracle
from halfwt.arith import Poly
from halfwt.dirichlet import DirichletChar, characters_mod, chi_minus4, kronecker_character, teichmuller
from halfwt.hecke import (
    HeckeError,
    canonical_name,
    charpoly,
    check_commuting,
    diamond,
    eigensystems,
    eigensystem_from_form,
    hecke_operator,
    relabel_integral,
    required_precision,
    twist_character,
    up_half,
)
from halfwt.qseries import theta_psi
from halfwt.spaces import InsufficientPrecision, SpanDeficiency, build_space


def triv(m):
    return DirichletChar.trivial(m)


def _space_for(k2, level, eps, primes):
    probe = build_space(k2, level, eps)
    step = max(ell * ell if k2 % 2 else ell for ell in primes)
    return build_space(k2, level, eps, True, required_precision(probe, step))


def test_t_ell_on_level_11_matches_eta_coefficients():
    S = _space_for(4, 11, triv(11), [2, 3, 5, 7, 11])
    a = oracle.eta_product({1: 2, 11: 2}, 20)
    for ell in (2, 3, 5, 7, 11):
        m = hecke_operator(S, ell).matrix
        assert m.entry(0, 0) == a[ell]


def test_fredholm_against_sympy():
    S = _space_for(4, 30, triv(30), [7, 11])
    for ell in (7, 11):
        op = hecke_operator(S, ell)
        rows = [[c.to_fraction() for c in r] for r in op.matrix.to_entries()]
        got = charpoly(op, fredholm=True).rational_coeffs()
        assert got == oracle.fredholm_det(rows)
    # the level 15 form occurs twice among the oldforms
    a7 = oracle.eta_product({1: 1, 3: 1, 5: 1, 15: 1}, 10)[7]
    assert (Poly([-a7, 1]) ** 2).divides(charpoly(hecke_operator(S, 7)))


def test_span_deficiency_is_reported():
    with pytest.raises(SpanDeficiency):
        build_space(4, 37, triv(37), True)


@pytest.mark.parametrize("k2,level", [(4, 30), (8, 15), (3, 60), (5, 20)])
def test_hecke_operators_commute(k2, level):
    p = 5
    for eps in characters_mod(level):
        if not eps.is_even():
            continue
        primes = [ell for ell in (3, 7, 5) if ell != 3 or level % 3]
        S = _space_for(k2, level, eps, primes)
        if S.dimension == 0:
            continue
        ops = [hecke_operator(S, ell) for ell in primes]
        check_commuting(ops)
        assert all(op.kind()[1] in primes for op in ops)
        if level % p == 0:
            assert ops[-1].label.startswith("U")


def test_precision_is_checked():
    S = build_space(4, 11, triv(11))
    with pytest.raises(InsufficientPrecision):
        hecke_operator(S, 97)


def test_diamond_is_the_character_scalar():
    eps = DirichletChar.from_label("60:1,0,1")
    S = build_space(3, 60, eps)
    for d in (7, 11, 13, 17):
        m = diamond(S, d).matrix
        assert m == m.scale(1) and m.entry(0, 0) == eps(d)
    # the tame part of <d> sees only the mod-4 character
    assert diamond(S, 7, "tame", 5).matrix.entry(0, 0) == chi_minus4()(7)
    with pytest.raises(HeckeError):
        diamond(S, 5)


def test_twist_character():
    for p in (3, 5, 7, 11, 13):
        t = twist_character(p)
        for d in range(1, 200):
            if d % (4 * p) and d % 2 and d % p:
                assert t(d) == oracle.kronecker(p, d)


def test_up_half_rejects_wrong_target():
    eps = DirichletChar.from_label("20:1,1")
    S = build_space(5, 20, eps)
    with pytest.raises(HeckeError):
        up_half(S, S, 5)


def test_names():
    assert canonical_name("T(7^2)") == canonical_name("T(7)") == "T7"
    assert relabel_integral("U(5^2)") == "U(5)"


def test_theta_psi_eigenvalues_against_oracle():
    psi = kronecker_character(-3)
    prec = 13 * 13 * 60
    th = theta_psi(psi, prec)
    eps = (psi * chi_minus4()).extend(180)
    sysm = eigensystem_from_form(th, 3, 180, eps, [7, 11, 13], p=5)
    a = oracle.theta_psi_coeffs(-3, prec)
    eps_int = lambda n: oracle.kronecker(12, n)  # noqa: E731
    for ell in (7, 11, 13):
        image = oracle.t_ellsq_half(a, ell, 1, eps_int, 60)
        lam = Fraction(image[1], a[1])
        assert image == [lam * x for x in a[:60]]
        assert sysm.value(f"T({ell}^2)") == lam


def test_eigensystems_split_a_space():
    S = _space_for(4, 30, triv(30), [7, 11])
    ops = [hecke_operator(S, 7), hecke_operator(S, 11)]
    systems = eigensystems(S, ops, seed=1)
    a = oracle.eta_product({1: 1, 3: 1, 5: 1, 15: 1}, 12)
    old = [s for s in systems if (s.value("T(7)"), s.value("T(11)")) == (a[7], a[11])]
    assert len(old) == 1 and old[0].multiplicity == 2
    assert sum(s.degree * s.multiplicity for s in systems) == S.dimension
    again = eigensystems(S, ops, seed=1)
    assert [s.to_json() for s in again] == [s.to_json() for s in systems]


def test_eigensystems_with_a_teichmuller_twist():
    eps = (DirichletChar.trivial(4).extend(20) * teichmuller(5).extend(20) ** 2)
    S = _space_for(4, 10, eps.restrict(10) if eps.conductor() <= 10 else eps, [3, 5])
    ops = [hecke_operator(S, 3), hecke_operator(S, 5)]
    systems = eigensystems(S, ops, p=5)
    assert sum(s.degree * s.multiplicity for s in systems) <= S.dimension
