import pytest

import oracle
from halfwt.arith import primes_up_to
from halfwt.cli import theta_lift
from halfwt.dirichlet import DirichletChar, chi_minus4, kronecker_character
from halfwt.hecke import eigensystem_from_form
from halfwt.qseries import QSeries, theta_psi
from halfwt.shimura import (
    LiftError,
    lift_character,
    lift_coefficients,
    lift_series,
    recursion_defects,
    sh_on_points,
    source_character,
)

PSI = kronecker_character(-3)


def test_lift_character_for_theta_psi():
    eps = (PSI * chi_minus4()).extend(36)
    assert lift_character(eps, 1) == PSI
    assert lift_character(eps, 1, primitive=False).modulus == 36


def test_lift_of_theta_psi_is_e_psi():
    prec = 80
    th = theta_psi(PSI, (prec - 1) ** 2 + 1)
    eps = (PSI * chi_minus4()).extend(36)
    A = lift_coefficients(th, 3, eps, prec)
    assert [A[n].to_fraction() for n in range(1, prec)] == oracle.e_psi_coeffs(-3, prec)[1:]
    assert recursion_defects(A, 2, PSI * PSI, 9) == []


def test_imprimitive_lift_drops_level_primes():
    prec = 30
    th = theta_psi(PSI, (prec - 1) ** 2 + 1)
    eps = (PSI * chi_minus4()).extend(180)
    A = lift_coefficients(th, 3, eps, prec, primitive=False)
    # only d prime to 30 contribute to the divisor sum
    for n in range(1, prec):
        want = sum(oracle.kronecker(-3, d) * oracle.kronecker(-3, n // d) * (n // d) for d in range(1, n + 1)
                   if n % d == 0 and d % 2 and d % 3 and d % 5)
        assert A[n] == want


def test_lift_guards():
    th = theta_psi(PSI, 50)
    eps = (PSI * chi_minus4()).extend(36)
    with pytest.raises(LiftError):
        lift_coefficients(th, 3, eps, 20, t=4)
    with pytest.raises(Exception):
        lift_coefficients(th, 3, eps, 20)  # needs 362 coefficients
    with pytest.raises(LiftError):
        lift_coefficients(QSeries.zero(50), 3, eps, 5)


def test_recursion_defects_detects_breakage():
    prec = 40
    th = theta_psi(PSI, (prec - 1) ** 2 + 1)
    eps = (PSI * chi_minus4()).extend(36)
    A = lift_coefficients(th, 3, eps, prec)
    coeffs = A.coefficients()
    coeffs[6] = coeffs[6] + 1
    broken = QSeries(coeffs, prec, A.order)
    assert (6, "multiplicativity") in recursion_defects(broken, 2, PSI * PSI, 9)


def test_sh_on_points_relabels():
    th = theta_psi(PSI, 13 * 13 * 40)
    eps = (PSI * chi_minus4()).extend(180)
    src = eigensystem_from_form(th, 3, 180, eps, [2, 5, 7], p=5)
    tgt = sh_on_points(src)
    assert tgt.side == "integral"
    assert {k for k, _ in tgt.eigenvalues} == {"U(2)", "U(5)", "T(7)"}
    assert tgt.slope == src.slope == 1


def test_eigen_lift_of_theta_psi_is_the_p_stabilization():
    prec = 60
    rec = theta_lift(PSI, 5, prec)
    assert rec.level == 90
    assert rec.verified == {"eigen_match": True, "membership": True, "recursion": True}
    want = oracle.p_stabilized(oracle.e_psi_coeffs(-3, prec), 5, oracle.kronecker(-3, 5))
    assert [rec.target_qexp[n].to_fraction() for n in range(1, prec)] == want[1:]


def test_eigen_lift_at_a_bad_tame_prime():
    # alpha = psi(2) * 2 at l = 2: A_2 = alpha + psi(2), A_4 = alpha^2 + psi(2) A_2
    th = theta_psi(PSI, 29 * 29 * 4)
    eps = (PSI * chi_minus4()).extend(180)
    src = eigensystem_from_form(th, 3, 180, eps, primes_up_to(29), p=5)
    assert source_character(src).same_on_units(eps)
    A = lift_series(src, 90, DirichletChar.trivial(90), 30)
    assert A[2] == -3 and A[4] == 7 and A[8] == -15
    assert A[5] == -5 and A[25] == 25


def test_two_constructions_agree_away_from_p():
    prec = 60
    rec = theta_lift(PSI, 5, prec)
    th = theta_psi(PSI, (prec - 1) ** 2 + 1)
    A = lift_coefficients(th, 3, (PSI * chi_minus4()).extend(36), prec)
    assert all(rec.target_qexp[n] == A[n] for n in range(1, prec) if n % 5)
    assert any(rec.target_qexp[n] != A[n] for n in range(1, prec) if n % 5 == 0)
