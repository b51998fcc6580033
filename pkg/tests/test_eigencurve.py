from dataclasses import replace
from fractions import Fraction

import pytest

from halfwt.arith import Poly, newton_polygon
from halfwt.dirichlet import DirichletChar, kronecker_character
from halfwt.eigencurve import (
    WeightPoint,
    check_divisibility,
    control_flag,
    default_grid,
    involution_on_systems,
    matching_primes,
    scan,
    spectral_slice,
)

CHI12 = kronecker_character(12).extend(36)


def test_weight_point_data():
    w = WeightPoint(2, 3, 5)
    assert w.component == 1
    assert w.half_weight == 5 and w.integral_weight == 4
    assert w.partner() == WeightPoint(2, 1, 5)
    assert w.partner().partner() == w
    assert WeightPoint(1, 7, 5).j == 3


def test_matching_primes_skip_level():
    assert matching_primes(3, 5, 3) == [7, 11, 13]
    assert matching_primes(1, 3, 2) == [5, 7]


@pytest.fixture(scope="module")
def theta_slices():
    w = WeightPoint(1, 0, 5)
    return spectral_slice(w, "half", 9, CHI12), spectral_slice(w, "integral", 9, CHI12)


def test_theta_slice_has_the_critical_factor(theta_slices):
    half, _ = theta_slices
    assert Poly([1, 5]).divides(half.fredholm)
    assert Fraction(1) in newton_polygon(half.fredholm_norm, 5).slopes


def test_slope_factors_multiply_back(theta_slices):
    for sl in theta_slices:
        prod = Poly.one()
        for f in sl.slope_factors.values():
            assert f.padic_precision is None
            prod = prod * f
        assert prod == sl.fredholm_norm
        assert sorted(sl.polygon.slopes) == list(sl.polygon.slopes)


def test_divisibility_and_negative_control(theta_slices):
    half, integral = theta_slices
    ok = check_divisibility(half, integral)
    assert ok.ok
    # pair the half slice with an integral slice of the wrong tame level
    other = spectral_slice(WeightPoint(1, 0, 5), "integral", 1, DirichletChar.trivial(4))
    bad = check_divisibility(half, other)
    assert not bad.ok
    assert bad.certificate.degree > 0
    assert not bad.certificate.divides(other.fredholm)


def test_zero_dimensional_slice():
    w = WeightPoint(1, 1, 5)
    sl = spectral_slice(w, "half", 1, DirichletChar.trivial(4))
    assert sl.dimension == 0 and sl.fredholm == Poly.one() and sl.polygon is None
    assert check_divisibility(sl, sl).ok


def test_control_flag_boundaries(theta_slices):
    from halfwt.hecke import EigenSystem

    base = EigenSystem("half", 1, 0, CHI12, 5, 1, Poly([0, 1]), (), Fraction(1))
    assert control_flag(base) == "critical"
    assert control_flag(replace(base, lam=2, slope=Fraction(0))) == "smallslope"
    assert control_flag(replace(base, slope=Fraction(3, 2))) == "largeslope"
    with pytest.raises(ValueError):
        control_flag(replace(base, slope=None))


def test_involution_is_an_involution():
    report = scan(default_grid(5, [2]), 1)
    systems = [s for pt in report.points for s in pt.half_systems]
    assert systems
    for s in systems:
        t = involution_on_systems(s, 5)
        assert t.j == (s.j + 2) % 4
        assert involution_on_systems(t, 5) == s


def test_empty_grid():
    report = scan([], 1)
    assert report.points == [] and report.divisibility_ok and report.invariants_ok


def test_scan_report_files_agree():
    report = scan(default_grid(3, [1]), 1)
    rows = report.csv_rows()
    assert len(rows) == sum(len(pt.half_systems) for pt in report.points)
    data = report.to_json()
    assert data["divisibility_ok"] and data["invariants_ok"]
    assert len(report.to_csv().splitlines()) == len(rows) + 1
