import json

import pytest

import oracle
from halfwt.dims import DimensionError, dimension_oracle
from halfwt.dirichlet import DirichletChar, characters_mod, kronecker_character
from halfwt.qseries import QSeries, theta_psi
from halfwt.spaces import InsufficientPrecision, ModularFormSpace, NotMember, build_space, clear_memory_cache


def triv(m):
    return DirichletChar.trivial(m)


# classical tables: (2k or k2, level, cuspidal, dim)
KNOWN = [
    (4, 11, True, 1),
    (4, 37, True, 2),
    (4, 30, True, 3),
    (4, 30, False, 10),
    (8, 5, True, 1),
    (8, 5, False, 3),
    (24, 1, True, 1),
    (48, 1, False, 3),
    (9, 4, True, 1),
    (13, 4, True, 2),
    (3, 4, True, 0),
]


@pytest.mark.parametrize("k2,level,cusp,dim", KNOWN)
def test_dimension_formula_against_tables(k2, level, cusp, dim):
    assert dimension_oracle(k2, level, triv(level), cusp) == dim


def test_gamma1_13_weight_2():
    total = sum(dimension_oracle(4, 13, c) for c in characters_mod(13) if c.is_even())
    assert total == 2


def test_half_integral_eisenstein_not_modelled():
    with pytest.raises(DimensionError):
        dimension_oracle(5, 4, triv(4), cuspidal=False)


@pytest.mark.parametrize(
    "k,level,exps",
    [(2, 11, {1: 2, 11: 2}), (4, 5, {1: 4, 5: 4}), (12, 1, {1: 24})],
)
def test_eta_product_newforms(k, level, exps):
    S = build_space(2 * k, level, triv(level), True, 60)
    assert S.dimension == 1
    f = S.basis[0]
    want = oracle.eta_product(exps, 60)
    assert [f[n].to_fraction() for n in range(60)] == want


def test_dimension_of_built_spaces():
    for k2, level in [(4, 20), (4, 30), (3, 36), (5, 20), (3, 60)]:
        for c in characters_mod(level):
            if not c.is_even() or (k2 % 2 == 0 and c.value_order > 4):
                continue
            if k2 % 2 and dimension_oracle(k2, level, c) == 0:
                continue
            S = build_space(k2, level, c)
            assert S.dimension == dimension_oracle(k2, level, c), (k2, level, c.label)


def test_theta_psi_is_in_its_space():
    psi = kronecker_character(-3)
    eps = (psi * DirichletChar.from_label("4:1")).extend(36)
    S = build_space(3, 36, eps)
    assert S.contains(theta_psi(psi, S.prec))
    assert not S.contains(theta_psi(kronecker_character(-4), S.prec))


def test_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv("HALFWT_CACHE_DIR", str(tmp_path))
    clear_memory_cache()
    S = build_space(4, 30, triv(30), False)
    files = list(tmp_path.glob("space-*.json"))
    assert len(files) == 1
    clear_memory_cache()
    again = build_space(4, 30, triv(30), False)
    assert again.matrix == S.matrix
    data = json.loads(files[0].read_text())
    assert ModularFormSpace.from_json(data["space"]).matrix == S.matrix


def test_precision_guard():
    with pytest.raises(InsufficientPrecision):
        build_space(4, 11, triv(11), True, 1)
    S = build_space(4, 11, triv(11), True, 40)
    with pytest.raises(NotMember):
        S.coordinates(QSeries([0, 1], 40, 1))
