"""Hecke-type operators acting on single q-expansions."""

from __future__ import annotations

from .arith import kronecker
from .dirichlet import DirichletChar, chi_minus4
from .qseries import QSeries, u_ell, v_ell


def t_ell_series(f: QSeries, ell: int, k: int, eps: DirichletChar) -> QSeries:
    """Integral weight T_ell: a_n -> a_{ell n} + eps(ell) ell^(k-1) a_{n/ell}."""
    head = u_ell(f, ell)
    c = eps(ell)
    if c.is_zero():
        return head
    tail = v_ell(f.truncate(-(-head.prec // ell)), ell).truncate(head.prec)
    return head + tail.scale(c * ell ** (k - 1))


def t_ellsq_series(f: QSeries, ell: int, k2: int, eps: DirichletChar) -> QSeries:
    """Half-integral weight T_{ell^2} for weight k2/2 = lambda + 1/2."""
    lam = (k2 - 1) // 2
    out = u_ell(f, ell * ell)
    prec = out.prec
    e1 = eps(ell)
    if not e1.is_zero():
        c1 = e1 * chi_minus4()(ell) ** lam * ell ** (lam - 1)
        legendre = [kronecker(n, ell) for n in range(prec)]
        out = out + f.truncate(prec).map_coefficients(legendre).scale(c1)
        c2 = e1 * e1 * ell ** (2 * lam - 1)
        low = f.truncate(-(-prec // (ell * ell)))
        out = out + v_ell(low, ell * ell).truncate(prec).scale(c2)
    return out
