"""The Shimura lift at classical points.

Two constructions are provided.  ``lift_coefficients`` applies Shimura's
divisor-sum formula to a half-integral eigenform; ``lift_from_eigensystem``
builds the normalized integral-weight expansion from eigenvalues alone and
then checks that it lies in a given space.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from math import lcm
from typing import Sequence

from .arith import CycloElem, divisors, factorint, primes_up_to
from .dirichlet import DirichletChar, chi_minus4, kronecker_character, teichmuller
from .hecke import EigenSystem, canonical_name, hecke_operator, relabel_integral, required_precision
from .linalg import KMat
from .qseries import QSeries
from .spaces import InsufficientPrecision, ModularFormSpace, NotMember

log = logging.getLogger(__name__)


class LiftError(ValueError):
    pass


def _squarefree(t: int) -> bool:
    return all(e == 1 for _, e in factorint(t)) if t > 1 else t == 1


def lift_character(eps: DirichletChar, lam: int, t: int = 1, primitive: bool = True) -> DirichletChar:
    """psi_t = eps (-1/.)^lam (t/.), primitive by default."""
    psi = eps * chi_minus4() ** lam
    if t != 1:
        psi = psi * kronecker_character(t)
    return psi.primitive() if primitive else psi


def lift_coefficients(
    F: QSeries,
    k2: int,
    eps: DirichletChar,
    prec: int,
    t: int | None = None,
    primitive: bool = True,
) -> QSeries:
    """A_n = sum_{d | n} psi_t(d) d^(lam-1) a_{t (n/d)^2} for 1 <= n < prec.

    With ``t=None`` the smallest squarefree t with a_t != 0 is used.
    ``primitive=False`` keeps the character at the level of eps, so primes
    dividing the level drop out of the divisor sum.
    """
    if k2 % 2 == 0 or k2 < 3:
        raise LiftError("the lift needs half-integral weight k2/2 >= 3/2")
    lam = (k2 - 1) // 2
    if t is None:
        t = next((s for s in range(1, F.prec) if _squarefree(s) and not F[s].is_zero()), None)
        if t is None:
            raise LiftError("a_t vanishes for every squarefree t below the precision; cannot normalize")
    elif not _squarefree(t):
        raise LiftError(f"t = {t} is not squarefree")
    need = t * (prec - 1) ** 2 + 1
    if F.prec < need:
        raise InsufficientPrecision(f"lift to precision {prec} needs {need} coefficients of F, have {F.prec}")
    psi = lift_character(eps, lam, t, primitive)
    order = lcm(F.order, psi.value_order)
    coeffs = {}
    for n in range(1, prec):
        total = CycloElem.from_rational(0, order)
        for d in divisors(n):
            a = F[t * (n // d) ** 2]
            if a.is_zero():
                continue
            c = psi(d, order)
            if c.is_zero():
                continue
            total = total + c * a * d ** (lam - 1)
        if not total.is_zero():
            coeffs[n] = total
    return QSeries(coeffs, prec, order)


def recursion_defects(A: QSeries, k: int, eps: DirichletChar, level: int) -> list[tuple[int, str]]:
    """Indices where the Hecke recursions of a normalized eigenform fail.

    Checks A_1 = 1, A_{mn} = A_m A_n for coprime m, n, and the prime-power
    laws (three-term for ell not dividing ``level``, pure powers otherwise).
    """
    bad = []
    prec = A.prec
    if prec > 1 and A[1] != 1:
        bad.append((1, "A_1 != 1"))
    for n in range(2, prec):
        fac = factorint(n)
        if len(fac) > 1:
            ell, e = fac[0]
            m = ell**e
            if A[n] != A[m] * A[n // m]:
                bad.append((n, "multiplicativity"))
            continue
        ell, e = fac[0]
        if e == 1:
            continue
        if level % ell == 0:
            want = A[ell] ** e
        else:
            want = A[ell] * A[n // ell] - eps(ell) * ell ** (k - 1) * A[n // (ell * ell)]
        if A[n] != want:
            bad.append((n, "prime power"))
    return bad


@dataclass(frozen=True)
class LiftRecord:
    source: EigenSystem
    target: EigenSystem
    target_qexp: QSeries
    level: int
    verified: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    def to_json(self, terms: int = 50) -> dict:
        return {
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "level": self.level,
            "qexp": [str(c) for c in self.target_qexp.coefficients(min(terms, self.target_qexp.prec))],
            "flags": dict(sorted(self.verified.items())),
            "notes": list(self.notes),
        }


def sh_on_points(src: EigenSystem) -> EigenSystem:
    """Relabel a half-integral system as the integral one it lifts to."""
    if src.side != "half":
        raise LiftError("sh_on_points takes a half-integral system")
    p = src.p
    j = (2 * src.j) % (p - 1) if p else 0
    eig = tuple(sorted((relabel_integral(k), v) for k, v in src.eigenvalues))
    dist = relabel_integral(src.distinguished) if src.distinguished else None
    return replace(src, side="integral", lam=src.lam, j=j, tame_char=src.tame_char**2, eigenvalues=eig, distinguished=dist)


def _eigenvalue_table(src: EigenSystem) -> dict[int, CycloElem]:
    if src.degree != 1:
        raise LiftError("the eigenvalue-driven lift needs eigenvalues in the base field")
    out = {}
    for label, v in src.eigenvalues:
        name = canonical_name(label)
        if name[0] in "TU":
            out[int(name[1:])] = v[0]
    return out


def source_character(src: EigenSystem) -> DirichletChar:
    """The nebentypus chi tau^j of a half-integral system."""
    eps = src.tame_char
    if src.p and src.j:
        m = lcm(eps.modulus, src.p)
        eps = eps.extend(m) * (teichmuller(src.p) ** src.j).extend(m)
    return eps


def _tame_bad(src: EigenSystem, level: int, psi: DirichletChar) -> list[int]:
    # primes of the level, other than p, where the primitive lift character survives
    return [ell for ell, _ in factorint(level) if ell != src.p and not psi(ell).is_zero()]


def lift_series(src: EigenSystem, level: int, eps_int: DirichletChar, prec: int) -> QSeries:
    """Normalized expansion determined by the eigenvalues of a half-integral system.

    Primes not dividing the level follow the three-term recursion.  At p the
    U-eigenvalue is used as is (the p-stabilized lift).  At other primes of
    the level the divisor sum of the primitive-character lift is expanded for
    a U-eigenform: A_(l^e) = sum_i psi(l)^i l^(i(lam-1)) alpha^(e-i).
    """
    alpha = _eigenvalue_table(src)
    k = 2 * src.lam
    psi = lift_character(source_character(src), src.lam)
    order = lcm(src.order, eps_int.value_order, psi.value_order)
    missing = [ell for ell in primes_up_to(prec - 1) if ell not in alpha]
    if missing:
        raise LiftError(f"missing eigenvalues for primes {missing[:8]}{'...' if len(missing) > 8 else ''}")
    bad = set(_tame_bad(src, level, psi))
    A = [CycloElem.from_rational(0, order) for _ in range(prec)]
    if prec > 1:
        A[1] = CycloElem.from_rational(1, order)
    for ell in primes_up_to(prec - 1):
        a = alpha[ell].embed(order)
        if ell in bad:
            c = psi(ell, order) * ell ** (src.lam - 1)
            q, power = ell, a
            # A_(l^e) = alpha^e + c A_(l^(e-1))
            while q < prec:
                A[q] = power + c * A[q // ell]
                power = power * a
                q *= ell
            continue
        A[ell] = a
        q = ell
        while q * ell < prec:
            if level % ell == 0:
                A[q * ell] = A[q] * a
            else:
                A[q * ell] = a * A[q] - eps_int(ell, order) * ell ** (k - 1) * A[q // ell]
            q *= ell
    for n in range(2, prec):
        fac = factorint(n)
        if len(fac) > 1:
            ell, e = fac[0]
            m = ell**e
            A[n] = A[m] * A[n // m]
    return QSeries(list(A), prec, order)


def lift_from_eigensystem(
    src: EigenSystem,
    target_space: ModularFormSpace,
    prec: int,
    fallback_space: ModularFormSpace | None = None,
    hecke_primes: Sequence[int] = (),
) -> LiftRecord:
    """Build the lift from eigenvalues and verify it lies in ``target_space``.

    If membership fails and a ``fallback_space`` (the doubled level) is
    given, the check is repeated there and the record carries a note.
    The recursion flag is checked at the level with the tame primes of
    ``lift_series`` removed, where those primes obey the three-term law.
    """
    if src.side != "half":
        raise LiftError("lift_from_eigensystem takes a half-integral system")
    notes = []
    psi = lift_character(source_character(src), src.lam)
    for space in (target_space, fallback_space):
        if space is None:
            continue
        if space.is_half_integral or space.weight_num != 4 * src.lam:
            raise LiftError(f"{space!r} does not have weight {2 * src.lam}")
        A = lift_series(src, space.level, space.character, prec)
        bad = _tame_bad(src, space.level, psi)
        eff = space.level
        for ell in bad:
            while eff % ell == 0:
                eff //= ell
        rec_char = space.character if not bad else (psi * psi).primitive()
        flags = {"recursion": not recursion_defects(A, 2 * src.lam, rec_char, eff)}
        try:
            coords = space.coordinates(A)
            flags["membership"] = True
        except NotMember as exc:
            flags["membership"] = False
            notes.append(f"not in {space!r}: first failing exponent {exc.exponent}")
            continue
        flags["eigen_match"] = _eigen_match(space, coords, src, hecke_primes)
        if space is fallback_space:
            notes.append(f"lift found only at the fallback level {space.level}")
        target = sh_on_points(src)
        return LiftRecord(src, target, A, space.level, flags, tuple(notes))
    raise LiftError("; ".join(notes) or "no target space")


def _eigen_match(space: ModularFormSpace, coords, src: EigenSystem, primes: Sequence[int]) -> bool:
    alpha = _eigenvalue_table(src)
    checked = 0
    order = lcm(space.order, src.order, *(c.order for c in coords))
    vec = KMat.from_entries([coords], order)
    for ell in primes:
        if space.prec < required_precision(space, ell) or ell not in alpha:
            continue
        op = hecke_operator(space, ell)
        lhs = vec @ op.matrix.embed(order)
        if not lhs == vec.scale(alpha[ell].embed(order)):
            return False
        checked += 1
    return checked > 0 or not primes


__all__ = [
    "LiftError",
    "LiftRecord",
    "lift_character",
    "lift_coefficients",
    "lift_from_eigensystem",
    "lift_series",
    "source_character",
    "recursion_defects",
    "sh_on_points",
]
