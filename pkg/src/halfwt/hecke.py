"""Hecke, diamond and U_p operators as exact matrices; eigen-systems.

Matrices follow the row convention of :mod:`halfwt.linalg`: row i holds the
coordinates of the image of basis vector i, so "A then B" is ``A @ B``.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Callable, Sequence

from .arith import CycloElem, Poly, as_cyclo, euler_phi, newton_polygon, padic_valuation, to_fraction
from .dirichlet import DirichletChar, chi_minus4, kronecker_character, split_character
from .linalg import KMat, echelon, kmat_charpoly, left_kernel, res_charpoly, solve_right
from .operators import t_ell_series, t_ellsq_series
from .qseries import QSeries, character_sturm_bound, u_ell
from .spaces import InsufficientPrecision, ModularFormSpace, hecke_images

log = logging.getLogger(__name__)


class HeckeError(ValueError):
    pass


class NonCommuting(HeckeError):
    pass


class SplittingFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class HeckeMatrix:
    label: str
    matrix: KMat
    space_key: tuple
    target_key: tuple | None = None

    @property
    def dimension(self) -> int:
        return self.matrix.nrows

    @property
    def is_square(self) -> bool:
        return self.target_key is None or self.target_key == self.space_key

    def kind(self) -> tuple[str, int]:
        """('T' | 'U' | 'D' | 'Up', prime or d) with squares folded: T(7^2) -> ('T', 7)."""
        name, arg = self.label.split("(", 1)
        arg = arg.rstrip(")")
        base = int(arg.split("^")[0])
        return name, base

    def to_json(self) -> dict:
        return {
            "op": self.label,
            "space": list(self.space_key),
            "target": list(self.target_key) if self.target_key else None,
            "order": self.matrix.order,
            "rows": [[x.to_json() for x in row] for row in self.matrix.to_entries()],
        }


def _bound(space: ModularFormSpace) -> int:
    return character_sturm_bound(space.weight_num, space.level)


def required_precision(space: ModularFormSpace, step: int) -> int:
    """Coefficients the basis needs so that an operator a_n -> a_{step n} is exact."""
    return step * _bound(space)


def _check_precision(space: ModularFormSpace, step: int) -> None:
    need = required_precision(space, step)
    if space.dimension and space.prec < need:
        raise InsufficientPrecision(f"{space!r}: operator needs {need} coefficients, space has {space.prec}")


def _matrix(space: ModularFormSpace, op: Callable[[QSeries], QSeries], target: ModularFormSpace | None = None) -> KMat:
    target = space if target is None else target
    order = lcm(space.order, target.order)
    if space.dimension == 0:
        return KMat.zero(0, target.dimension, order)
    images = hecke_images(space, op)
    if target.dimension == 0:
        if not images.is_zero():
            raise HeckeError("nonzero image in a zero-dimensional target")
        return KMat.zero(space.dimension, 0, order)
    return target.coordinates_matrix(images.column_window(0, min(images.ncols, target.prec)))


def t_ell_integral(space: ModularFormSpace, ell: int) -> HeckeMatrix:
    if space.is_half_integral:
        raise HeckeError("t_ell_integral acts on integral weight spaces")
    if space.level % ell == 0:
        raise HeckeError(f"{ell} divides the level {space.level}; use u_ell_integral")
    _check_precision(space, ell)
    k = space.weight_num // 2
    mat = _matrix(space, lambda f: t_ell_series(f, ell, k, space.character))
    return HeckeMatrix(f"T({ell})", mat, space.key())


def u_ell_integral(space: ModularFormSpace, ell: int) -> HeckeMatrix:
    if space.is_half_integral:
        raise HeckeError("u_ell_integral acts on integral weight spaces")
    if space.level % ell:
        raise HeckeError(f"{ell} does not divide the level {space.level}")
    _check_precision(space, ell)
    return HeckeMatrix(f"U({ell})", _matrix(space, lambda f: u_ell(f, ell)), space.key())


def t_ellsq_half(space: ModularFormSpace, ell: int) -> HeckeMatrix:
    if not space.is_half_integral:
        raise HeckeError("t_ellsq_half acts on half-integral weight spaces")
    if space.level % ell == 0:
        raise HeckeError(f"{ell} divides the level {space.level}; use u_ellsq_half")
    _check_precision(space, ell * ell)
    mat = _matrix(space, lambda f: t_ellsq_series(f, ell, space.weight_num, space.character))
    return HeckeMatrix(f"T({ell}^2)", mat, space.key())


def u_ellsq_half(space: ModularFormSpace, ell: int) -> HeckeMatrix:
    if not space.is_half_integral:
        raise HeckeError("u_ellsq_half acts on half-integral weight spaces")
    if space.level % ell:
        raise HeckeError(f"{ell} does not divide the level {space.level}")
    _check_precision(space, ell * ell)
    return HeckeMatrix(f"U({ell}^2)", _matrix(space, lambda f: u_ell(f, ell * ell)), space.key())


def hecke_operator(space: ModularFormSpace, ell: int) -> HeckeMatrix:
    """The natural operator at the prime ell: T or U, squared on the half-integral side."""
    if space.is_half_integral:
        return u_ellsq_half(space, ell) if space.level % ell == 0 else t_ellsq_half(space, ell)
    return u_ell_integral(space, ell) if space.level % ell == 0 else t_ell_integral(space, ell)


def _p_part(level: int, p: int) -> int:
    q = 1
    while level % (q * p) == 0:
        q *= p
    return q


def diamond(space: ModularFormSpace, d: int, which: str = "full", p: int | None = None) -> HeckeMatrix:
    """<d> on a space with fixed nebentypus: the scalar eps(d') for the CRT part d'."""
    level = space.level
    if gcd(d, level) != 1:
        raise HeckeError(f"{d} is not coprime to the level {level}")
    if which == "full":
        rep = d % level
    else:
        if p is None or level % p:
            raise HeckeError("a tame/p split needs a prime p dividing the level")
        pp = _p_part(level, p)
        tame = level // pp
        if which == "tame":
            rep = _crt(d, tame, 1, pp)
        elif which == "p":
            rep = _crt(1, tame, d, pp)
        else:
            raise HeckeError(f"unknown diamond part {which!r}")
    value = space.character(rep)
    order = lcm(space.order, value.order)
    mat = KMat.identity(space.dimension, order).scale(value)
    label = {"full": f"D({d})", "tame": f"Dt({d})", "p": f"Dp({d})"}[which]
    return HeckeMatrix(label, mat, space.key())


def _crt(a: int, m: int, b: int, n: int) -> int:
    t = ((b - a) * pow(m, -1, n)) % n if n > 1 else 0
    return (a + m * t) % (m * n)


def twist_character(p: int) -> DirichletChar:
    """The character (p/.) = (-1/.)^((p-1)/2) (./p) relating the two components."""
    pstar = p if p % 4 == 1 else -p
    return chi_minus4() ** ((p - 1) // 2) * kronecker_character(pstar)


def up_half(source: ModularFormSpace, target: ModularFormSpace, p: int) -> HeckeMatrix:
    """a_n -> a_{pn} from one component to the twisted one."""
    if not (source.is_half_integral and target.is_half_integral):
        raise HeckeError("up_half maps between half-integral spaces")
    if source.level != target.level or source.level % p or source.weight_num != target.weight_num:
        raise HeckeError("up_half needs spaces of equal weight and level divisible by p")
    want = (source.character * twist_character(p)).extend(source.level)
    if target.character.extend(source.level) != want:
        raise HeckeError(f"target nebentypus {target.character.label} is not the twist {want.label}")
    _check_precision(source, p)
    return HeckeMatrix(f"Up({p})", _matrix(source, lambda f: u_ell(f, p), target), source.key(), target.key())


# ---------------------------------------------------------------- charpoly

def charpoly(op: HeckeMatrix, fredholm: bool = False) -> Poly:
    if not op.is_square:
        raise HeckeError(f"{op.label} is not an endomorphism")
    n = op.matrix.nrows
    if n == 0:
        return Poly.one(op.matrix.order)
    f = kmat_charpoly(op.matrix)
    return f.reverse(n) if fredholm else f


def check_commuting(ops: Sequence[HeckeMatrix]) -> None:
    for i, a in enumerate(ops):
        for b in ops[i + 1 :]:
            if not (a.matrix @ b.matrix == b.matrix @ a.matrix):
                raise NonCommuting(f"{a.label} and {b.label} do not commute")


# ------------------------------------------------------------ eigensystems

def canonical_name(label: str) -> str:
    """Side-independent operator name: T(7^2) and T(7) both give T7."""
    name, arg = label.split("(", 1)
    return f"{name}{int(arg.rstrip(')').split('^')[0])}"


def relabel_integral(label: str) -> str:
    name, arg = label.split("(", 1)
    return f"{name}({arg.rstrip(')').split('^')[0]})"


def _trace(a: KMat) -> CycloElem:
    out = CycloElem.from_rational(0, a.order)
    for i in range(a.nrows):
        out = out + a.entry(i, i)
    return out


def _poly_at(f: Poly, a: KMat) -> KMat:
    n = a.nrows
    order = lcm(f.order, a.order)
    a = a.embed(order)
    acc = KMat.zero(n, n, order)
    ident = KMat.identity(n, order)
    for c in reversed(f.coeffs):
        acc = acc @ a + ident.scale(c)
    return acc


def _is_nilpotent(a: KMat) -> bool:
    n = a.nrows
    power, e = a, 1
    while e < n:
        power = power @ power
        e *= 2
    return power.is_zero()


def _power_sums(f: Poly, count: int) -> list[CycloElem]:
    e = f.degree
    a = [f[i] for i in range(e + 1)]
    zero = CycloElem.from_rational(0, f.order)
    ps = [CycloElem.from_rational(e, f.order)]
    for k in range(1, count):
        s = zero
        for i in range(1, min(k, e) + 1):
            if i < k:
                s = s + a[e - i] * ps[k - i]
        if k <= e:
            s = s + a[e - k] * k
        ps.append(-s)
    return ps


class _Field:
    """L = K[x]/f with elements as coefficient lists of length deg f."""

    def __init__(self, f: Poly):
        self.f = f.monic()
        self.order = f.order
        self.degree = f.degree

    def elem(self, coords: Sequence) -> Poly:
        return Poly(list(coords), self.order)

    def coords(self, g: Poly) -> list[CycloElem]:
        return [g[i] for i in range(self.degree)]

    def mul(self, a: Poly, b: Poly) -> Poly:
        return (a * b) % self.f

    def mult_matrix(self, a: Poly) -> KMat:
        rows = []
        cur = a % self.f
        x = Poly.x(self.order)
        for _ in range(self.degree):
            rows.append(self.coords(cur))
            cur = (cur * x) % self.f
        return KMat.from_entries(rows, self.order)


def _operator_weight(name: str, attempt: int) -> int:
    rng = random.Random(f"canon:{name}:{attempt}")
    return rng.randint(1, 97)


def rational_factor(values: dict[str, CycloElem], order: int) -> Poly:
    """x - gamma for a system with eigenvalues in the base field."""
    gamma = CycloElem.from_rational(0, order)
    for label, v in values.items():
        if label[0] in "TU":
            gamma = gamma + as_cyclo(v, order).embed(order) * _operator_weight(canonical_name(label), 0)
    return Poly([-gamma, 1], order)


def _canonical_form(fieldL: _Field, values: dict[str, Poly]) -> tuple[Poly, dict[str, list[CycloElem]]]:
    """Minimal polynomial h of a label-determined generator gamma and each value as a polynomial in gamma."""
    e = fieldL.degree
    names = sorted({canonical_name(k) for k in values if k[0] in "TU"})
    by_name = {canonical_name(k): v for k, v in values.items()}
    for attempt in range(32):
        gamma = Poly([], fieldL.order)
        for nm in names:
            gamma = gamma + by_name[nm] * _operator_weight(nm, attempt)
        gamma = gamma % fieldL.f
        mm = fieldL.mult_matrix(gamma)
        h = kmat_charpoly(mm)
        if h.gcd(h.derivative()).degree > 0:
            continue
        powers = []
        cur = Poly.one(fieldL.order)
        for _ in range(e):
            powers.append(fieldL.coords(cur))
            cur = fieldL.mul(cur, gamma)
        pmat = KMat.from_entries(powers, fieldL.order)
        out = {}
        for label, v in values.items():
            vec = KMat.from_entries([fieldL.coords(v % fieldL.f)], fieldL.order)
            sol = solve_right(pmat.transpose(), vec.transpose()).transpose()
            out[label] = sol.row(0)
        return h, out
    raise SplittingFailure("no label-determined generator of the eigenvalue field")


@dataclass(frozen=True)
class EigenSystem:
    """A Galois orbit (over the base field) of systems of Hecke eigenvalues.

    ``factor`` is the minimal polynomial over Q(zeta_order) of a generator
    gamma fixed by the operator labels; each eigenvalue is a polynomial in
    gamma (coefficient list, constant first).  Rational orbits have
    ``factor`` of degree 1 and one-element value lists.
    """

    side: str
    lam: int
    j: int
    tame_char: DirichletChar
    p: int | None
    order: int
    factor: Poly
    eigenvalues: tuple[tuple[str, tuple[CycloElem, ...]], ...]
    slope: Fraction | None
    multiplicity: int = 1
    slope_share: int = 1
    distinguished: str | None = None

    @property
    def degree(self) -> int:
        return self.factor.degree

    def value(self, label: str):
        """The eigenvalue: a CycloElem when rational over the base field, else its coordinate tuple."""
        for k, v in self.eigenvalues:
            if k == label:
                return v[0] if self.degree == 1 else v
        raise KeyError(label)

    def values(self) -> dict[str, object]:
        return {k: self.value(k) for k, _ in self.eigenvalues}

    def signature(self) -> tuple:
        """Data compared when matching systems across the two sides."""
        order = self.order
        vals = tuple(sorted((canonical_name(k), tuple(c.embed(order) for c in v)) for k, v in self.eigenvalues if k[0] in "TU"))
        # Q(zeta_2m) = Q(zeta_m) for odd m
        field_order = order // 2 if order % 4 == 2 else order
        return (field_order, tuple(self.factor.embed(order).coeffs), vals, self.slope)

    def to_json(self) -> dict:
        vals = []
        for k, v in self.eigenvalues:
            if self.degree == 1:
                vals.append({"op": k, "value": str(v[0])})
            else:
                vals.append({"op": k, "factor": str(self.factor), "poly": [str(c) for c in v], "index": 0})
        return {
            "side": self.side,
            "lambda": self.lam,
            "j": self.j,
            "tame_char": self.tame_char.label,
            "p": self.p,
            "order": self.order,
            "degree": self.degree,
            "slope": None if self.slope is None else f"{self.slope.numerator}/{self.slope.denominator}",
            "multiplicity": self.multiplicity,
            "slope_share": self.slope_share,
            "eigenvalues": vals,
        }


def weight_point(space: ModularFormSpace, p: int | None) -> tuple[int, int, DirichletChar]:
    """(lambda, j, tame character) of a space in the 4Np (half) or 2Np (integral) family."""
    lam = (space.weight_num - 1) // 2 if space.is_half_integral else space.weight_num // 4
    if p is None or space.level % p or space.level % (p * p) == 0:
        return lam, 0, space.character
    big = lcm(space.level, 4 * p)
    chi, j = split_character(space.character.extend(big), big // (4 * p), p)
    return lam, j, chi


def eigensystems(
    space: ModularFormSpace,
    operators: Sequence[HeckeMatrix],
    p: int | None = None,
    distinguished: str | None = None,
    seed: int = 0,
    order: int | None = None,
    keep_nilpotent: bool = False,
) -> list[EigenSystem]:
    """Simultaneous eigen-systems of commuting operators, one per Galois orbit and slope."""
    ops = [op for op in operators if op.is_square]
    if len(ops) != len(operators):
        raise HeckeError("eigensystems needs endomorphisms")
    n = space.dimension
    if n == 0:
        return []
    m = lcm(space.order, order or 1, *(op.matrix.order for op in ops))
    mats = {op.label: op.matrix.embed(m) for op in ops}
    check_commuting(ops)
    if distinguished is None and p is not None:
        cands = [op.label for op in ops if op.label.startswith("U(") and canonical_name(op.label) == f"U{p}"]
        distinguished = cands[0] if cands else None
    lam, j, tame = weight_point(space, p)
    side = "half" if space.is_half_integral else "integral"
    rng = random.Random(f"{seed}:{space.key()}")
    for attempt in range(12):
        combo = KMat.zero(n, n, m)
        for label in sorted(mats):
            combo = combo + mats[label].scale(rng.randint(-20, 20))
        if euler_phi(m) > 1:
            combo = combo + KMat.identity(n, m).scale(CycloElem.zeta(m) * rng.randint(1, 20))
        try:
            found = _split(combo, mats, m)
        except SplittingFailure as exc:
            log.debug("splitting attempt %d failed: %s", attempt, exc)
            continue
        out = []
        for fpoly, mult, values in found:
            fieldL = _Field(fpoly)
            if distinguished is not None and all(c.is_zero() for c in fieldL.coords(values[distinguished] % fieldL.f)):
                if not keep_nilpotent:
                    continue
            h, canon = _canonical_form(fieldL, values)
            eig = tuple(sorted((label, tuple(canon[label])) for label in values))
            if distinguished is None or p is None:
                shares = {None: fieldL.degree}
            else:
                dval = values[distinguished] % fieldL.f
                if all(c.is_zero() for c in fieldL.coords(dval)):
                    shares = {None: fieldL.degree}
                else:
                    shares = _slope_shares(fieldL, dval, p)
            for s, share in sorted(shares.items(), key=lambda kv: (kv[0] is None, kv[0] or 0)):
                out.append(EigenSystem(side, lam, j, tame, p, m, h, eig, s, mult, share, distinguished))
        out.sort(key=_system_sort_key)
        return out
    raise SplittingFailure(f"could not split {space!r} into eigen-systems")


def _slope_shares(fieldL: _Field, value: Poly, p: int) -> dict[Fraction, int]:
    """Slope -> number of the degree * phi embeddings of value with that valuation."""
    mm = fieldL.mult_matrix(value)
    big = mm.restrict_scalars() if mm.phi > 1 else mm.parts[0]
    coeffs = [to_fraction(c) for c in big.charpoly().coeffs()]
    fred = list(reversed(coeffs))
    fred = [c / fred[0] for c in fred]
    return newton_polygon(fred, p).multiplicities()


def _system_sort_key(s: EigenSystem):
    return (s.slope is None, s.slope or 0, s.degree, str(s.factor), [(k, [str(c) for c in v]) for k, v in s.eigenvalues])


def _split(combo: KMat, mats: dict[str, KMat], m: int) -> list[tuple[Poly, int, dict[str, Poly]]]:
    n = combo.nrows
    g = kmat_charpoly(combo)
    g_red = g // g.gcd(g.derivative())
    rq = res_charpoly(combo)
    _, qfactors = rq.factor()
    phi = euler_phi(m)
    if sum(P.degree() for P, _ in qfactors) != phi * g_red.degree:
        raise SplittingFailure("norm of the squarefree part is not squarefree")
    out = []
    total = 0
    for P, _ in sorted(qfactors, key=lambda t: (t[0].degree(), str(t[0]))):
        Pk = Poly([to_fraction(c) for c in P.coeffs()]).embed(m)
        f = g_red.gcd(Pk).monic()
        if f.degree == 0:
            continue
        mult = 0
        rest = g
        while True:
            q, r = divmod(rest, f)
            if not r.is_zero():
                break
            rest = q
            mult += 1
        fa = _poly_at(f, combo)
        power = fa
        for _ in range(mult - 1):
            power = power @ fa
        ker = left_kernel(power)
        if ker.nrows != mult * f.degree:
            raise SplittingFailure("generalized eigenspace has the wrong dimension")
        basis, piv = echelon(ker)
        restricted = {label: (basis @ mat).take_columns(piv) for label, mat in mats.items()}
        a_v = (basis @ combo).take_columns(piv)
        values = _values_on_block(f, mult, a_v, restricted)
        out.append((f, mult, values))
        total += ker.nrows
    if total != n:
        raise SplittingFailure("generalized eigenspaces do not fill the space")
    return out


def _values_on_block(f: Poly, mult: int, a_v: KMat, restricted: dict[str, KMat]) -> dict[str, Poly]:
    e = f.degree
    order = a_v.order
    ps = _power_sums(f, 2 * e - 1)
    gram = KMat.from_entries([[ps[i + j] for j in range(e)] for i in range(e)], order)
    powers = [KMat.identity(a_v.nrows, order)]
    for _ in range(e - 1):
        powers.append(powers[-1] @ a_v)
    values = {}
    for label, mv in restricted.items():
        c = [_trace(pw @ mv) * Fraction(1, mult) for pw in powers]
        b = solve_right(gram, KMat.from_entries([[x] for x in c], order)).transpose().row(0)
        val = Poly(b, order)
        if not _is_nilpotent(_poly_at(val, a_v) - mv):
            raise SplittingFailure(f"{label} is not a polynomial in the combination on a block")
        values[label] = val
    return values


# -------------------------------------------------------------- from forms

def eigenvalue_on_form(f: QSeries, image: QSeries) -> CycloElem:
    """c with image = c f on the common precision; raises HeckeError otherwise."""
    n = min(f.prec, image.prec)
    lead = f.truncate(n).valuation()
    if lead is None:
        raise HeckeError("zero form has no eigenvalue")
    c = image[lead] / f[lead]
    if not (image.truncate(n) - f.truncate(n).scale(c)).is_zero():
        raise HeckeError("not an eigenform to the available precision")
    return c


def eigensystem_from_form(
    f: QSeries,
    k2: int,
    level: int,
    eps: DirichletChar,
    primes: Sequence[int],
    p: int | None = None,
) -> EigenSystem:
    """Eigen-system of a single eigenform given by its q-expansion.

    Each operator is applied to the series directly, so f must be known to
    at least ell^2 (half-integral) or ell (integral) times its valuation.
    """
    half = k2 % 2 == 1
    vals = []
    order = eps.value_order
    for ell in primes:
        if half:
            image = u_ell(f, ell * ell) if level % ell == 0 else t_ellsq_series(f, ell, k2, eps)
            label = f"{'U' if level % ell == 0 else 'T'}({ell}^2)"
        else:
            image = u_ell(f, ell) if level % ell == 0 else t_ell_series(f, ell, k2 // 2, eps)
            label = f"{'U' if level % ell == 0 else 'T'}({ell})"
        c = eigenvalue_on_form(f, image)
        order = lcm(order, c.order)
        vals.append((label, c))
    fake = ModularFormSpace(k2, level, eps.extend(level), True, KMat.zero(0, 1, 1), ())
    lam, j, tame = weight_point(fake, p)
    eig = tuple(sorted((label, (c.embed(order),)) for label, c in vals))
    dist = None
    slope = None
    if p is not None and level % p == 0:
        dist = f"U({p}^2)" if half else f"U({p})"
        u = dict(vals).get(dist)
        if u is not None and not u.is_zero():
            slope = _rational_slope(u, p)
    factor = rational_factor(dict(vals), order)
    return EigenSystem("half" if half else "integral", lam, j, tame, p, order, factor, eig, slope, 1, 1, dist)


def _rational_slope(x: CycloElem, p: int) -> Fraction:
    if x.is_rational():
        return Fraction(padic_valuation(x.to_fraction(), p))
    return Fraction(padic_valuation(x.norm(), p), x.degree)


__all__ = [
    "EigenSystem",
    "HeckeError",
    "HeckeMatrix",
    "NonCommuting",
    "SplittingFailure",
    "canonical_name",
    "charpoly",
    "check_commuting",
    "diamond",
    "eigensystem_from_form",
    "eigensystems",
    "eigenvalue_on_form",
    "hecke_operator",
    "relabel_integral",
    "required_precision",
    "t_ell_integral",
    "t_ellsq_half",
    "twist_character",
    "u_ell_integral",
    "u_ellsq_half",
    "up_half",
    "weight_point",
]
