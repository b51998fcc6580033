"""Explicit q-expansion models of spaces of modular forms.

Integral weight spaces M_k(M, eps) are spanned by Eisenstein series and
products of two Eisenstein series; generators are picked greedily by rank
modulo a large prime and the span is then recomputed exactly.  Cusp spaces
are the image of a product of (T_l - Eisenstein eigenvalue) operators.

Half-integral cusp spaces of weight k/2 are cut out of theta^{-1} S with S
the integral weight (k+1)/2 cusp space of the twisted character, by
requiring stability under U_4 and T_{l^2}.  Every construction is checked
against the closed-form dimension.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from math import lcm
from pathlib import Path
from typing import Iterable, Sequence

import flint

from . import __version__
from .arith import CycloElem, divisors, euler_phi, embedding_matrix, is_prime
from .dims import DimensionError, dimension_oracle, gamma0_index
from .dirichlet import DirichletChar, chi_minus4, primitive_characters
from .linalg import KMat, LinearAlgebraError, echelon, left_kernel, modular_setup
from .operators import t_ell_series, t_ellsq_series
from .qseries import QSeries, eisenstein, theta_inverse, u_ell, theta

log = logging.getLogger(__name__)

CACHE_ENV = "HALFWT_CACHE_DIR"
CACHE_TAG = f"halfwt-{__version__}-spaces-1"


class SpaceError(RuntimeError):
    """Base class for construction failures."""


class SpanDeficiency(SpaceError):
    pass


class OracleMismatch(SpaceError):
    pass


class InsufficientPrecision(ValueError):
    pass


class NotMember(ValueError):
    """Raised by ``coordinates``; ``exponent`` is the first exponent that fails."""

    def __init__(self, exponent: int, message: str = ""):
        super().__init__(message or f"not in the span (first failing exponent {exponent})")
        self.exponent = exponent


# ------------------------------------------------------- series <-> matrices

def series_matrix(series: Sequence[QSeries], prec: int, order: int) -> KMat:
    """Rows = coefficient vectors (exponents 0..prec-1) of the given series."""
    phi = euler_phi(order)
    zero = flint.fmpq(0)
    flats = [[] for _ in range(phi)]
    for f in series:
        if f.prec < prec:
            raise InsufficientPrecision(f"series known to {f.prec}, need {prec}")
        g = f.embed(order) if f.order != order else f
        for t in range(phi):
            c = g.rows[t].coeffs()[:prec]
            flats[t].extend(c)
            if len(c) < prec:
                flats[t].extend([zero] * (prec - len(c)))
    return KMat([flint.fmpq_mat(len(series), prec, fl) for fl in flats], order)


def matrix_series(mat: KMat) -> list[QSeries]:
    out = []
    c = mat.ncols
    ents = [p.entries() for p in mat.parts]
    for i in range(mat.nrows):
        rows = [flint.fmpq_poly(e[i * c : (i + 1) * c]) for e in ents]
        out.append(QSeries.from_rows(rows, c, mat.order))
    return out


def descend(mat: KMat, order: int) -> KMat:
    """Rewrite a matrix with entries in the subfield Q(zeta_order)."""
    if mat.order == order:
        return mat
    if mat.order % order:
        raise ValueError(f"Q(zeta_{order}) is not a subfield of Q(zeta_{mat.order})")
    emb = embedding_matrix(order, mat.order)
    small, big = len(emb), len(emb[0])
    e = flint.fmpq_mat(small, big, [x for row in emb for x in row])
    red, rank = e.rref()
    cols = []
    for i in range(rank):
        for j in range(big):
            if red[i, j] != 0:
                cols.append(j)
                break
    sub = flint.fmpq_mat(small, small, [e[i, j] for i in range(small) for j in cols])
    inv = sub.inv()
    parts = []
    for s in range(small):
        acc = flint.fmpq_mat(mat.nrows, mat.ncols)
        for idx, j in enumerate(cols):
            coef = inv[idx, s]
            if coef != 0:
                acc = acc + mat.parts[j] * coef
        parts.append(acc)
    out = KMat(parts, order)
    if out.embed(mat.order) != mat:
        raise LinearAlgebraError(f"entries do not lie in Q(zeta_{order})")
    return out


def _natural_order(eps: DirichletChar) -> int:
    m = eps.value_order
    return 1 if m <= 2 else m


# ------------------------------------------------------------------- spaces

@dataclass(frozen=True, eq=False)
class ModularFormSpace:
    """Echelon basis of a space of weight k2/2, level ``level`` and character."""

    weight_num: int
    level: int
    character: DirichletChar
    cuspidal: bool
    matrix: KMat
    pivots: tuple[int, ...]

    @property
    def prec(self) -> int:
        return self.matrix.ncols

    @property
    def order(self) -> int:
        return self.matrix.order

    @property
    def dimension(self) -> int:
        return self.matrix.nrows

    @property
    def is_half_integral(self) -> bool:
        return self.weight_num % 2 == 1

    @property
    def weight(self) -> Fraction:
        return Fraction(self.weight_num, 2)

    @property
    def basis(self) -> list[QSeries]:
        return matrix_series(self.matrix)

    def truncate(self, prec: int) -> "ModularFormSpace":
        if prec > self.prec:
            raise InsufficientPrecision(f"space known to {self.prec}, asked for {prec}")
        if self.pivots and prec <= self.pivots[-1]:
            raise InsufficientPrecision("truncation would lose a pivot")
        mat = self.matrix.column_window(0, prec)
        return ModularFormSpace(self.weight_num, self.level, self.character, self.cuspidal, mat, self.pivots)

    def coordinates_matrix(self, images: KMat) -> KMat:
        """Coordinates of each row of ``images``; raises NotMember on failure."""
        n = images.ncols
        if self.pivots and n <= self.pivots[-1]:
            raise InsufficientPrecision(f"need more than {self.pivots[-1]} coefficients, have {n}")
        order = lcm(self.order, images.order)
        images = images.embed(order)
        if self.dimension == 0:
            coords = KMat.zero(images.nrows, 0, order)
            resid = images
        else:
            coords = images.take_columns(self.pivots)
            resid = images - coords @ self.matrix.column_window(0, n).embed(order)
        col = resid.first_nonzero_column()
        if col is not None:
            raise NotMember(col)
        return coords

    def coordinates(self, f: QSeries) -> list[CycloElem]:
        if f.prec < min(self.prec, (self.pivots[-1] + 1) if self.pivots else 0):
            raise InsufficientPrecision("series precision is below the space's pivots")
        n = min(self.prec, f.prec)
        order = lcm(self.order, f.order)
        row = series_matrix([f], n, order)
        return self.coordinates_matrix(row).row(0)

    def contains(self, f: QSeries) -> bool:
        try:
            self.coordinates(f)
        except NotMember:
            return False
        return True

    def key(self) -> tuple:
        return ("half" if self.is_half_integral else "int", self.weight_num, self.level, self.character.label, self.cuspidal)

    def __repr__(self):
        kind = "S" if self.cuspidal else "M"
        return f"<{kind}_{{{self.weight}}}({self.level}, {self.character.label}) dim {self.dimension} prec {self.prec}>"

    # serialization
    def to_json(self) -> dict:
        return {
            "weight_num": self.weight_num,
            "level": self.level,
            "character": self.character.label,
            "cuspidal": self.cuspidal,
            "prec": self.prec,
            "order": self.order,
            "pivots": list(self.pivots),
            "basis": [f.to_json() for f in self.basis],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ModularFormSpace":
        basis = [QSeries.from_json(b) for b in data["basis"]]
        order = int(data["order"])
        prec = int(data["prec"])
        mat = series_matrix(basis, prec, order) if basis else KMat.zero(0, prec, order)
        return cls(
            int(data["weight_num"]),
            int(data["level"]),
            DirichletChar.from_label(data["character"]),
            bool(data["cuspidal"]),
            mat,
            tuple(int(x) for x in data["pivots"]),
        )


def _make_space(k2: int, level: int, eps: DirichletChar, cuspidal: bool, rows: KMat) -> ModularFormSpace:
    basis, pivots = echelon(rows) if rows.nrows else (rows, [])
    target = _natural_order(eps)
    if basis.order != target and basis.order % target == 0:
        basis = descend(basis, target)
    return ModularFormSpace(k2, level, eps, cuspidal, basis, tuple(pivots))


# -------------------------------------------------------------- caching

_MEMORY: dict[tuple, ModularFormSpace] = {}


def _cache_dir() -> Path | None:
    val = os.environ.get(CACHE_ENV)
    return Path(val) if val else None


def _cache_file(key: tuple) -> Path | None:
    root = _cache_dir()
    if root is None:
        return None
    digest = hashlib.sha256(repr((CACHE_TAG,) + key).encode()).hexdigest()[:24]
    return root / f"space-{digest}.json"


def _cache_get(key: tuple, prec: int) -> ModularFormSpace | None:
    space = _MEMORY.get(key)
    if space is None:
        path = _cache_file(key)
        if path is not None and path.exists():
            try:
                data = json.loads(path.read_text())
                if data.get("tag") == CACHE_TAG:
                    space = ModularFormSpace.from_json(data["space"])
                    _MEMORY[key] = space
            except (OSError, ValueError, KeyError) as exc:
                log.warning("ignoring unreadable cache file %s: %s", path, exc)
    if space is not None and space.prec >= prec:
        return space.truncate(prec) if space.prec > prec else space
    return None


def _cache_put(key: tuple, space: ModularFormSpace) -> None:
    old = _MEMORY.get(key)
    if old is None or old.prec < space.prec:
        _MEMORY[key] = space
    path = _cache_file(key)
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = json.dumps({"tag": CACHE_TAG, "space": space.to_json()}, sort_keys=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def clear_memory_cache() -> None:
    _MEMORY.clear()


# -------------------------------------------------------- Eisenstein data

@dataclass(frozen=True)
class EisensteinDatum:
    """E_k^{chi,psi}(q^t) with chi, psi primitive."""

    chi: DirichletChar
    psi: DirichletChar
    k: int
    t: int

    @property
    def level(self) -> int:
        return self.chi.modulus * self.psi.modulus * self.t

    def character(self, M: int) -> DirichletChar:
        return (self.chi * self.psi).extend(M)

    def eigenvalue(self, ell: int) -> CycloElem:
        """T_ell eigenvalue for a prime ell not dividing the level."""
        return self.chi(ell, self.order) + self.psi(ell, self.order) * ell ** (self.k - 1)

    @property
    def order(self) -> int:
        return lcm(self.chi.value_order, self.psi.value_order)

    def series(self, prec: int) -> QSeries:
        return eisenstein(self.chi, self.psi, self.k, prec, self.t)

    def sort_key(self) -> tuple:
        return (self.k, self.t, self.chi.modulus, self.psi.modulus, self.chi.exponents, self.psi.exponents)


_PRIM_CACHE: dict[int, list[DirichletChar]] = {}


def _primitive(u: int) -> list[DirichletChar]:
    if u not in _PRIM_CACHE:
        _PRIM_CACHE[u] = primitive_characters(u)
    return _PRIM_CACHE[u]


def eisenstein_data(k: int, M: int) -> list[EisensteinDatum]:
    """All Eisenstein series of weight k whose level divides M."""
    out = []
    for u in divisors(M):
        for v in divisors(M // u):
            for chi in _primitive(u):
                for psi in _primitive(v):
                    if (chi * psi).parity() != (-1) ** k:
                        continue
                    for t in divisors(M // (u * v)):
                        if k == 2 and u == v == 1 and t == 1:
                            continue
                        if k == 1 and (u, chi.exponents) > (v, psi.exponents):
                            continue  # E_1^{chi,psi} = E_1^{psi,chi}
                        out.append(EisensteinDatum(chi, psi, k, t))
    out.sort(key=EisensteinDatum.sort_key)
    return out


# --------------------------------------------------- modular rank selection

class _ModEchelon:
    """Incremental row echelon form over F_l."""

    def __init__(self, ell: int):
        self.ell = ell
        self.rows: list[tuple[int, list[int]]] = []

    def add(self, v: list[int]) -> bool:
        ell = self.ell
        v = list(v)
        for piv, row in self.rows:
            c = v[piv]
            if c:
                v = [(x - c * y) % ell for x, y in zip(v, row)]
        for j, x in enumerate(v):
            if x:
                inv = pow(x, -1, ell)
                self.rows.append((j, [y * inv % ell for y in v]))
                return True
        return False

    @property
    def rank(self) -> int:
        return len(self.rows)


def _reduce_series(f: QSeries, n: int, ell: int, w: int) -> list[int]:
    out = [0] * n
    wt = 1
    for r in f.rows:
        num = r.numer()
        den = int(r.denom()) % ell
        scale = wt * pow(den, -1, ell) % ell
        coeffs = num.coeffs()[:n]
        for i, c in enumerate(coeffs):
            if c:
                out[i] = (out[i] + int(c) * scale) % ell
        wt = wt * w % ell
    return out


def character_sturm_bound(k2: int, M: int) -> int:
    return int(Fraction(k2, 2) * gamma0_index(M) / 12) + 1


class _Generator:
    __slots__ = ("factors", "label")

    def __init__(self, factors: tuple[EisensteinDatum, ...]):
        self.factors = factors
        self.label = "*".join(f"E{d.k}[{d.chi.label};{d.psi.label};{d.t}]" for d in factors)

    @property
    def order(self) -> int:
        return lcm(*(d.order for d in self.factors))

    def series(self, prec: int, memo: dict) -> QSeries:
        parts = []
        for d in self.factors:
            key = (d, prec)
            if key not in memo:
                memo[key] = d.series(prec)
            parts.append(memo[key])
        out = parts[0]
        for p in parts[1:]:
            out = out * p
        return out


def _generator_pool(k: int, M: int, eps: DirichletChar) -> Iterable[_Generator]:
    eps = eps.extend(M)
    for d in eisenstein_data(k, M):
        if d.character(M) == eps:
            yield _Generator((d,))
    by_weight = {a: eisenstein_data(a, M) for a in range(1, k)}
    chars = {a: [d.character(M) for d in by_weight[a]] for a in by_weight}
    for a in range(1, k // 2 + 1):
        b = k - a
        la, lb = by_weight[a], by_weight[b]
        if a == b:
            pairs = combinations_with_replacement(range(len(la)), 2)
        else:
            pairs = ((i, j) for i in range(len(la)) for j in range(len(lb)))
        for i, j in pairs:
            da, db = la[i], lb[j]
            if M % lcm(da.level, db.level):
                continue
            if chars[a][i] * chars[b][j] != eps:
                continue
            yield _Generator((da, db))


def build_integral_space(k: int, M: int, eps: DirichletChar, cuspidal: bool = True, prec: int | None = None) -> ModularFormSpace:
    """M_k(M, eps) or S_k(M, eps) as an echelon basis to precision ``prec``."""
    if k < 2:
        raise ValueError("integral weight spaces need k >= 2")
    if M % eps.modulus:
        raise ValueError(f"character modulus {eps.modulus} does not divide level {M}")
    eps = eps.extend(M)
    if eps.parity() != (-1) ** k:
        raise ValueError(f"parity mismatch: eps(-1) must be (-1)^{k}")
    bound = character_sturm_bound(2 * k, M)
    prec = bound if prec is None else prec
    if prec < bound:
        raise InsufficientPrecision(f"precision {prec} is below the Sturm bound {bound}")
    key = ("int", 2 * k, M, eps.label, cuspidal)
    hit = _cache_get(key, prec)
    if hit is not None:
        return hit

    dim_m = dimension_oracle(2 * k, M, eps, cuspidal=False)
    dim_s = dimension_oracle(2 * k, M, eps, cuspidal=True)
    target = dim_s if cuspidal else dim_m
    if target == 0:
        space = ModularFormSpace(2 * k, M, eps, cuspidal, KMat.zero(0, prec, _natural_order(eps)), ())
        _cache_put(key, space)
        return space

    full = _build_full(k, M, eps, dim_m, bound, prec, cuspidal)
    if not cuspidal:
        _cache_put(key, full)
        return full
    space = _cusp_subspace(k, M, eps, full, dim_s, bound, prec)
    _cache_put(key, space)
    return space


def _build_full(k: int, M: int, eps: DirichletChar, dim_m: int, bound: int, prec: int, for_cusp: bool) -> ModularFormSpace:
    # extra precision so the cusp projection by T_ell still sees the Sturm bound
    ell = _first_good_prime(M)
    need = max(prec, ell * bound + ell) if for_cusp else prec
    pool = list(_generator_pool(k, M, eps))
    order = lcm(_natural_order(eps), *(g.order for g in pool)) if pool else _natural_order(eps)
    ell_mod, w = modular_setup(order)
    ech = _ModEchelon(ell_mod)
    memo: dict = {}
    chosen = []
    for g in pool:
        vec = _reduce_series(g.series(bound, memo).embed(order), bound, ell_mod, w)
        if ech.add(vec):
            chosen.append(g)
            if ech.rank == dim_m:
                break
    if ech.rank < dim_m:
        raise SpanDeficiency(
            f"generator pool spans {ech.rank} of {dim_m} dimensions of M_{k}({M}, {eps.label})"
        )
    log.debug("M_%d(%d, %s): %d generators from a pool of %d", k, M, eps.label, len(chosen), len(pool))
    memo = {}
    series = [g.series(need, memo) for g in chosen]
    rows = series_matrix(series, need, order)
    space = _make_space(2 * k, M, eps, False, rows)
    if space.dimension != dim_m:
        raise OracleMismatch(f"M_{k}({M}, {eps.label}): built {space.dimension}, oracle {dim_m}")
    return space


def _first_good_prime(M: int, skip: int = 0) -> int:
    found = 0
    ell = 2
    while True:
        if M % ell and is_prime(ell):
            if found == skip:
                return ell
            found += 1
        ell += 1


def hecke_images(space: ModularFormSpace, op) -> KMat:
    images = [op(f) for f in space.basis]
    n = min(f.prec for f in images)
    order = lcm(space.order, *(f.order for f in images))
    return series_matrix(images, n, order)


def _cusp_subspace(k: int, M: int, eps: DirichletChar, full: ModularFormSpace, dim_s: int, bound: int, prec: int) -> ModularFormSpace:
    eis = [d for d in eisenstein_data(k, M) if d.character(M) == eps]
    pieces = []
    for skip in range(4):
        ell = _first_good_prime(M, skip)
        if full.prec < ell * bound:
            break
        tmat = full.coordinates_matrix(hecke_images(full, lambda f: t_ell_series(f, ell, k, eps)))
        order = tmat.order
        values = []
        for d in eis:
            v = d.eigenvalue(ell)
            if v not in values:
                values.append(v)
        proj = KMat.identity(full.dimension, order)
        for v in values:
            shift = tmat - KMat.identity(full.dimension, order).scale(v)
            proj = proj @ shift
        pieces.append(proj)
        stacked = pieces[0]
        for p in pieces[1:]:
            stacked = stacked.stack(p)
        coords, _ = echelon(stacked)
        if coords.nrows == dim_s:
            order = lcm(coords.order, full.order)
            rows = coords.embed(order) @ full.matrix.embed(order)
            space = _make_space(2 * k, M, eps, True, rows)
            return space.truncate(prec) if space.prec > prec else space
    raise OracleMismatch(f"S_{k}({M}, {eps.label}): Eisenstein projection gave the wrong dimension (oracle {dim_s})")


# ----------------------------------------------------------- half-integral

def theta_twist(k2: int) -> DirichletChar:
    """Character by which multiplication by theta shifts the nebentypus."""
    return chi_minus4() ** ((k2 + 1) // 2)


def half_integral_bound(k2: int, M4: int) -> int:
    return character_sturm_bound(k2, M4)


def build_half_integral_space(k2: int, M4: int, eps: DirichletChar, prec: int | None = None) -> ModularFormSpace:
    """S_{k2/2}(M4, eps) for odd k2 >= 3 and 4 | M4."""
    if k2 % 2 == 0 or k2 < 3:
        raise ValueError("half-integral weight needs odd k2 >= 3")
    if M4 % 4:
        raise ValueError("level must be divisible by 4")
    if M4 % eps.modulus:
        raise ValueError(f"character modulus {eps.modulus} does not divide level {M4}")
    eps = eps.extend(M4)
    bound = half_integral_bound(k2, M4)
    prec = bound if prec is None else prec
    if prec < bound:
        raise InsufficientPrecision(f"precision {prec} is below the Sturm bound {bound}")
    key = ("half", k2, M4, eps.label, True)
    hit = _cache_get(key, prec)
    if hit is not None:
        return hit
    dim = dimension_oracle(k2, M4, eps)
    if dim == 0 or not eps.is_even():
        space = ModularFormSpace(k2, M4, eps, True, KMat.zero(0, prec, _natural_order(eps)), ())
        _cache_put(key, space)
        return space

    k_int = (k2 + 1) // 2
    twisted = (eps * theta_twist(k2)).extend(M4)
    int_bound = character_sturm_bound(2 * k_int, M4)
    work = max(prec, 16 * int_bound)
    big = build_integral_space(k_int, M4, twisted, True, work)
    inv = theta_inverse(work)
    cand = series_matrix([g * inv for g in big.basis], work, big.order)
    cand, _ = echelon(cand)

    ops = [("U4", 4)] + [(f"T{ell}^2", ell) for ell in (_first_good_prime(M4, 0), _first_good_prime(M4, 1))]
    th = theta(work)
    for name, ell in ops:
        if cand.nrows <= dim:
            break
        sq = ell * ell
        if work < sq * int_bound:
            # not enough precision for this operator's membership test
            continue
        current = matrix_series(cand)
        if name == "U4":
            images = [u_ell(f, 4) for f in current]
        else:
            images = [t_ellsq_series(f, ell, k2, eps) for f in current]
        n = min(f.prec for f in images)
        order = lcm(cand.order, big.order)
        ys = series_matrix([th.truncate(n) * f for f in images], n, order)
        stacked = ys.stack(big.matrix.column_window(0, n).embed(order))
        ker = left_kernel(stacked)
        keep = ker.take_columns(list(range(cand.nrows)))
        if keep.nrows:
            keep, _ = echelon(keep)
            cand = keep.embed(lcm(keep.order, cand.order)) @ cand.embed(lcm(keep.order, cand.order))
            cand, _ = echelon(cand)
        else:
            cand = KMat.zero(0, cand.ncols, cand.order)
        log.debug("S_%d/2(%d): %s closure leaves %d (oracle %d)", k2, M4, name, cand.nrows, dim)
    if cand.nrows != dim:
        raise OracleMismatch(
            f"S_{k2}/2({M4}, {eps.label}): closure left dimension {cand.nrows}, oracle {dim}"
        )
    space = _make_space(k2, M4, eps, True, cand)
    if space.prec > prec:
        space = space.truncate(prec)
    _cache_put(key, space)
    return space


def build_space(k2: int, level: int, eps: DirichletChar, cuspidal: bool = True, prec: int | None = None) -> ModularFormSpace:
    if k2 % 2:
        if not cuspidal:
            raise ValueError("only cuspidal half-integral spaces are supported")
        return build_half_integral_space(k2, level, eps, prec)
    return build_integral_space(k2 // 2, level, eps, cuspidal, prec)


def coordinates(space: ModularFormSpace, f: QSeries) -> list[CycloElem]:
    return space.coordinates(f)


__all__ = [
    "DimensionError",
    "InsufficientPrecision",
    "ModularFormSpace",
    "NotMember",
    "OracleMismatch",
    "SpaceError",
    "SpanDeficiency",
    "build_half_integral_space",
    "build_integral_space",
    "build_space",
    "character_sturm_bound",
    "coordinates",
    "dimension_oracle",
    "eisenstein_data",
    "series_matrix",
    "matrix_series",
]
