"""Classical points of the two spectral curves and the map between them.

A scan runs over weights lambda tau^j and tame characters chi.  At each
point it computes the Fredholm polynomial of U_{p^2} on S_{lambda+1/2}(4Np,
chi tau^j) and of U_p on the weight 2 lambda space of level 2Np and
character chi^2 tau^{2j}, checks that the first (reduced) divides the
second, and matches eigen-systems across the two sides.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field, replace
from math import gcd, lcm
from typing import Iterable, Sequence

from . import __version__
from .arith import NewtonPolygon, Poly, is_prime, newton_polygon, slope_factors, squarefree_part
from .dirichlet import DirichletChar, characters_mod, chi_minus4, teichmuller
from .hecke import EigenSystem, HeckeMatrix, charpoly, eigensystems, hecke_operator
from .linalg import res_charpoly
from .qseries import character_sturm_bound
from .shimura import sh_on_points
from .spaces import ModularFormSpace, build_space

log = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class WeightPoint:
    lam: int
    j: int
    p: int

    def __post_init__(self):
        if self.p == 2 or not is_prime(self.p):
            raise ValueError(f"p must be an odd prime, got {self.p}")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        object.__setattr__(self, "j", self.j % (self.p - 1))

    @property
    def component(self) -> int:
        return (self.lam + self.j) % (self.p - 1)

    @property
    def half_weight(self) -> int:
        """k with the half-integral weight k/2."""
        return 2 * self.lam + 1

    @property
    def integral_weight(self) -> int:
        return 2 * self.lam

    def partner(self) -> "WeightPoint":
        return WeightPoint(self.lam, self.j + (self.p - 1) // 2, self.p)

    def to_json(self) -> dict:
        return {"lambda": self.lam, "j": self.j, "p": self.p, "component": self.component}


def half_character(w: WeightPoint, chi: DirichletChar, N: int) -> DirichletChar:
    level = 4 * N * w.p
    return (chi.extend(4 * N) * teichmuller(w.p) ** w.j).extend(level)


def integral_character(w: WeightPoint, chi: DirichletChar, N: int) -> DirichletChar:
    eps = (chi.extend(4 * N) ** 2 * teichmuller(w.p) ** (2 * w.j)).extend(4 * N * w.p)
    return eps.restrict(2 * N * w.p)


def partner_character(chi: DirichletChar, p: int) -> DirichletChar:
    return chi * chi_minus4() ** ((p - 1) // 2)


def matching_primes(N: int, p: int, count: int) -> list[int]:
    out, ell = [], 3
    while len(out) < count:
        if is_prime(ell) and ell != p and N % ell:
            out.append(ell)
        ell += 2
    return out


@dataclass(frozen=True)
class SpectralSlice:
    weight: WeightPoint
    side: str
    space_key: tuple
    dimension: int
    fredholm: Poly
    fredholm_norm: Poly
    polygon: NewtonPolygon | None
    slope_factors: dict
    cuspidal: bool

    def to_json(self) -> dict:
        return {
            "side": self.side,
            "space": list(self.space_key),
            "dimension": self.dimension,
            "cuspidal": self.cuspidal,
            "fredholm": str(self.fredholm),
            "fredholm_over_Q": str(self.fredholm_norm),
            "slopes": [str(s) for s in self.polygon.slopes] if self.polygon else [],
            "slope_factors": {str(s): str(f) for s, f in sorted(self.slope_factors.items())},
        }


def _fredholm_norm(op: HeckeMatrix) -> Poly:
    n = op.matrix.nrows
    if n == 0:
        return Poly.one()
    f = Poly.from_fmpq_poly(res_charpoly(op.matrix))
    return f.reverse(f.degree)


def _slice_space(w: WeightPoint, side: str, N: int, chi: DirichletChar, primes: Sequence[int]) -> ModularFormSpace:
    p = w.p
    if side == "half":
        eps = half_character(w, chi, N)
        level, k2, cusp = 4 * N * p, w.half_weight, True
        step = max([p * p] + [ell * ell for ell in primes])
    else:
        eps = integral_character(w, chi, N)
        level, k2 = 2 * N * p, 2 * w.integral_weight
        # weight 2 is compared with the full space (theta-series lift to Eisenstein series)
        cusp = w.lam >= 2
        step = max([p] + list(primes))
    prec = step * character_sturm_bound(k2, level)
    return build_space(k2, level, eps, cusp, prec)


def _slice_from(w: WeightPoint, side: str, space: ModularFormSpace, u: HeckeMatrix) -> SpectralSlice:
    fred = charpoly(u, fredholm=True)
    norm = _fredholm_norm(u)
    if norm.degree > 0:
        polygon = newton_polygon(norm, w.p)
        factors = slope_factors(norm, w.p)
    else:
        polygon, factors = None, {}
    return SpectralSlice(w, side, space.key(), space.dimension, fred, norm, polygon, factors, space.cuspidal)


def spectral_slice(w: WeightPoint, side: str, N: int, chi: DirichletChar, primes: Sequence[int] = ()) -> SpectralSlice:
    if side not in ("half", "integral"):
        raise ValueError("side must be 'half' or 'integral'")
    space = _slice_space(w, side, N, chi, primes)
    return _slice_from(w, side, space, hecke_operator(space, w.p))


@dataclass(frozen=True)
class Divisibility:
    ok: bool
    certificate: Poly

    def to_json(self) -> dict:
        return {"ok": self.ok, "certificate": str(self.certificate), "kind": "quotient" if self.ok else "offending factor"}


def check_divisibility(half: SpectralSlice, integral: SpectralSlice) -> Divisibility:
    """Does the reduced half-side Fredholm polynomial divide the integral one?"""
    order = lcm(half.fredholm.order, integral.fredholm.order)
    a = half.fredholm.embed(order)
    b = integral.fredholm.embed(order)
    if a.degree <= 0:
        return Divisibility(True, squarefree_part(b) if b.degree > 0 else b)
    ar, br = squarefree_part(a), squarefree_part(b)
    q, r = divmod(br, ar)
    if r.is_zero():
        return Divisibility(True, q)
    g = ar.gcd(br)
    bad = ar // g
    return Divisibility(False, bad.fredholm_normalized() if not bad[0].is_zero() else bad)


def control_flag(sys: EigenSystem) -> str:
    if sys.slope is None:
        raise ValueError("system has no slope (zero U-eigenvalue)")
    bound = 2 * sys.lam - 1
    if sys.slope < bound:
        return "smallslope"
    return "critical" if sys.slope == bound else "largeslope"


def involution_on_systems(sys: EigenSystem, p: int) -> EigenSystem:
    """j -> j + (p-1)/2 and tame diamonds twisted by (-1/d)^((p-1)/2); T and U unchanged."""
    if sys.side != "half":
        raise ValueError("the involution acts on half-integral systems")
    return replace(sys, j=(sys.j + (p - 1) // 2) % (p - 1), tame_char=partner_character(sys.tame_char, p))


def _same_char(a: DirichletChar, b: DirichletChar) -> bool:
    return a.same_on_units(b)


def same_system(a: EigenSystem, b: EigenSystem) -> bool:
    return (
        a.side == b.side
        and a.lam == b.lam
        and a.j == b.j
        and _same_char(a.tame_char, b.tame_char)
        and a.signature() == b.signature()
    )


# -------------------------------------------------------------------- scan

@dataclass
class PointResult:
    weight: WeightPoint
    chi: DirichletChar
    half: SpectralSlice | None = None
    integral: SpectralSlice | None = None
    divisibility: Divisibility | None = None
    half_systems: list = field(default_factory=list)
    integral_systems: list = field(default_factory=list)
    error: str | None = None

    def key(self) -> tuple:
        return (self.weight.lam, self.weight.j, self.chi.label)

    def to_json(self) -> dict:
        out = {
            "weight": self.weight.to_json(),
            "chi": self.chi.label,
            "error": self.error,
        }
        if self.error is None:
            out.update(
                {
                    "half": self.half.to_json(),
                    "integral": self.integral.to_json(),
                    "divisibility": self.divisibility.to_json(),
                    "half_systems": [s.to_json() for s in self.half_systems],
                    "integral_systems": [s.to_json() for s in self.integral_systems],
                }
            )
        return out


@dataclass
class ScanReport:
    p: int
    N: int
    seed: int
    primes: list
    points: list = field(default_factory=list)
    matches: list = field(default_factory=list)
    unmatched: list = field(default_factory=list)
    involution_pairs: list = field(default_factory=list)
    involution_failures: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def grid(self) -> list[WeightPoint]:
        return sorted({pt.weight for pt in self.points})

    @property
    def divisibility_ok(self) -> bool:
        return all(pt.error is None and pt.divisibility.ok for pt in self.points)

    @property
    def invariants_ok(self) -> bool:
        small_unmatched = [u for u in self.unmatched if u["control"] == "smallslope"]
        return self.divisibility_ok and not small_unmatched and not self.involution_failures

    def systems(self) -> list[tuple[PointResult, EigenSystem]]:
        return [(pt, s) for pt in self.points for s in pt.half_systems]

    def to_json(self) -> dict:
        return {
            "version": __version__,
            "p": self.p,
            "N": self.N,
            "seed": self.seed,
            "matching_primes": self.primes,
            "grid": [w.to_json() for w in self.grid],
            "points": [pt.to_json() for pt in self.points],
            "matches": self.matches,
            "unmatched": self.unmatched,
            "involution_pairs": self.involution_pairs,
            "involution_failures": self.involution_failures,
            "divisibility_ok": self.divisibility_ok,
            "invariants_ok": self.invariants_ok,
            "notes": self.notes,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def csv_rows(self) -> list[dict]:
        matched = {(m["point"], m["half_index"]) for m in self.matches}
        rows = []
        for pt in self.points:
            for i, s in enumerate(pt.half_systems):
                rows.append(
                    {
                        "lambda": pt.weight.lam,
                        "j": pt.weight.j,
                        "component": pt.weight.component,
                        "chi": pt.chi.label,
                        "degree": s.degree,
                        "slope": str(s.slope),
                        "matched": (_point_id(pt), i) in matched,
                        "control": control_flag(s),
                    }
                )
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = ["lambda", "j", "component", "chi", "degree", "slope", "matched", "control"]
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in self.csv_rows():
            writer.writerow(row)
        return buf.getvalue()


def _point_id(pt: PointResult) -> str:
    return f"lambda={pt.weight.lam},j={pt.weight.j},chi={pt.chi.label}"


def default_grid(p: int, lams: Iterable[int] = (1, 2, 3)) -> list[WeightPoint]:
    return [WeightPoint(lam, j, p) for lam in lams for j in range(p - 1)]


def tame_characters(N: int) -> list[DirichletChar]:
    return characters_mod(4 * N)


def scan_point(w: WeightPoint, N: int, chi: DirichletChar, primes: Sequence[int], seed: int) -> PointResult:
    res = PointResult(w, chi)
    half_space = _slice_space(w, "half", N, chi, primes)
    int_space = _slice_space(w, "integral", N, chi, primes)
    half_ops = [hecke_operator(half_space, ell) for ell in primes] + [hecke_operator(half_space, w.p)]
    int_ops = [hecke_operator(int_space, ell) for ell in primes] + [hecke_operator(int_space, w.p)]
    res.half = _slice_from(w, "half", half_space, half_ops[-1])
    res.integral = _slice_from(w, "integral", int_space, int_ops[-1])
    res.divisibility = check_divisibility(res.half, res.integral)
    res.half_systems = eigensystems(half_space, half_ops, p=w.p, seed=seed)
    order = lcm(half_space.order, int_space.order)
    res.integral_systems = eigensystems(int_space, int_ops, p=w.p, seed=seed, order=order)
    return res


def scan(
    grid: Sequence[WeightPoint],
    N: int,
    chars: Sequence[DirichletChar] | None = None,
    seed: int = 0,
    match_count: int = 2,
) -> ScanReport:
    """Run every (weight, tame character) pair with an even half-integral nebentypus."""
    if not grid:
        return ScanReport(0, N, seed, [])
    p = grid[0].p
    if any(w.p != p for w in grid):
        raise ValueError("all grid points must share p")
    if gcd(p, N) != 1:
        raise ValueError(f"p = {p} divides N = {N}")
    chars = tame_characters(N) if chars is None else [c.extend(4 * N) for c in chars]
    primes = matching_primes(N, p, match_count)
    report = ScanReport(p, N, seed, primes)
    if any(w.lam == 1 for w in grid):
        report.notes.append("weight 3/2 points are compared with the full weight 2 space, not its cuspidal part")
    for w in sorted(set(grid)):
        for chi in sorted(chars, key=lambda c: c.exponents):
            if not half_character(w, chi, N).is_even():
                continue
            try:
                pt = scan_point(w, N, chi, primes, seed)
            except Exception as exc:  # recorded per point, the scan goes on
                log.warning("scan point %s, %s failed: %s", w, chi.label, exc)
                pt = PointResult(w, chi, error=f"{type(exc).__name__}: {exc}")
            report.points.append(pt)
    _match(report)
    _pair(report)
    return report


def _match(report: ScanReport) -> None:
    for pt in report.points:
        if pt.error is not None:
            continue
        for i, s in enumerate(pt.half_systems):
            target = sh_on_points(s)
            hit = next((k for k, t in enumerate(pt.integral_systems) if same_system(target, t)), None)
            if hit is None:
                report.unmatched.append(
                    {
                        "point": _point_id(pt),
                        "half_index": i,
                        "slope": str(s.slope),
                        "control": control_flag(s),
                        "diagnostic": "no integral system with the relabelled eigenvalues",
                    }
                )
            else:
                report.matches.append(
                    {
                        "point": _point_id(pt),
                        "half_index": i,
                        "integral_index": hit,
                        "slope": str(s.slope),
                        "control": control_flag(s),
                    }
                )


def _pair(report: ScanReport) -> None:
    p = report.p
    index = {(pt.weight.lam, pt.weight.j, tuple(pt.chi.exponents)): pt for pt in report.points if pt.error is None}
    for pt in report.points:
        if pt.error is not None:
            continue
        w2 = pt.weight.partner()
        chi2 = partner_character(pt.chi, p).extend(4 * report.N)
        other = index.get((w2.lam, w2.j, tuple(chi2.exponents)))
        if other is None:
            continue
        for i, s in enumerate(pt.half_systems):
            img = involution_on_systems(s, p)
            back = involution_on_systems(img, p)
            hit = next((k for k, t in enumerate(other.half_systems) if same_system(img, t)), None)
            entry = {"from": _point_id(pt), "index": i, "to": _point_id(other)}
            if hit is None or not same_system(back, s):
                entry["problem"] = "no partner system" if hit is None else "involution is not an involution"
                report.involution_failures.append(entry)
                continue
            same_sh = same_system(sh_on_points(s), sh_on_points(other.half_systems[hit]))
            entry.update({"partner_index": hit, "same_lift": same_sh})
            if not same_sh:
                entry["problem"] = "lifts differ"
                report.involution_failures.append(entry)
            else:
                report.involution_pairs.append(entry)


__all__ = [
    "Divisibility",
    "PointResult",
    "ScanReport",
    "SpectralSlice",
    "WeightPoint",
    "check_divisibility",
    "control_flag",
    "default_grid",
    "half_character",
    "integral_character",
    "involution_on_systems",
    "matching_primes",
    "partner_character",
    "scan",
    "scan_point",
    "spectral_slice",
    "tame_characters",
]
