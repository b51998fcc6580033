"""Command line interface: ``halfwt <command> ...``.

Exit codes: 0 success, 1 usage error, 2 dimension mismatch, 3 span
deficiency, 4 invariant violation in a scan.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from .arith import primes_up_to
from .dirichlet import DirichletChar, characters_mod, chi_minus4, kronecker_character
from .hecke import charpoly, eigensystem_from_form, hecke_operator, required_precision
from .qseries import character_sturm_bound, eisenstein, theta_psi, u_ell, v_ell
from .shimura import LiftError, lift_from_eigensystem
from .spaces import CACHE_ENV, OracleMismatch, SpanDeficiency, build_space

EXIT_OK, EXIT_USAGE, EXIT_ORACLE, EXIT_SPAN, EXIT_INVARIANT = 0, 1, 2, 3, 4

log = logging.getLogger("halfwt")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_weight(text: str) -> int:
    """'3/2' -> 3 and '2' -> 4: the numerator of the weight over 2."""
    try:
        w = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot read weight {text!r}") from None
    if w.denominator not in (1, 2) or w <= 0:
        raise UsageError(f"weight {text} is neither integral nor half-integral")
    k2 = int(2 * w)
    if k2 % 2 == 1 and k2 < 3:
        raise UsageError("half-integral weights below 3/2 are outside the supported range")
    if k2 % 2 == 0 and k2 < 4:
        raise UsageError("integral weight must be at least 2")
    return k2


def parse_char(text: str | None, modulus: int) -> DirichletChar:
    """A character label 'M:e1,e2,...' or 'kronecker:D'; default trivial."""
    if text is None:
        return DirichletChar.trivial(modulus)
    try:
        if text.startswith("kronecker:"):
            chi = kronecker_character(int(text.split(":", 1)[1]))
        else:
            chi = DirichletChar.from_label(text)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"bad character {text!r}: {exc}") from None
    if modulus % chi.modulus:
        raise UsageError(f"character modulus {chi.modulus} does not divide {modulus}")
    return chi.extend(modulus)


def parse_psi(text: str) -> DirichletChar:
    try:
        psi = kronecker_character(int(text))
    except ValueError:
        psi = parse_char(text, DirichletChar.from_label(text).modulus) if ":" in text else None
    if psi is None:
        raise UsageError(f"bad character {text!r}")
    psi = psi.primitive()
    if psi.is_even():
        raise UsageError("theta_psi needs an odd character")
    return psi


def parse_grid(text: str) -> list[int]:
    try:
        lams = sorted({int(x) for x in text.split(",") if x.strip()})
    except ValueError:
        raise UsageError(f"bad grid {text!r}; expected comma-separated lambdas") from None
    if not lams or min(lams) < 1:
        raise UsageError("grid lambdas must be positive")
    return lams


def _odd_prime(p: int) -> int:
    from .arith import is_prime

    if p == 2 or not is_prime(p):
        raise UsageError(f"p = {p} is not an odd prime")
    return p


# ------------------------------------------------------------------ commands

def cmd_space(args) -> int:
    k2 = parse_weight(args.weight)
    eps = parse_char(args.char, args.level)
    if k2 % 2 and args.level % 4:
        raise UsageError("half-integral levels must be divisible by 4")
    space = build_space(k2, args.level, eps, not args.full, args.prec)
    print(f"{space!r}")
    print(f"dimension {space.dimension}")
    print(f"key {json.dumps(list(space.key()))}")
    if k2 == 3:
        for note in _theta_notes(space):
            print(note)
    return EXIT_OK


def _theta_notes(space) -> list[str]:
    out = []
    r = 1
    while 4 * r * r <= space.level:
        if space.level % (4 * r * r) == 0:
            for psi in characters_mod(r):
                if not psi.is_primitive() or psi.is_even():
                    continue
                if (psi * chi_minus4()).extend(space.level) != space.character:
                    continue
                member = space.contains(theta_psi(psi, space.prec))
                out.append(f"theta_psi for psi = {psi.label}: {'in' if member else 'not in'} the space")
        r += 1
    return out


def _operator_space(args):
    k2 = parse_weight(args.weight)
    eps = parse_char(args.char, args.level)
    ell = args.ell
    step = ell * ell if k2 % 2 else ell
    base = build_space(k2, args.level, eps, not args.full, args.prec)
    need = required_precision(base, step)
    space = base if base.prec >= need else build_space(k2, args.level, eps, not args.full, need)
    return space, hecke_operator(space, ell)


def cmd_hecke(args) -> int:
    space, op = _operator_space(args)
    print(json.dumps(op.to_json(), indent=2))
    return EXIT_OK


def cmd_charpoly(args) -> int:
    space, op = _operator_space(args)
    print(f"{op.label} on {space!r}")
    print(charpoly(op, fredholm=args.fredholm))
    return EXIT_OK


def _theta_level(psi: DirichletChar, p: int) -> int:
    r = psi.modulus
    return 4 * r * r * p if r % p else 4 * r * r


def cmd_lift(args) -> int:
    p = _odd_prime(args.p)
    psi = parse_psi(args.psi)
    record = theta_lift(psi, p, args.prec)
    print(json.dumps(record.to_json(terms=args.terms), indent=2, sort_keys=True))
    return EXIT_OK


def theta_lift(psi: DirichletChar, p: int, prec: int):
    """Eigenvalue-driven lift of theta_psi at level 4 r^2 p, checked at 2 r^2 p."""
    level = _theta_level(psi, p)
    eps = (psi * chi_minus4()).extend(level)
    # membership is only meaningful past the Sturm bound of the larger level
    work = max(prec, character_sturm_bound(4, level) + 1)
    th = theta_psi(psi, 2 * work * work + 1)
    src = eigensystem_from_form(th, 3, level, eps, primes_up_to(work - 1), p=p)
    tlevel = level // 2
    teps = (eps * eps).restrict(tlevel) if (eps * eps).conductor() and tlevel % (eps * eps).conductor() == 0 else None
    if teps is None:
        raise LiftError("target nebentypus does not descend to level 2 r^2 p")
    hecke = [ell for ell in primes_up_to(13) if tlevel % ell]
    bound = character_sturm_bound(4, tlevel)
    target = build_space(4, tlevel, teps, False, max(work, hecke[0] * bound))
    try:
        record = lift_from_eigensystem(src, target, work, hecke_primes=hecke[:1])
    except LiftError as exc:
        log.warning("%s; retrying at level %d", exc, level)
        fallback = build_space(4, level, eps * eps, False, max(work, hecke[0] * character_sturm_bound(4, level)))
        record = lift_from_eigensystem(src, fallback, work, hecke_primes=hecke[:1])
        record = replace(record, notes=record.notes + (f"no lift at level {tlevel}; found at level {level}",))
    return replace(record, target_qexp=record.target_qexp.truncate(prec))


def cmd_theta_example(args) -> int:
    p = _odd_prime(args.p)
    psi = parse_psi(args.psi)
    for line in theta_example(psi, p, args.prec):
        print(line)
    return EXIT_OK


def theta_example(psi: DirichletChar, p: int, prec: int) -> list[str]:
    """The report printed by ``theta-example``."""
    r = psi.modulus
    lines = []
    th = theta_psi(psi, max(prec, 2) * 200)
    lines.append(f"theta_psi = {th.to_string(8)}")
    level = _theta_level(psi, p)
    eps = (psi * chi_minus4()).extend(level)
    lines.append(f"level {level}, nebentypus {eps.label}")
    if r % p == 0:
        image = u_ell(th, p * p)
        lines.append(f"U_{p * p} theta_psi = {'0' if image.is_zero() else image.to_string(6)}")
        lines.append(f"p = {p} divides the conductor {r}: theta_psi is in the kernel of U_{p * p}")
        lines.append("no finite-slope system: theta_psi gives no point on the half-integral eigencurve")
        return lines
    table = [ell for ell in primes_up_to(13)]
    sysm = eigensystem_from_form(th, 3, level, eps, table, p=p)
    lines.append("eigenvalues:")
    for label, v in sorted(sysm.eigenvalues, key=lambda kv: int(kv[0].split("(")[1].split("^")[0])):
        ell = int(label.split("(")[1].split("^")[0])
        expected = (1 + ell) * psi(ell) if label.startswith("T") else None
        note = f"  ((1+l)psi(l) = {expected})" if expected is not None else ""
        lines.append(f"  {label}: {v[0]}{note}")
    rec = theta_lift(psi, p, prec)
    lift = rec.target_qexp
    lines.append(f"lift = {lift.to_string(10)}")
    lines.append(f"lift flags: {dict(sorted(rec.verified.items()))}")
    e = eisenstein(psi, psi, 2, prec * p)
    e = e.scale(1 / e[1]) if not e[1].is_zero() else e
    estar = e.truncate(prec) - v_ell(e.truncate(-(-prec // p)), p).truncate(prec).scale(psi(p))
    diff = [n for n in range(1, prec) if lift[n] != estar[n]]
    lines.append(f"E_psi - psi(p) V_p E_psi = {estar.to_string(10)}")
    if diff:
        lines.append(f"lift = E*_psi: False (first difference at n = {diff[0]}: {lift[diff[0]]} vs {estar[diff[0]]})")
    else:
        lines.append("lift = E*_psi: True")
    slope = sysm.slope
    bound = 2 * 1 - 1
    flag = "critical" if slope == bound else ("smallslope" if slope < bound else "largeslope")
    lines.append(f"slope {slope}, 2 lambda - 1 = {bound}: {flag}")
    return lines


def cmd_scan(args) -> int:
    from .eigencurve import default_grid, scan
    from .plotting import plot_slopes

    p = _odd_prime(args.p)
    if args.N < 1 or args.N % p == 0:
        raise UsageError("N must be a positive integer prime to p")
    lams = parse_grid(args.grid)
    chars = [parse_char(c, 4 * args.N) for c in args.char] if args.char else None
    out = Path(args.out)
    report = scan(default_grid(p, lams), args.N, chars, seed=args.seed, match_count=args.match_primes)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"scan_p{p}_N{args.N}"
    _atomic_write(out / f"{stem}.json", report.dumps())
    _atomic_write(out / f"{stem}.csv", report.to_csv())
    plot_slopes(report, out / f"{stem}.png")
    bad = [pt for pt in report.points if pt.error is not None or not pt.divisibility.ok]
    print(f"{len(report.points)} points, {len(report.matches)} matched systems, "
          f"{len(report.unmatched)} unmatched, {len(report.involution_pairs)} involution pairs")
    print(f"wrote {out / stem}.json, .csv, .png")
    if bad or not report.invariants_ok:
        print("point              status")
        for pt in bad:
            print(f"lambda={pt.weight.lam} j={pt.weight.j} chi={pt.chi.label}  {pt.error or 'divisibility fails'}")
        for u in report.unmatched:
            print(f"{u['point']} system {u['half_index']}  unmatched ({u['control']})")
        for f in report.involution_failures:
            print(f"{f['from']} system {f['index']}  {f['problem']}")
        return EXIT_INVARIANT
    return EXIT_OK


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


# ------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="halfwt", description="Half-integral weight forms, Shimura lifts and slopes.")
    parser.add_argument("--cache-dir", help=f"space cache directory (default: ${CACHE_ENV})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def space_args(sp, op=False):
        sp.add_argument("--level", type=int, required=True)
        sp.add_argument("--weight", required=True, help="e.g. 3/2 or 2")
        sp.add_argument("--char", help="character label M:e1,... or kronecker:D")
        sp.add_argument("--full", action="store_true", help="the full space instead of cusp forms")
        sp.add_argument("--prec", type=int)
        if op:
            sp.add_argument("--ell", type=int, required=True, help="prime of the operator")

    sp = sub.add_parser("space", help="build a space and print its dimension")
    space_args(sp)
    sp.set_defaults(func=cmd_space)

    sp = sub.add_parser("hecke", help="matrix of the Hecke operator at a prime")
    space_args(sp, op=True)
    sp.set_defaults(func=cmd_hecke)

    sp = sub.add_parser("charpoly", help="characteristic polynomial of a Hecke operator")
    space_args(sp, op=True)
    sp.add_argument("--fredholm", action="store_true", help="det(1 - T M) instead of det(T - M)")
    sp.set_defaults(func=cmd_charpoly)

    sp = sub.add_parser("lift", help="Shimura lift of theta_psi from its eigenvalues")
    sp.add_argument("--p", type=int, default=5)
    sp.add_argument("--psi", default="-3", help="discriminant or character label of psi")
    sp.add_argument("--prec", type=int, default=50)
    sp.add_argument("--terms", type=int, default=30)
    sp.set_defaults(func=cmd_lift)

    sp = sub.add_parser("scan", help="slopes, divisibility and matching over a weight grid")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--N", type=int, default=1)
    sp.add_argument("--grid", default="1,2,3", help="comma-separated lambdas; all j are used")
    sp.add_argument("--char", action="append", help="tame character mod 4N (repeatable; default all)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--match-primes", type=int, default=2)
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("theta-example", help="the theta_psi example end to end")
    sp.add_argument("--p", type=int, default=5)
    sp.add_argument("--psi", default="-3")
    sp.add_argument("--prec", type=int, default=50)
    sp.set_defaults(func=cmd_theta_example)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.cache_dir:
        os.environ[CACHE_ENV] = args.cache_dir
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"halfwt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OracleMismatch as exc:
        print(f"halfwt: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except SpanDeficiency as exc:
        print(f"halfwt: span deficiency: {exc}", file=sys.stderr)
        return EXIT_SPAN


if __name__ == "__main__":
    sys.exit(main())
