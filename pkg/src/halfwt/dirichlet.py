"""Dirichlet characters on canonical generators of (Z/M)^x.

The generators follow the prime factorisation of M in increasing order:
-1 for 2^2, the pair (-1, 5) for 2^e with e >= 3, and the smallest
positive primitive root for each odd prime power.  A character is the
vector of exponents e_i with chi(g_i) = exp(2 pi i e_i / ord(g_i)).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import gcd, lcm

from .arith import CycloElem, divisors, euler_phi, factorint, is_prime, kronecker


def _crt_lift(residue: int, modulus: int, total: int) -> int:
    """The x mod total with x = residue mod modulus and x = 1 mod total/modulus."""
    other = total // modulus
    if other == 1:
        return residue % total
    # x = residue + modulus * t, with x = 1 mod other
    t = ((1 - residue) * pow(modulus, -1, other)) % other
    return (residue + modulus * t) % total


def _smallest_primitive_root(q: int, ell: int) -> int:
    phi = euler_phi(q)
    qs = [r for r, _ in factorint(phi)]
    for g in range(2, q):
        if gcd(g, q) == 1 and all(pow(g, phi // r, q) != 1 for r in qs):
            return g
    return 1


@lru_cache(maxsize=None)
def canonical_generators(modulus: int) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    """(generators mod M, their orders, the prime-power modulus each lives in)."""
    gens, orders, locals_ = [], [], []
    for ell, e in factorint(modulus) if modulus > 1 else ():
        q = ell**e
        if ell == 2:
            if e == 1:
                continue
            gens.append(_crt_lift(q - 1, q, modulus))
            orders.append(2)
            locals_.append(q)
            if e >= 3:
                gens.append(_crt_lift(5, q, modulus))
                orders.append(q // 4)
                locals_.append(q)
        else:
            g = _smallest_primitive_root(q, ell)
            gens.append(_crt_lift(g, q, modulus))
            orders.append(euler_phi(q))
            locals_.append(q)
    return tuple(gens), tuple(orders), tuple(locals_)


@lru_cache(maxsize=None)
def _log_table(modulus: int) -> dict[int, tuple[int, ...]]:
    gens, orders, _ = canonical_generators(modulus)
    table: dict[int, tuple[int, ...]] = {}
    for exps in product(*(range(n) for n in orders)):
        x = 1
        for g, a in zip(gens, exps):
            x = x * pow(g, a, modulus) % modulus
        table[x % modulus if modulus > 1 else 0] = exps
    return table


def discrete_log(a: int, modulus: int) -> tuple[int, ...]:
    if gcd(a, modulus) != 1:
        raise ValueError(f"{a} is not a unit modulo {modulus}")
    return _log_table(modulus)[a % modulus if modulus > 1 else 0]


@dataclass(frozen=True)
class DirichletChar:
    """A Dirichlet character modulo ``modulus``.

    >>> chi = DirichletChar.from_label("3:1")
    >>> chi(2)
    CycloElem(-1)
    """

    modulus: int
    exponents: tuple[int, ...]

    def __post_init__(self):
        if self.modulus < 1:
            raise ValueError("modulus must be positive")
        _, orders, _ = canonical_generators(self.modulus)
        if len(self.exponents) != len(orders):
            raise ValueError(
                f"modulus {self.modulus} has {len(orders)} canonical generators, "
                f"got {len(self.exponents)} exponents"
            )
        object.__setattr__(
            self, "exponents", tuple(int(e) % n for e, n in zip(self.exponents, orders))
        )

    # construction
    @classmethod
    def trivial(cls, modulus: int = 1) -> "DirichletChar":
        return cls(modulus, (0,) * len(canonical_generators(modulus)[0]))

    @classmethod
    def from_phases(cls, modulus: int, phase) -> "DirichletChar":
        """Character whose value at each canonical generator g is exp(2 pi i phase(g))."""
        gens, orders, _ = canonical_generators(modulus)
        exps = []
        for g, n in zip(gens, orders):
            x = Fraction(phase(g)) * n
            if x.denominator != 1:
                raise ValueError(f"phase at generator {g} is not an {n}-th root of unity")
            exps.append(int(x))
        return cls(modulus, tuple(exps))

    @classmethod
    def from_label(cls, label: str) -> "DirichletChar":
        try:
            mod_s, _, exp_s = label.strip().partition(":")
            modulus = int(mod_s)
            exps = tuple(int(x) for x in exp_s.split(",") if x.strip()) if exp_s.strip() else ()
        except ValueError as exc:
            raise ValueError(f"malformed character label {label!r}; expected 'M:e1,e2,...'") from exc
        if modulus < 1:
            raise ValueError(f"malformed character label {label!r}: modulus must be positive")
        return cls(modulus, exps)

    @classmethod
    def from_conrey(cls, modulus: int, n: int) -> "DirichletChar":
        if gcd(n, modulus) != 1:
            raise ValueError("Conrey index must be a unit")
        logs = discrete_log(n, modulus)
        return cls(modulus, logs)

    # basic data
    @property
    def label(self) -> str:
        return f"{self.modulus}:" + ",".join(str(e) for e in self.exponents)

    @property
    def conrey_label(self) -> str:
        """Conrey-style alias "M.n" with n = prod g_i^{e_i}."""
        gens, _, _ = canonical_generators(self.modulus)
        n = 1
        for g, e in zip(gens, self.exponents):
            n = n * pow(g, e, self.modulus) % self.modulus
        return f"{self.modulus}.{n % self.modulus if self.modulus > 1 else 1}"

    @property
    def generator_orders(self) -> tuple[int, ...]:
        return canonical_generators(self.modulus)[1]

    @property
    def value_order(self) -> int:
        out = 1
        for e, n in zip(self.exponents, self.generator_orders):
            out = lcm(out, n // gcd(n, e))
        return out

    order = value_order

    def is_trivial(self) -> bool:
        return all(e == 0 for e in self.exponents)

    def phase(self, a: int) -> Fraction | None:
        """chi(a) = exp(2 pi i phase), or None when gcd(a, M) > 1."""
        if gcd(a, self.modulus) != 1:
            return None
        if self.modulus == 1:
            return Fraction(0)
        logs = discrete_log(a, self.modulus)
        s = sum((Fraction(e * x, n) for e, x, n in zip(self.exponents, logs, self.generator_orders)), Fraction(0))
        return s - (s.numerator // s.denominator)

    def __call__(self, a: int, order: int | None = None) -> CycloElem:
        m = self.value_order if order is None else order
        ph = self.phase(a)
        if ph is None:
            return CycloElem.from_rational(0, m)
        k = ph * m
        if k.denominator != 1:
            raise ValueError(f"character values do not lie in Q(zeta_{m})")
        return CycloElem.zeta(m, int(k)) if m > 2 else CycloElem.from_rational(1 if k == 0 else -1, m)

    def value_exponent(self, a: int, order: int) -> int | None:
        """k with chi(a) = zeta_order^k, None when chi(a) = 0."""
        ph = self.phase(a)
        if ph is None:
            return None
        k = ph * order
        if k.denominator != 1:
            raise ValueError(f"character values do not lie in Q(zeta_{order})")
        return int(k)

    def parity(self) -> int:
        if self.modulus <= 2:
            return 1
        return 1 if self.phase(self.modulus - 1) == 0 else -1

    def is_even(self) -> bool:
        return self.parity() == 1

    # group operations
    def extend(self, modulus: int) -> "DirichletChar":
        """The induced character modulo a multiple of the modulus."""
        if modulus % self.modulus:
            raise ValueError(f"{modulus} is not a multiple of {self.modulus}")
        if modulus == self.modulus:
            return self
        return DirichletChar.from_phases(modulus, lambda g: self.phase(g % self.modulus))

    def restrict(self, modulus: int) -> "DirichletChar":
        """The character modulo a divisor of M inducing self (requires conductor | modulus)."""
        if self.modulus % modulus:
            raise ValueError(f"{modulus} does not divide {self.modulus}")
        if self.conductor() and modulus % self.conductor():
            raise ValueError(f"conductor {self.conductor()} does not divide {modulus}")

        def phase(g: int) -> Fraction:
            lift = g
            while gcd(lift, self.modulus) != 1:
                lift += modulus
            return self.phase(lift)

        return DirichletChar.from_phases(modulus, phase)

    def __mul__(self, other: "DirichletChar") -> "DirichletChar":
        m = lcm(self.modulus, other.modulus)
        a, b = self.extend(m), other.extend(m)
        return DirichletChar(m, tuple(x + y for x, y in zip(a.exponents, b.exponents)))

    def __pow__(self, k: int) -> "DirichletChar":
        return DirichletChar(self.modulus, tuple(e * k for e in self.exponents))

    def conj(self) -> "DirichletChar":
        return self ** -1

    @lru_cache(maxsize=None)
    def conductor(self) -> int:
        for d in divisors(self.modulus):
            if all(
                self.phase(a) == 0
                for a in range(1, self.modulus + 1, d)
                if gcd(a, self.modulus) == 1
            ):
                return d
        return self.modulus

    def is_primitive(self) -> bool:
        return self.conductor() == self.modulus

    def primitive(self) -> "DirichletChar":
        return self.restrict(self.conductor())

    def same_on_units(self, other: "DirichletChar") -> bool:
        """Equality after inducing both to the lcm of the moduli."""
        m = lcm(self.modulus, other.modulus)
        return self.extend(m) == other.extend(m)

    def __str__(self):
        return self.label


def char_eval(chi: DirichletChar, a: int) -> CycloElem:
    return chi(a)


def char_product(chi1: DirichletChar, chi2: DirichletChar) -> DirichletChar:
    return chi1 * chi2


def kronecker_symbol(d: int, n: int) -> int:
    return kronecker(d, n)


def kronecker_character(d: int) -> DirichletChar:
    """The character n -> (d/n) on units, modulo |d| (d = 0, 1 mod 4) or 4|d|."""
    if d == 0:
        raise ValueError("kronecker character needs d != 0")
    modulus = abs(d) if d % 4 in (0, 1) else 4 * abs(d)
    return DirichletChar.from_phases(modulus, lambda g: Fraction(0) if kronecker(d, g) == 1 else Fraction(1, 2))


def chi_minus4() -> DirichletChar:
    return kronecker_character(-4)


def teichmuller(p: int) -> DirichletChar:
    """tau mod p with tau(g) = zeta_{p-1} on the smallest primitive root g."""
    if p == 2 or not is_prime(p):
        raise ValueError(f"teichmuller needs an odd prime, got {p}")
    return DirichletChar(p, (1,))


def crt_split(d: int, N: int, p: int) -> tuple[int, int]:
    """(d mod p, d mod 4N) for d coprime to 4Np."""
    if gcd(p, 4 * N) != 1:
        raise ValueError("p must be coprime to 4N")
    if gcd(d, 4 * N * p) != 1:
        raise ValueError(f"{d} is not coprime to {4 * N * p}")
    return d % p, d % (4 * N)


def crt_combine(d_p: int, d_tame: int, N: int, p: int) -> int:
    m = 4 * N
    t = ((d_tame - d_p) * pow(p, -1, m)) % m
    return (d_p + p * t) % (m * p)


def component_index(lam: int, j: int, p: int) -> int:
    return (lam + j) % (p - 1)


def split_character(eps: DirichletChar, N: int, p: int) -> tuple[DirichletChar, int]:
    """Write a character mod 4Np as chi * tau^j with chi mod 4N."""
    level = 4 * N * p
    eps = eps.extend(level) if eps.modulus != level else eps
    chi = DirichletChar.from_phases(4 * N, lambda g: eps.phase(crt_combine(1, g, N, p)))
    g = canonical_generators(p)[0][0]
    j = int(eps.phase(crt_combine(g, 1, N, p)) * (p - 1))
    return chi, j


def characters_mod(modulus: int) -> list[DirichletChar]:
    """All characters modulo ``modulus`` in lexicographic exponent order."""
    orders = canonical_generators(modulus)[1]
    return [DirichletChar(modulus, exps) for exps in product(*(range(n) for n in orders))]


def primitive_characters(modulus: int) -> list[DirichletChar]:
    return [c for c in characters_mod(modulus) if c.is_primitive()]
