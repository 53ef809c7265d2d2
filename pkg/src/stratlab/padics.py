"""Prime-field arithmetic and binomial coefficients of p-adic integers.

Rationals with denominator prime to ``p`` are handled exactly through their
eventually periodic base-``p`` digit streams, so ``binom(alpha, k) mod p`` is
available for every ``alpha`` in ``Z_(p)`` via Lucas' theorem.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Union

from .errors import ContextMismatch, DenominatorDivisibleByP, LevelTooLow, NoReconstruction

Number = Union[int, Fraction]

# Exponents are plain Fractions; membership in Z_(p) is checked at use.
ExponentRational = Fraction


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class PrimeField:
    """Arithmetic context for F_p; every operation takes one explicitly."""

    p: int

    def __post_init__(self):
        if not isinstance(self.p, int) or not _is_prime(self.p):
            raise ValueError(f"{self.p!r} is not a prime")

    def __call__(self, value: int) -> "PrimeFieldElement":
        return PrimeFieldElement(value % self.p, self.p)

    def inv(self, value: int) -> int:
        value %= self.p
        if value == 0:
            raise ZeroDivisionError("0 has no inverse in F_p")
        return pow(value, -1, self.p)

    def check(self, p: int) -> None:
        if p != self.p:
            raise ContextMismatch(f"prime {p} used in a context for p={self.p}")


@dataclass(frozen=True)
class PrimeFieldElement:
    value: int
    p: int

    def __post_init__(self):
        if not 0 <= self.value < self.p:
            raise ValueError(f"{self.value} not reduced mod {self.p}")

    def _coerce(self, other) -> int:
        if isinstance(other, PrimeFieldElement):
            if other.p != self.p:
                raise ContextMismatch(f"cannot combine F_{self.p} and F_{other.p}")
            return other.value
        if isinstance(other, int):
            return other
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else PrimeFieldElement((self.value + o) % self.p, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else PrimeFieldElement((self.value - o) % self.p, self.p)

    def __rsub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else PrimeFieldElement((o - self.value) % self.p, self.p)

    def __mul__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else PrimeFieldElement((self.value * o) % self.p, self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return PrimeFieldElement((-self.value) % self.p, self.p)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return PrimeFieldElement(self.value * pow(o % self.p, -1, self.p) % self.p, self.p)

    def __eq__(self, other):
        if isinstance(other, PrimeFieldElement):
            return self.p == other.p and self.value == other.value
        if isinstance(other, int):
            return (self.value - other) % self.p == 0
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.p))

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value} (mod {self.p})"


@dataclass(frozen=True)
class PadicDigits:
    """Truncated base-p expansion ``(c_0, ..., c_M)`` of an element of Z_p."""

    digits: tuple[int, ...]
    p: int

    def __post_init__(self):
        if any(not 0 <= c < self.p for c in self.digits):
            raise ValueError(f"digits {self.digits} out of range for p={self.p}")

    @property
    def level(self) -> int:
        return len(self.digits) - 1

    @property
    def modulus(self) -> int:
        return self.p ** len(self.digits)

    def value(self) -> int:
        """The integer in ``[0, p^(M+1))`` with these digits."""
        return sum(c * self.p**n for n, c in enumerate(self.digits))

    @classmethod
    def from_int(cls, value: int, p: int, level: int) -> "PadicDigits":
        value %= p ** (level + 1)
        out = []
        for _ in range(level + 1):
            value, c = divmod(value, p)
            out.append(c)
        return cls(tuple(out), p)

    def __add__(self, other: "PadicDigits") -> "PadicDigits":
        if other.p != self.p or other.level != self.level:
            raise ContextMismatch("digit vectors of different context")
        return PadicDigits.from_int(self.value() + other.value(), self.p, self.level)

    def shift(self, n: int) -> "PadicDigits":
        """Digits of ``self + n`` for an integer ``n``."""
        return PadicDigits.from_int(self.value() + n, self.p, self.level)

    def scale(self, n: int) -> "PadicDigits":
        return PadicDigits.from_int(self.value() * n, self.p, self.level)

    def __str__(self):
        return "(" + ",".join(map(str, self.digits)) + ")"


def as_exponent(alpha: Number, field: PrimeField) -> Fraction:
    """Normalize ``alpha`` to a Fraction in Z_(p)."""
    alpha = Fraction(alpha)
    if alpha.denominator % field.p == 0:
        raise DenominatorDivisibleByP(f"{alpha} is not in Z_({field.p})")
    return alpha


def digit_stream(alpha: Number, field: PrimeField) -> Iterator[int]:
    """Yield the base-p digits of ``alpha`` forever (subtract digit, divide by p)."""
    a = as_exponent(alpha, field)
    p = field.p
    num, den = a.numerator, a.denominator
    inv_den = pow(den % p, -1, p)
    while True:
        c = num * inv_den % p
        yield c
        num = (num - c * den) // p


@lru_cache(maxsize=4096)
def _digits_cached(num: int, den: int, p: int, n: int) -> tuple[int, ...]:
    if den == 1:
        v = num % p**n
        out = []
        for _ in range(n):
            v, c = divmod(v, p)
            out.append(c)
        return tuple(out)
    stream = digit_stream(Fraction(num, den), PrimeField(p))
    return tuple(next(stream) for _ in range(n))


@lru_cache(maxsize=None)
def _small_binom(p: int) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(math.comb(a, b) % p for b in range(p)) for a in range(p))


def binom_int(k: int, a: int, p: int) -> int:
    """``binom(k, a) mod p`` for any integer ``k`` (negatives via p-adic digits)."""
    if a < 0:
        return 0
    if a == 0:
        return 1
    if 0 <= k < a:
        return 0
    table = _small_binom(p)
    out = 1
    while a:
        a, d = divmod(a, p)
        k, c = divmod(k, p)
        if c < d:
            return 0
        out = out * table[c][d] % p
    return out


def binom_mod_p(alpha: Number, k: int, field: PrimeField) -> PrimeFieldElement:
    """``binom(alpha, k)`` reduced mod p, digit-wise by Lucas' theorem."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    p = field.p
    if isinstance(alpha, int):
        return PrimeFieldElement(binom_int(alpha, k, p), p)
    return PrimeFieldElement(binom_raw(as_exponent(alpha, field), k, p), p)


def binom_raw(alpha: Fraction, k: int, p: int) -> int:
    """Integer-valued core of :func:`binom_mod_p`; ``alpha`` must lie in Z_(p)."""
    if alpha.denominator == 1:
        return binom_int(alpha.numerator, k, p)
    if k == 0:
        return 1
    kd = []
    while k:
        k, d = divmod(k, p)
        kd.append(d)
    ad = _digits_cached(alpha.numerator, alpha.denominator, p, len(kd))
    table = _small_binom(p)
    out = 1
    for c, d in zip(ad, kd):
        if c < d:
            return 0
        out = out * table[c][d] % p
    return out


def digits(alpha: Number, level: int, field: PrimeField) -> PadicDigits:
    """Base-p digits ``(c_0, ..., c_level)`` of ``alpha``."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    a = as_exponent(alpha, field)
    return PadicDigits(_digits_cached(a.numerator, a.denominator, field.p, level + 1), field.p)


def max_denominator_bound(p: int, level: int) -> int:
    """Largest bound B with ``p^(level+1) > 2 B^2``."""
    m = p ** (level + 1)
    b = math.isqrt((m - 1) // 2)
    while 2 * b * b >= m:
        b -= 1
    return max(b, 0)


def rational_reconstruct(d: PadicDigits, denom_bound: int) -> Fraction:
    """Recover ``a/b`` with ``|a|, b <= denom_bound`` from its digits.

    Raises LevelTooLow when ``p^(M+1) <= 2*denom_bound^2`` (the answer would not
    be unique) and NoReconstruction when no rational within the bound matches.
    """
    if denom_bound < 1:
        raise ValueError("denom_bound must be positive")
    m = d.modulus
    if m <= 2 * denom_bound * denom_bound:
        raise LevelTooLow(f"p^(M+1)={m} does not exceed 2*{denom_bound}^2")
    a = d.value()
    r0, r1 = m, a
    t0, t1 = 0, 1
    while r1 > denom_bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        t0, t1 = t1, t0 - q * t1
    num, den = r1, t1
    if den < 0:
        num, den = -num, -den
    if (
        den == 0
        or den > denom_bound
        or abs(num) > denom_bound
        or den % d.p == 0
        or math.gcd(num, den) != 1
        or (num - a * den) % m
    ):
        raise NoReconstruction(f"no rational with bound {denom_bound} has digits {d}")
    return Fraction(num, den)


def vandermonde_check(alpha: Number, beta: Number, n: int, field: PrimeField):
    """Both sides of ``binom(a+b, n) = sum binom(a, i) binom(b, n-i)`` mod p."""
    a = as_exponent(alpha, field)
    b = as_exponent(beta, field)
    lhs = binom_mod_p(a + b, n, field)
    rhs = field(0)
    for i in range(n + 1):
        rhs = rhs + binom_mod_p(a, i, field) * binom_mod_p(b, n - i, field)
    return lhs, rhs


def product_check(alpha: Number, beta: Number, d: int, field: PrimeField):
    """Both sides of ``binom(ab, p^d) = sum_{i+j=d} binom(a, p^i) binom(b, p^j)`` mod p."""
    a = as_exponent(alpha, field)
    b = as_exponent(beta, field)
    p = field.p
    lhs = binom_mod_p(a * b, p**d, field)
    rhs = field(0)
    for i in range(d + 1):
        rhs = rhs + binom_mod_p(a, p**i, field) * binom_mod_p(b, p ** (d - i), field)
    return lhs, rhs
