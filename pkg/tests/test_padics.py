import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from stratlab.errors import ContextMismatch, DenominatorDivisibleByP, LevelTooLow, NoReconstruction
from stratlab.padics import (
    PadicDigits,
    PrimeField,
    binom_int,
    binom_mod_p,
    digits,
    max_denominator_bound,
    rational_reconstruct,
    vandermonde_check,
)

PRIMES = st.sampled_from([2, 3, 5, 7])


def rationals(p):
    dens = st.integers(1, 40).filter(lambda d: d % p)
    return st.builds(Fraction, st.integers(-60, 60), dens)


def test_prime_field_rejects_composites():
    with pytest.raises(ValueError):
        PrimeField(4)


def test_mixed_primes_raise():
    with pytest.raises(ContextMismatch):
        PrimeField(3)(1) + PrimeField(5)(1)


def test_field_element_arithmetic():
    f = PrimeField(7)
    assert f(3) * f(5) == 1
    assert f(3) / f(5) * f(5) == f(3)
    assert -f(2) == 5


@pytest.mark.parametrize("p", [2, 3, 5])
def test_lucas_small(p):
    f = PrimeField(p)
    for a in range(40):
        for b in range(a + 1):
            assert binom_mod_p(a, b, f).value == math.comb(a, b) % p


def test_binom_examples():
    f3 = PrimeField(3)
    assert binom_mod_p(Fraction(1, 2), 1, f3) == 2
    assert binom_mod_p(Fraction(1, 2), 3, f3) == 1
    assert binom_mod_p(-1, 5, PrimeField(5)) == (-1) ** 5 % 5


@given(st.integers(-500, 500), st.integers(0, 60))
def test_binom_negative_integers(k, a):
    # binom(k, a) for negative k via the reflection formula
    exact = math.comb(k, a) if k >= 0 else (-1) ** a * math.comb(a - k - 1, a)
    assert binom_int(k, a, 3) == exact % 3


def test_denominator_divisible_by_p():
    with pytest.raises(DenominatorDivisibleByP):
        digits(Fraction(1, 3), 2, PrimeField(3))


def test_digits_of_half_base_three():
    assert digits(Fraction(1, 2), 3, PrimeField(3)).digits == (2, 1, 1, 1)
    assert str(digits(Fraction(1, 2), 2, PrimeField(3))) == "(2,1,1)"


@given(PRIMES.flatmap(lambda p: st.tuples(st.just(p), rationals(p), st.integers(0, 8))))
def test_digits_are_binomials(args):
    p, a, level = args
    f = PrimeField(p)
    d = digits(a, level, f)
    assert d.digits == tuple(binom_mod_p(a, p**n, f).value for n in range(level + 1))
    # digits reconstruct alpha modulo p^(level+1)
    assert (a.numerator - d.value() * a.denominator) % p ** (level + 1) == 0


def test_reconstruction_examples():
    d = PadicDigits((2, 1, 1, 1), 3)
    assert rational_reconstruct(d, 6) == Fraction(1, 2)
    with pytest.raises(LevelTooLow):
        rational_reconstruct(d, 10)


def test_reconstruction_failure():
    # 7 mod 81 has no representative a/b with |a|, b <= 6
    with pytest.raises(NoReconstruction):
        rational_reconstruct(PadicDigits.from_int(7, 3, 3), 6)


@given(PRIMES.flatmap(lambda p: st.tuples(st.just(p), rationals(p))))
def test_reconstruction_inverts_digits(args):
    p, a = args
    bound = max(abs(a.numerator), a.denominator)
    level = 0
    while p ** (level + 1) <= 2 * bound * bound:
        level += 1
    assert rational_reconstruct(digits(a, level, PrimeField(p)), bound) == a


def test_max_denominator_bound():
    assert max_denominator_bound(3, 3) == 6
    assert max_denominator_bound(2, 0) == 0
    for p, lv in [(2, 5), (3, 4), (5, 2)]:
        b = max_denominator_bound(p, lv)
        assert p ** (lv + 1) > 2 * b * b
        assert p ** (lv + 1) <= 2 * (b + 1) ** 2


@given(PRIMES.flatmap(lambda p: st.tuples(st.just(p), rationals(p), rationals(p), st.integers(0, 30))))
def test_vandermonde(args):
    p, a, b, n = args
    lhs, rhs = vandermonde_check(a, b, n, PrimeField(p))
    assert lhs == rhs


def test_digit_vector_arithmetic():
    d = PadicDigits.from_int(14, 3, 2)
    assert d.digits == (2, 1, 1)
    assert d.shift(1).digits == (0, 2, 1)
    assert d.scale(2).digits == (1, 0, 0)
    assert (d + d).digits == (1, 0, 0)


def test_product_congruence_counterexample():
    # binom(9, 4) = 126 is even, but the digit convolution of 3 * 3 gives 1
    from stratlab.padics import product_check
    lhs, rhs = product_check(3, 3, 2, PrimeField(2))
    assert (lhs.value, rhs.value) == (0, 1)
    # multiplying by 1 never carries
    for d in range(4):
        lhs, rhs = product_check(Fraction(1, 3), 1, d, PrimeField(5))
        assert lhs == rhs
