from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stratlab.covers import artin_schreier_pushforward, kummer_pushforward, pullback_kummer
from stratlab.errors import ExponentNotPresent, NonzeroExponent, NotSemisimple, UnreconstructableExponent
from stratlab.laurent import Matrix, PolyLattice, rank_mod
from stratlab.loglat import (
    INCONCLUSIVE,
    RS,
    WILD,
    LogLattice,
    NotFoundWithinBounds,
    TauSection,
    exponents,
    exponents_mod_Z_agree,
    find_log_lattice,
    frame_isomorphism,
    promote_zero_exponents,
    residue_decomposition,
    rs_verdict,
    saturate,
    shift_exponent,
    tau_extend,
    twist,
)
from stratlab.padics import PadicDigits, PrimeField, digits
from stratlab.strat import (
    StratifiedBundle,
    hom_bundle,
    horizontal_sections,
    is_horizontal_morphism,
    matrix_to_section,
    validate,
)

F = Fraction
HALF = F(1, 2)


def rationals(rep):
    return Counter({e.rational: e.multiplicity for e in rep.entries})


def digit_set(L):
    return exponents(L).multiset()


def test_trivial_decomposition():
    dec = residue_decomposition(LogLattice.trivial(3, 5, 2))
    assert dec.multiplicities() == {PadicDigits((0, 0, 0), 5): 3}


def test_kummer_blocks_level_one():
    L = kummer_pushforward(2, 3, 1)
    assert [g.residue() for g in L.L] == [[[0, 0], [0, 2]], [[0, 0], [0, 1]]]
    dec = residue_decomposition(L)
    assert dec.multiplicities() == {PadicDigits((0, 0), 3): 1, PadicDigits((2, 1), 3): 1}


def test_constant_rank_one():
    L = LogLattice(5, [Matrix.from_ints([[3]], 5)])
    assert residue_decomposition(L).multiplicities() == {PadicDigits((3,), 5): 1}


def test_not_semisimple():
    # a nilpotent Jordan block has no eigenbasis
    L = LogLattice(3, [Matrix.from_ints([[0, 1], [0, 0]], 3)])
    with pytest.raises(NotSemisimple):
        residue_decomposition(L)
    assert L.check()


def test_kummer_exponents_level_two():
    assert rationals(exponents(kummer_pushforward(2, 3, 2))) == Counter({0: 1, HALF: 1})


def test_twist_examples():
    one = LogLattice.trivial(1, 3, 2)
    assert rationals(exponents(twist(one, 2))) == Counter({-2: 1})
    assert digit_set(twist(one, 1)) == Counter({PadicDigits((2, 2, 2), 3): 1})
    assert twist(one, 0) is one
    L = kummer_pushforward(2, 3, 2)
    assert twist(twist(L, 2), -2) == L


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([(2, 3), (4, 3), (3, 5), (3, 2)]), st.integers(-6, 6))
def test_twist_subtracts_digitwise(ep, a):
    e, p = ep
    L = kummer_pushforward(e, p, 2)
    before = digit_set(L)
    after = digit_set(twist(L, a))
    assert after == Counter({d.shift(-a): k for d, k in before.items()})


def test_shift_examples():
    one = LogLattice.trivial(1, 3, 2)
    assert rationals(exponents(shift_exponent(one, PadicDigits((0, 0, 0), 3)))) == Counter({1: 1})
    L = kummer_pushforward(2, 3, 3)
    s = shift_exponent(L, digits(HALF, 3, PrimeField(3)))
    assert rationals(exponents(s)) == Counter({0: 1, F(3, 2): 1})
    back = twist(shift_exponent(one, PadicDigits((0, 0, 0), 3)), 1)
    assert digit_set(back) == digit_set(one)
    with pytest.raises(ExponentNotPresent):
        shift_exponent(one, PadicDigits((1, 0, 0), 3))


def test_moves_keep_the_bundle():
    L = kummer_pushforward(2, 3, 2)
    M = shift_exponent(twist(L, 1), digits(-HALF, 2, PrimeField(3)))
    T = frame_isomorphism(L, L)
    assert T == Matrix.identity(2, 3)
    # the moved lattice's frame is a horizontal map into the original bundle
    assert is_horizontal_morphism(M.bundle(), L.bundle(), M.frame)
    assert validate(M.bundle()).passed
    assert not M.check()


def test_tau_examples():
    line = LogLattice(3, [Matrix.from_ints([[1]], 3), Matrix.from_ints([[1]], 3), Matrix.from_ints([[1]], 3)])
    assert rationals(exponents(line)) == Counter({-HALF: 1})
    assert rationals(exponents(tau_extend(line))) == Counter({HALF: 1})
    L = kummer_pushforward(2, 3, 3)
    assert tau_extend(L) is L
    assert rationals(exponents(tau_extend(twist(L, 3)))) == Counter({0: 1, HALF: 1})


def test_explicit_tau():
    L = kummer_pushforward(2, 3, 3)
    tau = TauSection.from_mapping({0: -1, HALF: F(5, 2)}, 3)
    out = tau_extend(L, tau)
    assert rationals(exponents(out)) == Counter({-1: 1, F(5, 2): 1})
    with pytest.raises(ValueError):
        TauSection.from_mapping({HALF: F(1, 4)}, 3)


def test_tau_needs_reconstruction():
    L = kummer_pushforward(5, 2, 3)
    with pytest.raises(UnreconstructableExponent):
        tau_extend(L)


@settings(max_examples=15, deadline=None)
@given(st.integers(-2, 2), st.integers(-2, 2))
def test_tau_uniqueness(a, b):
    L = kummer_pushforward(2, 3, 4)
    t1 = tau_extend(twist(L, a))
    t2 = tau_extend(twist(L, b))
    assert digit_set(t1) == digit_set(t2)
    assert tau_extend(t1) is t1
    T = frame_isomorphism(t1, t2)
    assert T is not None
    assert is_horizontal_morphism(t1.bundle(), t2.bundle(), T)


def test_mod_z_agreement():
    L = kummer_pushforward(2, 3, 4)
    assert exponents_mod_Z_agree(L, L)
    assert exponents_mod_Z_agree(L, twist(L, 5))
    assert exponents_mod_Z_agree(L, shift_exponent(L, digits(HALF, 4, PrimeField(3))))
    assert not exponents_mod_Z_agree(L, LogLattice.trivial(2, 3, 4))


def test_saturation_examples():
    s = saturate(StratifiedBundle.trivial(2, 3, 1))
    assert s.found and s.iterations == 1 and s.lattice == PolyLattice.standard(2, 3)
    L = find_log_lattice(kummer_pushforward(2, 3, 2).bundle())
    assert rationals(exponents(L)) == Counter({0: 1, HALF: 1})
    traces = [saturate(artin_schreier_pushforward("x^-1", 2, M)).lattice.pole_order for M in range(4)]
    assert traces == [1, 2, 4, 8]


def test_saturation_bound_failure():
    E = artin_schreier_pushforward("x^-1", 2, 3)
    out = find_log_lattice(E, max_pole=3)
    assert isinstance(out, NotFoundWithinBounds)
    assert out.pole_trace[-1] > 3


def test_rs_verdicts():
    r = rs_verdict(kummer_pushforward(2, 3, 2).bundle())
    assert r.verdict == RS and r.stable_from == 0
    assert rationals(r.exponents) == Counter({0: 1, HALF: 1})
    w = rs_verdict(artin_schreier_pushforward("x^-1", 2, 3))
    assert w.verdict == WILD and w.pole_trace == [1, 2, 4, 8]
    t = rs_verdict(StratifiedBundle.trivial(1, 5, 1))
    assert t.verdict == RS and rationals(t.exponents) == Counter({0: 1})
    tight = rs_verdict(artin_schreier_pushforward("x^-1", 2, 2), max_pole=1)
    assert tight.verdict in (WILD, INCONCLUSIVE)
    assert tight.parameters["max_pole"] == 1


def test_promote_examples():
    G = promote_zero_exponents(LogLattice.trivial(2, 3, 2))
    assert G == StratifiedBundle.trivial(2, 3, 2)
    P = tau_extend(pullback_kummer(kummer_pushforward(2, 3, 2), 2))
    G = promote_zero_exponents(P)
    assert G.is_pole_free() and validate(G).passed
    assert len(horizontal_sections(G, (-5, 5))) == 2
    with pytest.raises(NonzeroExponent):
        promote_zero_exponents(shift_exponent(LogLattice.trivial(1, 3, 1), PadicDigits((0, 0), 3)))


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([(2, 3), (4, 3), (3, 5), (5, 2)]), st.integers(0, 3))
def test_residue_acts_by_digits(ep, M):
    e, p = ep
    L = kummer_pushforward(e, p, M)
    dec = residue_decomposition(L)
    assert sum(dec.multiplicities().values()) == e
    for d, W in dec.blocks.items():
        for m, g in enumerate(L.L):
            R = np.array(g.residue(), dtype=np.int64)
            assert not ((R @ W - d.digits[m] * W) % p).any()


def test_frame_isomorphism_matches_hom_solve():
    L = kummer_pushforward(2, 3, 2)
    t1, t2 = tau_extend(twist(L, 1)), tau_extend(twist(L, -1))
    T = frame_isomorphism(t1, t2)
    basis = horizontal_sections(hom_bundle(t1.bundle(), t2.bundle()), (-4, 4))
    target = matrix_to_section(T)

    def vec(s):
        return [f.coeff(k) for f in s for k in range(-4, 5)]

    A = np.array([vec(s) for s in basis], dtype=np.int64)
    assert rank_mod(np.vstack([A, [vec(target)]]), 3) == rank_mod(A, 3)
