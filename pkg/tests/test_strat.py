from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from builders import kummer_line, poly
from stratlab.errors import ContextMismatch, LevelExceeded, NotDescendable
from stratlab.laurent import LaurentPoly, Matrix, dp_derivative
from stratlab.strat import (
    StratifiedBundle,
    cartier_descend,
    direct_sum,
    dual,
    flat_frame,
    frobenius_pullback,
    gauge,
    hom_bundle,
    horizontal_morphisms,
    horizontal_sections,
    is_horizontal_morphism,
    p_curvature_vanishes,
    tensor,
    validate,
)

HALF = Fraction(1, 2)


def half_line(level=1):
    return kummer_line([HALF], 3, level)


def test_apply_on_trivial_matches_function_derivative():
    E = StratifiedBundle.trivial(1, 3, 1)
    for k in (-4, 0, 5):
        for n in range(1, 9):
            s = (LaurentPoly.monomial(k, 1, 3),)
            assert E.apply(n, s) == (dp_derivative(s[0], n),)


def test_half_line_examples():
    E = half_line()
    e = E.monomial_section(0, 0)
    assert E.apply(1, e) == (poly("2*x^-1", 3),)
    assert E.apply(1, E.apply(1, E.apply(1, e))) == (LaurentPoly.zero(3),)


def test_level_exceeded():
    with pytest.raises(LevelExceeded):
        half_line().apply(9, half_line().monomial_section(0, 0))


@settings(max_examples=30, deadline=None)
@given(st.dictionaries(st.integers(-3, 3), st.integers(1, 2), max_size=3),
       st.integers(-3, 3), st.integers(1, 8))
def test_leibniz(coeffs, k, n):
    E = direct_sum(half_line(), StratifiedBundle.trivial(1, 3, 1))
    f = LaurentPoly(coeffs, 3)
    s = (LaurentPoly.monomial(k, 1, 3), LaurentPoly.monomial(k + 1, 2, 3))
    lhs = E.apply(n, tuple(f * c for c in s))
    rhs = [LaurentPoly.zero(3)] * 2
    for a in range(n + 1):
        t = E.apply(b, s) if (b := n - a) else s
        rhs = [r + dp_derivative(f, a) * c for r, c in zip(rhs, t)]
    assert list(lhs) == rhs


def test_table_agrees_with_composites():
    E = half_line(2)
    s = E.monomial_section(0, 2)
    for n in range(1, 27):
        assert E.apply(n, s) == E.apply_table(n, s)


def test_validate_passes_and_fails():
    assert validate(StratifiedBundle.trivial(2, 3, 1)).passed
    assert validate(half_line()).passed
    bad = StratifiedBundle(2, [Matrix.from_ints([[1]], 2)])
    rep = validate(bad)
    assert not rep.passed
    assert rep.label == "not admissible"
    assert {f["identity"] for f in rep.failures} == {"p-power: (d^(1))^2 = 0"}


def test_tensor_of_half_lines():
    E = half_line()
    T = tensor(E, E)
    assert T.D[0] == Matrix([[poly("x^-1", 3)]], 3)
    assert validate(T).passed
    assert tensor(StratifiedBundle.trivial(2, 3, 1), StratifiedBundle.trivial(3, 3, 1)) == StratifiedBundle.trivial(6, 3, 1)


def test_dual_pairing_is_horizontal():
    E = half_line()
    assert len(horizontal_sections(tensor(E, dual(E)), (-5, 5))) == 1
    F = direct_sum(E, StratifiedBundle.trivial(1, 3, 1))
    assert validate(dual(F)).passed


def test_context_mismatch():
    with pytest.raises(ContextMismatch):
        tensor(half_line(1), half_line(2))


def test_horizontal_section_counts():
    assert len(horizontal_sections(StratifiedBundle.trivial(2, 3, 1), (-5, 5))) == 2
    assert len(horizontal_sections(half_line(2), (-5, 5))) == 0
    two = kummer_line([0, HALF], 3, 2)
    assert len(horizontal_sections(two, (-5, 5))) == 1


def test_truncation_shadow_at_low_level():
    # at level 1 the congruence k = -1/2 mod 9 has solutions in the window
    assert len(horizontal_sections(half_line(1), (-5, 5))) == 2


def test_horizontal_morphisms_agree_with_hom_sections():
    E = direct_sum(half_line(), StratifiedBundle.trivial(1, 3, 1))
    ms = horizontal_morphisms(E, E, (-5, 5))
    assert len(ms) == len(horizontal_sections(hom_bundle(E, E), (-5, 5)))
    assert all(is_horizontal_morphism(E, E, T) for T in ms)


def test_gauge_is_horizontal_isomorphism():
    E = half_line()
    P = Matrix([[poly("x^2", 3)]], 3)
    G = gauge(E, P)
    assert validate(G).passed
    assert is_horizontal_morphism(G, E, P)


def test_cartier_descent_of_half_line():
    E = half_line()
    d = cartier_descend(E, (-5, 5))
    assert d.frame == Matrix([[poly("x", 3)]], 3)
    assert d.bundle.level == 0
    assert d.bundle.D[0] == Matrix([[poly("2*x^-1", 3)]], 3)
    back = frobenius_pullback(d.bundle)
    assert validate(back).passed
    assert is_horizontal_morphism(back, E, d.frame)
    iso = horizontal_sections(hom_bundle(back, E), (-5, 5))
    assert len(iso) == 1


def test_cartier_descent_of_trivial():
    d = cartier_descend(StratifiedBundle.trivial(2, 3, 1), (-5, 5))
    assert d.bundle == StratifiedBundle.trivial(2, 3, 0)


def test_nonzero_p_curvature():
    E = StratifiedBundle(3, [Matrix([[poly("1", 3)]], 3), Matrix([[LaurentPoly.zero(3)]], 3)])
    assert not p_curvature_vanishes(E)
    with pytest.raises(NotDescendable):
        cartier_descend(E, (-5, 5))


def test_flat_frame_polynomial_mode():
    E = StratifiedBundle.trivial(2, 3, 1)
    assert flat_frame(E, 1, (0, 6), polynomial=True) == Matrix.identity(2, 3)
