"""Directed-rounded rational enclosures and certified comparisons.

The reference values come from mpmath at much higher precision than the
enclosures under test, so containment checks are meaningful.
"""

from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from walshdiv.bounds import (
    decide_less,
    exp_enclosure,
    floor_enclosed,
    ln2_enclosure,
    ln_enclosure,
    log1p_exp_enclosure,
    outward,
    pow_enclosure,
    round_down,
    round_up,
)


def mpf_ref(fn, *args, dps: int = 60) -> Fraction:
    """High-precision reference value as an exact Fraction.

    Computed at far higher precision than the enclosures under test, so the
    reference error is negligible against the enclosure width.
    """
    with mpmath.workdps(dps):
        v = fn(*[mpmath.mpf(a.numerator) / a.denominator for a in args])
        sign, man, exp, _ = v._mpf_
        f = Fraction(man) * Fraction(2) ** exp
        return -f if sign else f


def contains(enclosure, ref: Fraction) -> bool:
    lo, hi = enclosure
    return lo <= ref <= hi


rationals = st.fractions(
    min_value=Fraction(-50), max_value=Fraction(50), max_denominator=1000
)


class TestRounding:
    def test_round_down_up_bracket(self):
        x = Fraction(1, 3)
        lo, hi = round_down(x, 8), round_up(x, 8)
        assert lo <= x <= hi
        assert hi - lo <= Fraction(1, 256)
        assert lo.denominator <= 256 and hi.denominator <= 256

    def test_exact_values_round_to_themselves(self):
        x = Fraction(3, 8)
        assert round_down(x, 5) == x == round_up(x, 5)

    def test_outward_widens(self):
        lo, hi = outward(Fraction(1, 3), Fraction(2, 3), 6)
        assert lo <= Fraction(1, 3) and hi >= Fraction(2, 3)


class TestEnclosures:
    def test_ln2(self):
        assert contains(ln2_enclosure(64), mpf_ref(mpmath.log, Fraction(2)))
        lo, hi = ln2_enclosure(64)
        assert hi - lo < Fraction(1, 1 << 48)

    @pytest.mark.parametrize(
        "x",
        [
            Fraction(0),
            Fraction(1),
            Fraction(-1),
            Fraction(151, 36),
            Fraction(-151, 36),
            Fraction(1, 1000),
            Fraction(20),
            Fraction(-90),
        ],
    )
    def test_exp_contains_reference(self, x):
        assert contains(exp_enclosure(x, 96), mpf_ref(mpmath.exp, x))

    @given(rationals)
    @settings(max_examples=60, deadline=None)
    def test_exp_contains_reference_randomized(self, x):
        assert contains(exp_enclosure(x, 64), mpf_ref(mpmath.exp, x))

    def test_exp_width_shrinks_with_precision(self):
        x = Fraction(7, 3)
        widths = [hi - lo for lo, hi in (exp_enclosure(x, p) for p in (16, 64, 256))]
        assert widths[0] > widths[1] > widths[2]

    def test_exp_rejects_huge_arguments(self):
        with pytest.raises(ArithmeticError):
            exp_enclosure(Fraction(1 << 21))

    def test_exp_far_negative_is_crude_but_sound(self):
        lo, hi = exp_enclosure(Fraction(-100))
        assert lo == 0
        assert hi >= mpf_ref(mpmath.exp, Fraction(-100))

    @pytest.mark.parametrize(
        "x", [Fraction(1, 7), Fraction(1), Fraction(2), Fraction(1000, 3)]
    )
    def test_ln_contains_reference(self, x):
        assert contains(ln_enclosure(x, 96), mpf_ref(mpmath.log, x))

    def test_ln_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            ln_enclosure(Fraction(0))

    @pytest.mark.parametrize(
        "x, p",
        [
            (Fraction(2), Fraction(1, 2)),
            (Fraction(5, 4), Fraction(7, 3)),
            (Fraction(3), Fraction(-2, 3)),
            (Fraction(151, 100), Fraction(5, 2)),
        ],
    )
    def test_pow_contains_reference(self, x, p):
        ref = mpf_ref(lambda a, b: a**b, x, p)
        assert contains(pow_enclosure(x, p, 96), ref)

    def test_pow_integer_exponent_is_exact(self):
        lo, hi = pow_enclosure(Fraction(3, 2), Fraction(4))
        assert lo == hi == Fraction(81, 16)
        lo, hi = pow_enclosure(Fraction(3), Fraction(-2))
        assert lo == hi == Fraction(1, 9)

    @pytest.mark.parametrize(
        "x", [Fraction(0), Fraction(1), Fraction(5), Fraction(302), Fraction(-3)]
    )
    def test_log1p_exp_contains_reference(self, x):
        ref = mpf_ref(lambda a: mpmath.log(1 + mpmath.exp(a)), x)
        assert contains(log1p_exp_enclosure(x, 96), ref)

    def test_log1p_exp_exceeds_linear_part(self):
        # ln(1 + e^x) > x always; the certified lower end must respect >= x
        for x in (Fraction(1), Fraction(40), Fraction(400)):
            lo, _ = log1p_exp_enclosure(x, 96)
            assert lo >= x


class TestDecisions:
    def test_decide_known_inequalities(self):
        e = exp_enclosure
        assert decide_less(lambda p: e(Fraction(1), p), lambda p: (Fraction(272, 100),) * 2)
        assert not decide_less(
            lambda p: e(Fraction(2), p), lambda p: (Fraction(738, 100),) * 2
        )

    def test_decide_tight_inequality(self):
        # e^(1/2) = 1.64872127070012814...; a 10-digit truncation sits barely
        # below it, forcing precision escalation before the sides separate
        target = Fraction(16487212707, 10**10)
        assert not decide_less(
            lambda p: exp_enclosure(Fraction(1, 2), p), lambda p: (target, target)
        )
        above = Fraction(16487212708, 10**10)
        assert decide_less(
            lambda p: exp_enclosure(Fraction(1, 2), p), lambda p: (above, above)
        )

    def test_equal_values_are_inseparable(self):
        with pytest.raises(ArithmeticError):
            decide_less(
                lambda p: (Fraction(1), Fraction(1)),
                lambda p: (Fraction(1), Fraction(1)),
            )

    def test_floor_enclosed(self):
        # floor(e) = 2, floor(100/e) = 36
        assert floor_enclosed(lambda p: exp_enclosure(Fraction(1), p)) == 2
        def inv_e(p):
            lo, hi = exp_enclosure(Fraction(1), p)
            return (100 / hi, 100 / lo)
        assert floor_enclosed(inv_e) == 36

    def test_floor_enclosed_integer_boundary(self):
        # enclosures straddling an exact integer never separate its floor;
        # the search must fail loudly instead of guessing
        def around_three(p):
            tiny = Fraction(1, 1 << p)
            return (Fraction(3) - tiny, Fraction(3) + tiny)
        with pytest.raises(ArithmeticError):
            floor_enclosed(around_three)
