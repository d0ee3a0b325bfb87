import pytest
from hypothesis import given
from hypothesis import strategies as st

from iptacheck.clocks import ClockAtom, ClockValuation, conjoin, satisfies


def val(**kw):
    return ClockValuation.of(kw)


class TestAtoms:
    @pytest.mark.parametrize(
        "op,bound,value,expected",
        [("<=", 20, 20, True), ("<=", 20, 21, False), ("<", 20, 19, True),
         ("<", 20, 20, False), (">", 20, 21, True), (">", 20, 20, False),
         (">=", 20, 20, True), (">=", 20, 19, False)],
    )
    def test_single_clock_comparison(self, op, bound, value, expected):
        atom = ClockAtom("x", op, bound)
        assert atom.holds({"x": value}) is expected

    def test_diagonal_comparison(self):
        atom = ClockAtom("x", "<=", 5, "y")
        assert atom.holds({"x": 8, "y": 4})
        assert not atom.holds({"x": 10, "y": 4})

    def test_negative_bound_rejected(self):
        with pytest.raises(ValueError):
            ClockAtom("x", "<=", -1)

    def test_bad_operator_rejected(self):
        with pytest.raises(ValueError):
            ClockAtom("x", "==", 3)


class TestConstraints:
    def test_empty_constraint_is_true(self):
        assert satisfies({"x": 99}, ())

    def test_conjunction_is_satisfaction_of_both(self):
        c1 = (ClockAtom("x", "<=", 10),)
        c2 = (ClockAtom("y", ">", 3),)
        both = conjoin(c1, c2)
        for x in (0, 5, 10, 11):
            for y in (2, 3, 4, 9):
                expected = satisfies({"x": x, "y": y}, c1) and satisfies({"x": x, "y": y}, c2)
                assert satisfies({"x": x, "y": y}, both) is expected


class TestValuations:
    def test_negative_values_rejected(self):
        with pytest.raises(ValueError):
            ClockValuation.of({"x": -1})

    @given(st.integers(0, 40), st.integers(0, 40), st.integers(0, 9))
    def test_advance_adds_to_every_clock(self, x, y, d):
        v = val(x=x, y=y)
        advanced = v.advance(d)
        assert advanced["x"] == x + d and advanced["y"] == y + d

    @given(st.integers(0, 40), st.integers(0, 40))
    def test_reset_zeroes_exactly_the_reset_set(self, x, y):
        v = val(x=x, y=y).reset(["x"])
        assert v["x"] == 0 and v["y"] == y

    def test_satisfaction_is_total(self):
        v = val(x=3, y=7)
        for atom in (ClockAtom("x", "<", 3), ClockAtom("y", ">=", 7),
                     ClockAtom("x", "<=", 2, "y"), ClockAtom("y", ">", 100)):
            assert v.satisfies((atom,)) in (True, False)
