from fractions import Fraction

import pytest

from iptacheck.clocks import ClockAtom
from iptacheck.elaborate import UNKNOWN, eval_const, eval_guard, eval_pred, resolve
from iptacheck.errors import (
    InvalidDistribution,
    IptaError,
    RangeOverflow,
    UnboundConstant,
)
from iptacheck.language import parse_model

from conftest import section61_constants

F = Fraction


class TestEvalConst:
    def test_integer_division_floors(self):
        src = parse_model("ipta\nconst int N = 5;\nconst int H = N/2;\n")
        resolved = resolve(src)
        assert resolved.env["H"] == 2

    def test_rational_arithmetic_is_exact(self):
        src = parse_model("ipta\nconst double U = 0.8;\nconst double S = 1-U;\n")
        assert resolve(src).env["S"] == F(1, 5)


class TestGuardSplitting:
    def test_clock_only_residual(self):
        expr = parse_model(
            "ipta\nmodule M\n s:[0..1] init 0;\n x:clock;\n [a] s=0 & x<=20 -> (s'=1);\nendmodule\n"
        ).modules[0].commands[0].guard
        assert eval_guard(expr, {"s": 0}, {"x"}) == (ClockAtom("x", "<=", 20),)
        assert eval_guard(expr, {"s": 1}, {"x"}) is False

    def test_disjunctive_guard_reduces_per_location(self):
        text = (
            "ipta\nmodule M\n s:[0..2] init 0;\n x:clock;\n"
            " [r] (s=1 & x<=20) | (s=2 & x>20) -> (s'=0);\nendmodule\n"
        )
        expr = parse_model(text).modules[0].commands[0].guard
        assert eval_guard(expr, {"s": 1}, {"x"}) == (ClockAtom("x", "<=", 20),)
        assert eval_guard(expr, {"s": 2}, {"x"}) == (ClockAtom("x", ">", 20),)
        assert eval_guard(expr, {"s": 0}, {"x"}) is False

    def test_implication_invariant(self):
        text = (
            "ipta\nmodule M\n s:[0..1] init 0;\n x:clock;\n"
            " invariant (s=0 => x<=100) & (s=1 => x<=20) endinvariant\n"
            " [a] s=0 -> (s'=1);\nendmodule\n"
        )
        inv = parse_model(text).modules[0].invariant
        assert eval_guard(inv, {"s": 0}, {"x"}) == (ClockAtom("x", "<=", 100),)
        assert eval_guard(inv, {"s": 1}, {"x"}) == (ClockAtom("x", "<=", 20),)

    def test_clock_equality_becomes_two_bounds(self):
        text = "ipta\nmodule M\n s:[0..1] init 0;\n x:clock;\n [a] x=5 -> (s'=1);\nendmodule\n"
        expr = parse_model(text).modules[0].commands[0].guard
        assert set(eval_guard(expr, {"s": 0}, {"x"})) == {
            ClockAtom("x", "<=", 5),
            ClockAtom("x", ">=", 5),
        }

    def test_diagonal_difference(self):
        text = "ipta\nmodule M\n s:[0..1] init 0;\n x:clock;\n y:clock;\n [a] x-y<=3 -> (s'=1);\nendmodule\n"
        expr = parse_model(text).modules[0].commands[0].guard
        assert eval_guard(expr, {"s": 0}, {"x", "y"}) == (ClockAtom("x", "<=", 3, "y"),)

    def test_disjunction_of_residuals_rejected(self):
        text = "ipta\nmodule M\n s:[0..1] init 0;\n x:clock;\n y:clock;\n [a] x<=3 | y<=2 -> (s'=1);\nendmodule\n"
        expr = parse_model(text).modules[0].commands[0].guard
        with pytest.raises(IptaError):
            eval_guard(expr, {"s": 0}, {"x", "y"})


class TestThreeValued:
    def test_unknown_propagates(self):
        expr = parse_model(
            "ipta\nmodule M\n s:[0..1] init 0;\n x:clock;\n [a] s=1 & x<=2 -> (s'=1);\nendmodule\n"
        ).modules[0].commands[0].guard
        assert eval_pred(expr, {"s": 1}, {}, None) is UNKNOWN
        assert eval_pred(expr, {"s": 0}, {}, None) is False
        assert eval_pred(expr, {"s": 1}, {}, {"x": 1}) is True


class TestResolve:
    def test_client_server_with_section61_bindings(self, client_server_text):
        src = parse_model(client_server_text)
        resolved = resolve(src, section61_constants())
        server, client = resolved.modules
        # server holds s in 0..2 and w in 0..2: nine valuations but only the
        # reachable ones are kept
        assert all(dict(loc).keys() == {"s", "w"} for loc in server.locations)
        request_edges = [e for e in server.edges if e.action == "request"]
        d = request_edges[0].distribution
        bounds = sorted(d.as_map().values())
        assert bounds == [(F(1, 5), F(3, 10)), (F(7, 10), F(4, 5))]
        assert client.clocks == ("y",)
        assert "lessThan50PercentSlow" in resolved.label_table

    def test_fig3_bounds(self, client_server_text):
        src = parse_model(client_server_text)
        resolved = resolve(src, {"L": F(95, 100), "U": 1, "REQUESTS": 2})
        server = resolved.modules[0]
        d = next(e for e in server.edges if e.action == "request").distribution
        assert sorted(d.as_map().values()) == [(F(0), F(1, 20)), (F(19, 20), F(1))]

    def test_scalar_weights_become_point_intervals(self, client_server_text):
        src = parse_model(client_server_text)
        resolved = resolve(src, {"L": F(7, 10), "U": F(7, 10), "REQUESTS": 2})
        for module in resolved.modules:
            for edge in module.edges:
                assert edge.distribution.is_point()

    def test_missing_binding_is_reported(self, client_server_text):
        src = parse_model(client_server_text)
        with pytest.raises(UnboundConstant, match="REQUESTS"):
            resolve(src, {"L": F(7, 10), "U": F(8, 10)})

    def test_binding_for_undeclared_constant_rejected(self, client_server_text):
        src = parse_model(client_server_text)
        with pytest.raises(UnboundConstant, match="NOPE"):
            resolve(src, dict(section61_constants(), NOPE=1))

    def test_declared_constant_can_be_overridden(self, client_server_text):
        src = parse_model(client_server_text)
        resolved = resolve(src, dict(section61_constants(), TIMEOUT=40))
        assert resolved.env["TIMEOUT"] == 40

    def test_eq1_violation_names_the_command(self):
        text = (
            "ipta\nmodule M\n s:[0..2] init 0;\n"
            " [a] s=0 -> 0.6~0.7:(s'=1) + 0.6~0.7:(s'=2);\nendmodule\n"
        )
        with pytest.raises(InvalidDistribution, match="module M command 1"):
            resolve(parse_model(text))

    def test_interval_bounds_crossed_after_substitution(self):
        text = (
            "ipta\nconst double L;\nconst double U;\nmodule M\n s:[0..1] init 0;\n"
            " [a] s=0 -> L~U:(s'=1) + (1-U)~(1-L):(s'=0);\nendmodule\n"
        )
        with pytest.raises(InvalidDistribution):
            resolve(parse_model(text), {"L": F(8, 10), "U": F(7, 10)})

    def test_range_overflow_names_variable(self):
        text = "ipta\nmodule M\n s:[0..1] init 0;\n [a] s=0 -> (s'=2);\nendmodule\n"
        with pytest.raises(RangeOverflow, match="s'=2"):
            resolve(parse_model(text))

    def test_unreachable_overflow_is_not_an_error(self):
        # guard keeps the assignment inside the range on reachable valuations
        text = "ipta\nmodule M\n s:[0..1] init 0;\n [a] s<1 -> (s'=s+1);\nendmodule\n"
        resolved = resolve(parse_model(text))
        assert len(resolved.modules[0].locations) == 2

    def test_reset_to_nonzero_rejected(self):
        text = "ipta\nmodule M\n s:[0..1] init 0;\n x:clock;\n [a] s=0 -> (x'=5);\nendmodule\n"
        with pytest.raises(IptaError, match="reset"):
            resolve(parse_model(text))

    def test_unsynchronized_commands_get_distinct_actions(self):
        text = (
            "ipta\nmodule M\n s:[0..2] init 0;\n"
            " [] s=0 -> (s'=1);\n [] s=1 -> (s'=2);\nendmodule\n"
        )
        resolved = resolve(parse_model(text))
        assert len(resolved.modules[0].actions) == 2

    def test_labels_may_not_use_clocks(self):
        # already rejected at scope checking: labels see variables, not clocks
        text = (
            "ipta\nmodule M\n s:[0..1] init 0;\n x:clock;\n [a] s=0 -> (s'=1);\nendmodule\n"
            'label "fast" = s=1 & x<3;\n'
        )
        with pytest.raises(IptaError, match="'x'"):
            parse_model(text)
