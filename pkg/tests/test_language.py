from fractions import Fraction

import pytest

from iptacheck.errors import DuplicateDeclaration, ParseError, QueryError, UnknownIdentifier
from iptacheck.language import (
    Binary,
    Name,
    Num,
    parse_model,
    parse_queries_file,
    parse_query,
    pretty,
)

F = Fraction


class TestParseModel:
    def test_client_server_structure(self, client_server_text):
        src = parse_model(client_server_text)
        assert [m.name for m in src.modules] == ["Server", "Client"]
        assert [c.name for c in src.constants] == ["L", "U", "REQUESTS", "TIMEOUT"]
        assert [l.name for l in src.labels] == ["lessThan50PercentSlow"]
        server = src.modules[0]
        assert [v.name for v in server.variables] == ["s", "w"]
        assert server.clocks == ("x",)
        assert len(server.commands) == 2

    def test_interval_command(self):
        text = """ipta
module M
  s : [0..2] init 0;
  x : clock;
  [request] s=0 -> 0.95~1:(s'=1)&(x'=0) + 0~0.05:(s'=2);
endmodule
"""
        src = parse_model(text)
        cmd = src.modules[0].commands[0]
        assert cmd.action == "request"
        assert len(cmd.updates) == 2
        first, second = cmd.updates
        assert first.low.value == F(95, 100) and first.high.value == F(1)
        assert second.low.value == F(0) and second.high.value == F(5, 100)
        assert first.assignments == (("s", Num(F(1))), ("x", Num(F(0))))

    def test_crossed_interval_bounds_rejected(self):
        text = """ipta
module M
  s : [0..1] init 0;
  [a] s=0 -> 0.5~0.4:(s'=1);
endmodule
"""
        with pytest.raises(ParseError, match="lower bound"):
            parse_model(text)

    def test_unweighted_command_parses(self):
        src = parse_model("ipta\nmodule M\n s : [0..1] init 0;\n [] s=0 -> (s'=1);\nendmodule\n")
        cmd = src.modules[0].commands[0]
        assert cmd.action is None
        assert cmd.updates[0].low is None

    def test_true_update(self):
        src = parse_model("ipta\nmodule M\n s : [0..1] init 0;\n [a] s=0 -> true;\nendmodule\n")
        assert src.modules[0].commands[0].updates[0].assignments == ()

    def test_syntax_error_carries_position(self):
        with pytest.raises(ParseError) as err:
            parse_model("ipta\nmodule M\n s : [0..1] init 0\nendmodule\n")
        assert err.value.line is not None

    def test_duplicate_constant_rejected(self):
        with pytest.raises(DuplicateDeclaration):
            parse_model("ipta\nconst int N = 1;\nconst int N = 2;\n")

    def test_duplicate_variable_rejected(self):
        with pytest.raises(DuplicateDeclaration):
            parse_model("ipta\nmodule M\n s : [0..1] init 0;\n s : clock;\nendmodule\n")

    def test_unknown_identifier_rejected(self):
        with pytest.raises(UnknownIdentifier):
            parse_model("ipta\nmodule M\n s : [0..1] init 0;\n [a] z=0 -> (s'=1);\nendmodule\n")

    def test_weights_may_not_read_variables(self):
        with pytest.raises(UnknownIdentifier):
            parse_model("ipta\nmodule M\n s : [0..1] init 0;\n [a] s=0 -> s:(s'=1);\nendmodule\n")

    def test_comments_and_decimals(self):
        src = parse_model("ipta // model kind\nconst double P = 0.25; // a quarter\n")
        assert src.constants[0].value.value == F(1, 4)


class TestPrettyRoundTrip:
    def test_fixpoint_on_second_print(self, client_server_text):
        once = pretty(parse_model(client_server_text))
        twice = pretty(parse_model(once))
        assert once == twice

    def test_fixpoint_simple_server(self, simple_server_text):
        once = pretty(parse_model(simple_server_text))
        assert pretty(parse_model(once)) == once


class TestParseQuery:
    def test_pmax_reachability(self):
        q = parse_query("Pmax=? [ F (t=2 & w=1) ]")
        assert q.mode == "max" and q.left is None
        assert isinstance(q.target, Binary) and q.target.op == "&"

    def test_pmin_label_reachability(self):
        q = parse_query('Pmin=? [ F "lessThan50PercentSlow" ]')
        assert q.mode == "min"
        assert q.target.name == "lessThan50PercentSlow"

    def test_threshold_until_with_formula_clock(self):
        q = parse_query("P>=0.95 [ true U (responseSent & z<20) ]")
        assert q.mode == "threshold"
        assert q.comparison == ">=" and q.threshold == F(95, 100)
        assert q.left is not None

    def test_reset_prefix_accepted(self):
        q = parse_query("z.P>=0.95 [ true U (responseSent & z<20) ]")
        assert q.mode == "threshold"

    def test_threshold_outside_unit_interval_rejected(self):
        with pytest.raises(QueryError):
            parse_query("P>=1.5 [ F (s=1) ]")

    def test_trailing_garbage_rejected(self):
        with pytest.raises(QueryError):
            parse_query("Pmax=? [ F (s=1) ] extra")

    def test_props_file(self):
        text = "// two queries\nPmax=? [ F (s=1) ]\n\nPmin=? [ F (s=2) ] // with comment\n"
        queries = parse_queries_file(text)
        assert [q.mode for q in queries] == ["max", "min"]

    def test_query_str_round_trips(self):
        for text in ("Pmax=? [ F (t=2 & w=1) ]", "P>=0.95 [ true U (done & z<20) ]"):
            q = parse_query(text)
            assert str(parse_query(str(q))) == str(q)
