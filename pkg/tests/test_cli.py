import json
import subprocess
import sys
from pathlib import Path

import pytest

from iptacheck.cli import main

MODEL = str(Path(__file__).resolve().parent.parent / "models" / "client_server.ipta")
CONSTS = ["--const", "L=0.7", "--const", "U=0.8", "--const", "REQUESTS=2"]


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def record_of(out):
    record = {}
    for line in out.splitlines():
        if "=" in line:
            key, _, value = line.partition("=")
            record[key] = value
    return record


class TestCheck:
    def test_min_value(self, capsys):
        code, out, err = run_cli(
            ["check", MODEL, "Pmin=? [ F (t=2 & w=1) ]", *CONSTS], capsys
        )
        assert code == 0
        record = record_of(out)
        assert abs(float(record["value"]) - 0.30) < 1e-6
        assert record["engine"] == "ipta"
        assert int(record["states"]) > 0
        assert "strict clock bounds" in err

    def test_sample_engine_with_value(self, capsys):
        code, out, _ = run_cli(
            ["check", MODEL, "Pmin=? [ F (t=2 & w=1) ]", *CONSTS,
             "--engine", "sample", "--value", "0.75"],
            capsys,
        )
        assert code == 0
        assert abs(float(record_of(out)["value"]) - 0.375) < 1e-6

    def test_ptastar_agrees_and_grows(self, capsys):
        code, out_star, _ = run_cli(
            ["check", MODEL, "Pmin=? [ F (t=2 & w=1) ]", *CONSTS, "--engine", "ptastar"],
            capsys,
        )
        assert code == 0
        star = record_of(out_star)
        code, out_ipta, _ = run_cli(
            ["check", MODEL, "Pmin=? [ F (t=2 & w=1) ]", *CONSTS], capsys
        )
        plain = record_of(out_ipta)
        assert abs(float(star["value"]) - float(plain["value"])) < 1e-9
        assert int(star["transitions"]) > int(plain["transitions"])

    def test_threshold_violation_exit_code(self, capsys):
        code, out, _ = run_cli(
            ["check", MODEL, "P>=0.5 [ F (t=2 & w=1) ]", *CONSTS], capsys
        )
        assert code == 2
        assert record_of(out)["verdict"] == "false"

    def test_threshold_pass_exit_code(self, capsys):
        code, out, _ = run_cli(
            ["check", MODEL, "P>=0.25 [ F (t=2 & w=1) ]", *CONSTS], capsys
        )
        assert code == 0
        assert record_of(out)["verdict"] == "true"

    def test_json_output(self, capsys):
        code, out, _ = run_cli(
            ["check", MODEL, "Pmax=? [ F (t=2 & w=1) ]", *CONSTS, "--json"], capsys
        )
        assert code == 0
        data = json.loads(out)
        assert len(data) == 1
        assert abs(float(data[0]["value"]) - 0.45) < 1e-6

    def test_props_file(self, tmp_path, capsys):
        props = tmp_path / "queries.props"
        props.write_text(
            "// section 6.1\nPmin=? [ F (t=2 & w=1) ]\nPmax=? [ F (t=2 & w=1) ]\n"
        )
        code, out, _ = run_cli(["check", MODEL, str(props), *CONSTS], capsys)
        assert code == 0
        values = [float(r.partition("=")[2]) for r in out.splitlines() if r.startswith("value=")]
        assert values == pytest.approx([0.30, 0.45], abs=1e-6)

    def test_missing_constant_is_an_error(self, capsys):
        code, _, err = run_cli(["check", MODEL, "Pmin=? [ F (t=2 & w=1) ]"], capsys)
        assert code == 1
        assert "has no value" in err

    def test_unknown_label_is_an_error(self, capsys):
        code, _, err = run_cli(
            ["check", MODEL, 'Pmin=? [ F "noSuchLabel" ]', *CONSTS], capsys
        )
        assert code == 1
        assert "noSuchLabel" in err

    def test_sample_without_value_is_an_error(self, capsys):
        code, _, err = run_cli(
            ["check", MODEL, "Pmin=? [ F (t=2 & w=1) ]", *CONSTS, "--engine", "sample"],
            capsys,
        )
        assert code == 1
        assert "--value" in err

    def test_prune_flag_is_accepted(self, capsys):
        code, out, _ = run_cli(
            ["check", MODEL, "Pmin=? [ F (t=2 & w=1) ]", *CONSTS, "--prune"], capsys
        )
        assert code == 0
        assert abs(float(record_of(out)["value"]) - 0.30) < 1e-6


class TestStats:
    def test_counts_per_engine(self, capsys):
        consts = [*CONSTS, "--const", "TIMEOUT=40"]
        code, out_i, _ = run_cli(["stats", MODEL, *consts], capsys)
        assert code == 0
        plain = record_of(out_i)
        code, out_s, _ = run_cli(
            ["stats", MODEL, *consts, "--engine", "sample", "--value", "0.75"], capsys
        )
        sampled = record_of(out_s)
        code, out_p, _ = run_cli(["stats", MODEL, *consts, "--engine", "ptastar"], capsys)
        star = record_of(out_p)
        assert sampled["transitions"] == plain["transitions"]
        assert sampled["states"] == plain["states"]
        assert int(star["transitions"]) > int(plain["transitions"])

    def test_single_location_model(self, tmp_path, capsys):
        model = tmp_path / "one.ipta"
        model.write_text("ipta\nmodule M\n s : [0..0] init 0;\n [] s=0 -> true;\nendmodule\n")
        code, out, _ = run_cli(["stats", str(model)], capsys)
        assert code == 0
        assert record_of(out)["states"] == "1"


class TestExport:
    def test_deterministic_across_runs(self, tmp_path, capsys):
        out1, out2 = tmp_path / "a.txt", tmp_path / "b.txt"
        for out in (out1, out2):
            code, _, _ = run_cli(
                ["export", MODEL, *CONSTS, "--const", "TIMEOUT=40",
                 "--query", "Pmax=? [ F (t=2 & w=1) ]", "--out", str(out)],
                capsys,
            )
            assert code == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_round_trip_counts(self, tmp_path, capsys):
        from iptacheck.explore import parse_export

        out = tmp_path / "system.txt"
        code, _, _ = run_cli(
            ["export", MODEL, *CONSTS, "--query", "Pmax=? [ F (t=2 & w=1) ]",
             "--out", str(out)],
            capsys,
        )
        assert code == 0
        (n_states, n_choices, n_transitions), transitions, _ = parse_export(out.read_text())
        assert len(transitions) == n_transitions
        assert max(t[0] for t in transitions) < n_states

    def test_ptastar_export_has_more_choices(self, tmp_path, capsys):
        from iptacheck.explore import parse_export

        counts = {}
        for engine in ("ipta", "ptastar"):
            out = tmp_path / f"{engine}.txt"
            run_cli(
                ["export", MODEL, *CONSTS, "--query", "Pmax=? [ F (t=2 & w=1) ]",
                 "--engine", engine, "--out", str(out)],
                capsys,
            )
            counts[engine], _, _ = parse_export(out.read_text())
        assert counts["ptastar"][1] > counts["ipta"][1]


class TestPrune:
    def test_paper_example_reported_and_fixed(self, tmp_path, capsys):
        model = tmp_path / "nonminimal.ipta"
        model.write_text(
            "ipta\nmodule M\n s : [0..2] init 0;\n"
            " [a] s=0 -> 0.4~0.5:(s'=1) + 0.4~0.5:(s'=2);\nendmodule\n"
        )
        fixed = tmp_path / "fixed.ipta"
        code, out, _ = run_cli(["prune", str(model), "--fix", str(fixed)], capsys)
        assert code == 0
        assert "condition 2" in out
        text = fixed.read_text()
        assert "0.5:(s'=1)" in text and "0.5:(s'=2)" in text
        code, out, _ = run_cli(["prune", str(fixed)], capsys)
        assert "not minimal" not in out

    def test_listing2_with_fig3_constants_is_minimal(self, capsys):
        code, out, _ = run_cli(
            ["prune", MODEL, "--const", "L=0.95", "--const", "U=1", "--const", "REQUESTS=2"],
            capsys,
        )
        assert code == 0
        assert "not minimal" not in out
        assert out.count("minimal") >= 4


class TestEntryPoint:
    def test_module_invocation(self):
        result = subprocess.run(
            [sys.executable, "-m", "iptacheck.cli", "check", MODEL,
             "Pmax=? [ F (t=2 & w=1) ]", *CONSTS],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert "value=0.45" in result.stdout or "value=0.44999" in result.stdout
