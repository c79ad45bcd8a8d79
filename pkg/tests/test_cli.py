import json

import pytest

from cli import build_parser, exit_code, main
from errors import AdToolError, DomainError, InputError, ParseError, PlanError, RequestError
from models.multi_index import d, enumerate_full_tensor
from services.oracle import jet_derivatives
from services.parser import parse_file
from tests import closed_forms


def bs_args(fixtures_dir, inputs, name="black_scholes.ad"):
    args = [str(fixtures_dir / name)]
    for var, value in inputs.items():
        args += ["--set", f"{var}={value!r}"]
    return args


def run_json(capsys, argv):
    assert main(argv) == 0
    return json.loads(capsys.readouterr().out)


class TestEval:

    def test_greeks(self, capsys, fixtures_dir, bs_inputs):
        report = run_json(capsys, ["eval", *bs_args(fixtures_dir, bs_inputs),
                                   "--request", "d(V)", "--request", "d<2>(V)", "--request", "d(V)*d(S)"])
        assert list(report["primal"]) == ["price"]
        assert report["primal"]["price"] == pytest.approx(closed_forms.price(**bs_inputs), rel=1e-12)
        values = {row["request"]: row["value"] for row in report["derivatives"]}
        assert values == pytest.approx({
            "d(V)": closed_forms.vega(**bs_inputs),
            "d<2>(V)": closed_forms.volga(**bs_inputs),
            "d(S)*d(V)": closed_forms.vanna(**bs_inputs),
        }, rel=1e-9)
        assert report["bench"] == []

    def test_passive_strike_never_appears(self, capsys, fixtures_dir, bs_inputs):
        report = run_json(capsys, ["eval", *bs_args(fixtures_dir, bs_inputs), "--request", "d(V)"])
        assert all("K" not in row["request"] for row in report["derivatives"])

    def test_seeds_select_outputs(self, capsys, fixtures_dir, bs_inputs):
        report = run_json(capsys, ["eval", *bs_args(fixtures_dir, bs_inputs, "black_scholes_vega.ad"),
                                   "--request", "d(V)", "--seed", "vega=1"])
        assert list(report["primal"]) == ["vega"]
        assert report["primal"]["vega"] == pytest.approx(closed_forms.vega(**bs_inputs), rel=1e-12)
        assert report["derivatives"][0]["value"] == pytest.approx(closed_forms.volga(**bs_inputs), rel=1e-9)

    def test_csv(self, capsys, fixtures_dir, bs_inputs):
        assert main(["eval", *bs_args(fixtures_dir, bs_inputs), "--request", "d(S)", "--format", "csv"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "kind,name,value,order,outputs,mean_ns,R,RR"
        assert lines[1].startswith("primal,price,")
        kind, name, value = lines[2].split(",")[:3]
        assert (kind, name) == ("derivative", "d(S)")
        assert float(value) == pytest.approx(closed_forms.delta(**bs_inputs), rel=1e-9)

    def test_request_is_required(self, fixtures_dir, bs_inputs):
        with pytest.raises(SystemExit) as info:
            main(["eval", *bs_args(fixtures_dir, bs_inputs)])
        assert info.value.code == 2


class TestTensor:

    def test_second_order_over_four_variables(self, capsys, fixtures_dir, bs_inputs):
        report = run_json(capsys, ["tensor", *bs_args(fixtures_dir, bs_inputs), "--order", "2", "--vars", "S,V,T,R"])
        assert len(report["derivatives"]) == 14
        assert not any("K" in row["request"] for row in report["derivatives"])

    def test_order_zero_is_primal_only(self, capsys, fixtures_dir, bs_inputs):
        report = run_json(capsys, ["tensor", *bs_args(fixtures_dir, bs_inputs), "--order", "0"])
        assert report["derivatives"] == []
        assert report["primal"]["price"] == pytest.approx(closed_forms.price(**bs_inputs), rel=1e-12)

    def test_single_variable_matches_jets(self, capsys, fixtures_dir, bs_inputs):
        report = run_json(capsys, ["tensor", *bs_args(fixtures_dir, bs_inputs), "--order", "3", "--vars", "V"])
        program = parse_file(str(fixtures_dir / "black_scholes.ad"))
        requests = enumerate_full_tensor(["V"], 3)
        jets = jet_derivatives(program.graph, bs_inputs, program.output("price"), requests)
        assert [row["request"] for row in report["derivatives"]] == ["d(V)", "d<2>(V)", "d<3>(V)"]
        for row, m in zip(report["derivatives"], requests):
            assert row["value"] == pytest.approx(jets[m], rel=1e-9)

    def test_shift(self, capsys, fixtures_dir, bs_inputs):
        report = run_json(capsys, ["tensor", *bs_args(fixtures_dir, bs_inputs), "--order", "3",
                                   "--vars", "S,V", "--shift", "S=1.5", "--shift", "V=0.005"])
        moved = {**bs_inputs, "S": bs_inputs["S"] + 1.5, "V": bs_inputs["V"] + 0.005}
        exact = closed_forms.price(**moved)
        assert report["primal"]["price@exact"] == pytest.approx(exact, rel=1e-12)
        assert report["primal"]["price@shifted"] == pytest.approx(exact, abs=1e-3)

    def test_shift_outside_tensor_variables(self, capsys, fixtures_dir, bs_inputs):
        argv = ["tensor", *bs_args(fixtures_dir, bs_inputs), "--order", "1", "--vars", "S", "--shift", "V=0.01"]
        assert main(argv) == 3
        assert "V" in capsys.readouterr().err


class TestBench:

    def test_rows(self, capsys, fixtures_dir, bs_inputs):
        report = run_json(capsys, ["bench", *bs_args(fixtures_dir, bs_inputs), "--orders", "0..2",
                                   "--vars", "S,V,T,R", "--reps", "5"])
        rows = report["bench"]
        assert [row["order"] for row in rows] == [0, 1, 2]
        assert [row["outputs"] for row in rows] == [1, 5, 15]
        assert rows[0]["R"] == 1.0
        assert rows[0]["RR"] is None
        assert all(row["mean_ns"] > 0 for row in rows)
        assert rows[2]["RR"] == pytest.approx(rows[2]["R"] / rows[1]["R"])

    def test_randomized_inputs(self, capsys, fixtures_dir, bs_inputs):
        argv = ["bench", *bs_args(fixtures_dir, bs_inputs), "--orders", "1", "--reps", "3",
                "--randomize-inputs", "S=90:110,V=0.1:0.2", "--random-seed", "4"]
        first = run_json(capsys, argv)
        second = run_json(capsys, argv)
        assert first["primal"] == second["primal"]
        assert [row["order"] for row in first["bench"]] == [1]

    def test_bad_orders(self, fixtures_dir, bs_inputs):
        with pytest.raises(SystemExit) as info:
            main(["bench", *bs_args(fixtures_dir, bs_inputs), "--orders", "two"])
        assert info.value.code == 2

    def test_bad_reps(self, fixtures_dir, bs_inputs):
        with pytest.raises(SystemExit):
            main(["bench", *bs_args(fixtures_dir, bs_inputs), "--reps", "0"])


class TestExitCodes:

    def test_parse_error(self, capsys, tmp_path):
        source = tmp_path / "broken.ad"
        source.write_text("y = (x + ;\n")
        assert main(["eval", str(source), "--set", "x=1", "--request", "d(x)"]) == 2
        assert capsys.readouterr().err.startswith("adtool: error:")

    def test_missing_file(self, tmp_path):
        assert main(["eval", str(tmp_path / "absent.ad"), "--request", "d(x)"]) == 2

    def test_bad_request(self, fixtures_dir, bs_inputs):
        assert main(["eval", *bs_args(fixtures_dir, bs_inputs), "--request", "d<0>(V)"]) == 2
        assert main(["eval", *bs_args(fixtures_dir, bs_inputs), "--request", "d(Q)"]) == 2

    def test_missing_input(self, fixtures_dir, bs_inputs):
        del bs_inputs["K"]
        assert main(["eval", *bs_args(fixtures_dir, bs_inputs), "--request", "d(V)"]) == 3

    def test_unknown_input(self, fixtures_dir, bs_inputs):
        argv = ["eval", *bs_args(fixtures_dir, bs_inputs), "--set", "Q=1", "--request", "d(V)"]
        assert main(argv) == 3

    def test_domain_error(self, capsys, tmp_path):
        source = tmp_path / "log.ad"
        source.write_text("y = log(x);\n")
        assert main(["eval", str(source), "--set", "x=-1", "--request", "d(x)"]) == 4
        assert "log" in capsys.readouterr().err

    def test_bad_assignment(self, fixtures_dir):
        with pytest.raises(SystemExit) as info:
            main(["eval", str(fixtures_dir / "exp_cos.ad"), "--set", "v1", "--request", "d(v1)"])
        assert info.value.code == 2

    @pytest.mark.parametrize("error, code", [
        (ParseError("x"), 2),
        (RequestError("x"), 2),
        (InputError("x"), 3),
        (DomainError("x"), 4),
        (PlanError("x"), 1),
        (AdToolError("x"), 1),
    ])
    def test_mapping(self, error, code):
        assert exit_code(error) == code

    def test_parser_defaults(self):
        args = build_parser().parse_args(["bench", "f.ad"])
        assert (args.orders, args.reps, args.format) == ("0..5", 1000, "json")


def test_request_syntax_round_trips_through_the_cli(capsys, fixtures_dir):
    report = run_json(capsys, ["eval", str(fixtures_dir / "exp_cos.ad"), "--set", "v1=1", "--set", "v2=1",
                               "--request", "d(v2) * d(v1)"])
    assert report["derivatives"][0]["request"] == str(d("v1") * d("v2"))
