import csv
import io
import json

import pytest

from nilcalc import cli
from nilcalc.cli import ScenarioError


def run(capsysbinary, *argv):
    code = cli.main(list(argv))
    cap = capsysbinary.readouterr()
    return code, cap.out, cap.err.decode()


def test_bundled_scenarios_are_listed(capsysbinary):
    code, out, _ = run(capsysbinary, "scenario", "list")
    names = out.decode().split()
    assert code == 0
    assert [n for n in names if n.startswith("acc")] == [
        "acc01-extremal-phases", "acc02-heisenberg-bracket", "acc03-product-identity",
        "acc04-multilinearisation", "acc05-skew-lift", "acc06-norm-oracle", "acc07-converse-instance",
        "acc08-gcs", "acc09-equidistribution", "acc10-polynomial-algebra", "acc11-frequency-regularization",
    ]
    for n in names:
        doc = cli.load_scenario(n)
        assert cli.validate_scenario(doc)["name"] == n


@pytest.mark.parametrize("name", ["example-heisenberg", "example-norm-constant", "example-gcs-diagonal",
                                  "example-schema-catalog"])
def test_example_scenarios_pass(capsysbinary, name):
    code, out, _ = run(capsysbinary, "--format", "json", "scenario", "run", name)
    assert code == 0
    doc = json.loads(out)
    assert doc["verdict"] == "pass" and doc["scenario"] == name
    assert all(c["ok"] for c in doc["checks"])


def test_json_replay_is_byte_identical(capsysbinary):
    outs = [run(capsysbinary, "--format", "json", "scenario", "run", "acc07-converse-instance")[1]
            for _ in range(2)]
    assert outs[0] == outs[1]
    assert b"runtime" not in outs[0]


def test_norm_csv_columns(capsysbinary):
    code, out, _ = run(capsysbinary, "--format", "csv", "norm", "--d", "2", "--N", "8", "--f", "const:1")
    rows = list(csv.DictReader(io.StringIO(out.decode())))
    assert code == 0
    assert list(rows[0]) == ["N", "d", "Ntilde", "norm"]
    assert rows[0] == {"N": "8", "d": "2", "Ntilde": "32", "norm": "1.0"}


def test_format_flag_after_subcommand(capsysbinary):
    a = run(capsysbinary, "--format", "json", "freqreg", "run", "--freqs", "1/3,1/6")
    b = run(capsysbinary, "freqreg", "run", "--freqs", "1/3,1/6", "--format", "json")
    assert a == b and a[0] == 0


def test_text_report(capsysbinary):
    code, out, _ = run(capsysbinary, "norm", "--d", "2", "--N", "16", "--f", "const:1", "--expected", "1")
    text = out.decode()
    assert code == 0 and "PASS" in text and "verdict: pass" in text


def test_failing_check_exits_one(capsysbinary):
    code, out, _ = run(capsysbinary, "norm", "--d", "2", "--N", "16", "--f", "const:1", "--expected", "0.5")
    assert code == 1 and b"FAIL" in out and b"verdict: fail" in out


def test_commands_smoke(capsysbinary):
    cases = [
        ("bracket", "check-identity", "--alpha", "2/7", "--beta", "3/5"),
        ("bracket", "compare", "--orbit", "degrank32", "--alpha", "2/7", "--beta", "3/5", "--N", "200"),
        ("heisenberg", "--alpha", "2/7", "--beta", "3/5", "--N", "300"),
        ("multilin", "--alpha", "1234/9973", "--beta", "555/7919", "--N", "200"),
        ("lift", "--alpha", "1/7", "--beta", "1/3", "--gamma", "2/11", "--n-max", "100"),
        ("lift", "--alpha", "1/7", "--beta", "1/3", "--side", "right"),
        ("gcs", "--family", "quadratic:3/1009", "--N", "256", "--quad", "1,7,3,5"),
        ("equid", "test", "--orbit", "torus:0,1/3", "--N", "1000", "--height", "5"),
        ("equid", "test", "--schema", "heisenberg", "--orbit", "heisenberg:2/7,3/5", "--N", "500",
         "--char-height", "2"),
        ("freqreg", "run", "--freqs", "1/3,1/6,123457/1000003"),
        ("schema", "verify", "heisenberg"),
        ("schema", "verify", "universal(2,1;3,2)"),
    ]
    for argv in cases:
        code, _, err = run(capsysbinary, *argv)
        assert code == 0, (argv, err)


def test_bracket_eval(capsysbinary):
    code, out, _ = run(capsysbinary, "bracket", "eval", "--expr",
                       "(* (frac (* (const 2/7) (var 0))) (* (const 3/5) (var 0)))", "--n", "4")
    assert code == 0 and out == b"12/35\n"


def test_schema_dump_roundtrips_through_verify(capsysbinary, tmp_path):
    code, out, _ = run(capsysbinary, "schema", "dump", "free2step(3)")
    assert code == 0
    path = tmp_path / "s.json"
    path.write_bytes(out)
    code, out, _ = run(capsysbinary, "--format", "json", "schema", "verify", str(path))
    assert code == 0 and json.loads(out)["verdict"] == "pass"
    code, out, _ = run(capsysbinary, "schema", "show", "heisenberg")
    assert code == 0 and b"e12" in out


def test_scenario_file(capsysbinary, tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"name": "t", "kind": "bracket-identity", "seed": 1,
                                "params": {"count": 5, "n_max": 20}}))
    code, out, _ = run(capsysbinary, "--format", "json", "scenario", "run", str(path))
    assert code == 0 and json.loads(out)["seed"] == 1


@pytest.mark.parametrize("argv", [
    ("norm", "--d", "2", "--N", "8", "--f", "const:1", "--Ntilde", "10"),
    ("norm", "--d", "0", "--N", "8", "--f", "const:1"),
    ("norm", "--d", "2", "--N", "8", "--f", "wave:3"),
    ("schema", "verify", "nosuchgroup"),
    ("schema", "verify", "universal(2,1)"),
    ("bracket", "eval", "--expr", "(frac (var 0)", "--n", "1"),
    ("gcs", "--family", "cubic:1/3", "--N", "64", "--quad", "1,2,3,4"),
    ("gcs", "--family", "quadratic:1/3", "--N", "64", "--quad", "1,2,3"),
    ("gcs", "--family", "quadratic:1/3", "--N", "64", "--quad", "1,2,3,4,5"),
    ("equid", "test", "--schema", "heisenberg", "--orbit", "torus:0,1/3", "--N", "100"),
    ("scenario", "run", "no-such-scenario"),
    ("frobnicate",),
    ("--format", "xml", "scenario", "list"),
])
def test_usage_errors_exit_two(capsysbinary, argv):
    code, _, _ = run(capsysbinary, *argv)
    assert code == 2


def test_scenario_validation(tmp_path):
    with pytest.raises(ScenarioError):
        cli.validate_scenario([])
    with pytest.raises(ScenarioError):
        cli.validate_scenario({"kind": "nope"})
    with pytest.raises(ScenarioError):
        cli.validate_scenario({"kind": "gcs", "params": []})
    with pytest.raises(ScenarioError):
        cli.validate_scenario({"kind": "gcs", "seed": "x"})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ScenarioError):
        cli.load_scenario(str(bad))


def test_plain_serialization():
    from fractions import Fraction

    assert cli.plain(Fraction(3, 4)) == "3/4"
    assert cli.plain(Fraction(2)) == "2"
    assert cli.plain({"a": (Fraction(1, 2), 0.1)}) == {"a": ["1/2", 0.1]}


def test_nilchar_eval_streams_csv(capsysbinary):
    from fractions import Fraction

    from nilcalc.gowers import SampledFunction
    from nilcalc.scalar import expi

    code, out, _ = run(capsysbinary, "nilchar", "eval", "--orbit", "heisenberg:2/7,3/5", "--N", "6")
    assert code == 0
    f = SampledFunction.from_csv(out.decode())
    assert f.N == 6 and f.dim == 1
    assert abs(f(4)[0] - expi(Fraction(12, 35))) < 1e-15
    code, out, _ = run(capsysbinary, "nilchar", "eval", "--orbit", "degrank32:1/3,2/9", "--smoothed", "--N", "5")
    f = SampledFunction.from_csv(out.decode())
    assert code == 0 and f.dim > 1 and abs(f.sup_bound - 1.0) < 1e-12


def test_nilchar_dump_feeds_eval(capsysbinary, tmp_path):
    code, out, _ = run(capsysbinary, "nilchar", "dump", "--orbit", "heisenberg:2/7,3/5", "--smoothed",
                       "--radius", "1/8")
    assert code == 0
    path = tmp_path / "spec.json"
    path.write_bytes(out)
    direct = run(capsysbinary, "nilchar", "eval", "--orbit", "heisenberg:2/7,3/5", "--smoothed", "--radius", "1/8",
                 "--N", "20")
    via_file = run(capsysbinary, "nilchar", "eval", "--orbit", str(path), "--N", "20")
    assert direct == via_file


def test_gowers_group_matches_top_level(capsysbinary, tmp_path):
    assert (run(capsysbinary, "--format", "json", "gowers", "norm", "--d", "2", "--N", "8", "--f", "phase:0,1/3,1/7")
            == run(capsysbinary, "--format", "json", "norm", "--d", "2", "--N", "8", "--f", "phase:0,1/3,1/7"))
    code, out, _ = run(capsysbinary, "--format", "json", "gowers", "gcs", "--family", "quadratic:3/1009",
                       "--N", "256", "--quad", "5,5,5,5")
    assert code == 0 and json.loads(out)["checks"][0]["measured"] == 0.0
    csv_path = tmp_path / "f.csv"
    csv_path.write_bytes(run(capsysbinary, "nilchar", "eval", "--orbit", "heisenberg:2/7,3/5", "--N", "64")[1])
    code, out, _ = run(capsysbinary, "--format", "csv", "gowers", "norm", "--d", "3", "--N", "64", "--f",
                       str(csv_path))
    assert code == 0 and float(out.decode().splitlines()[1].split(",")[-1]) > 0.1


@pytest.mark.parametrize("argv", [
    ("nilchar", "eval", "--orbit", "torus:1/3", "--N", "3"),
    ("nilchar", "eval", "--orbit", "heisenberg:1/3", "--N", "3"),
    ("nilchar", "eval", "--orbit", "heisenberg:1/3,1/5", "--smoothed", "--radius", "1/2", "--N", "3"),
    ("nilchar", "eval", "--orbit", "degrank32:1/3,1/5", "--radius", "1/10", "--N", "3"),
    ("nilchar", "eval", "--orbit", "heisenberg:1/3,1/5", "--N", "0"),
])
def test_nilchar_usage_errors(capsysbinary, argv):
    assert run(capsysbinary, *argv)[0] == 2
