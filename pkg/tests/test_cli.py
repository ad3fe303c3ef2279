import json

import pytest

from metastab.jobs.cli import main, parse_range, parse_sweep, UsageError
from metastab.storage.artifacts import read_csv_metadata
from metastab.storage.edgelist import read_edge_list


def _data_rows(text):
    return [line for line in text.splitlines() if line and not line.startswith("#")]


def test_gen_then_verify(tmp_path):
    path = tmp_path / "g.txt"
    assert main(["gen", "--er", "12", "0.5", "--seed", "1", "-o", str(path)]) == 0
    g = read_edge_list(path)
    assert g.n_nodes == 12
    again = tmp_path / "g2.txt"
    assert main(["gen", "--er", "12", "0.5", "--seed", "1", "-o", str(again)]) == 0
    assert path.read_text(encoding="utf-8") == again.read_text(encoding="utf-8")

    out = tmp_path / "verify.json"
    assert main(["verify", "--graph", str(path), "--gamma", "0.25", "--rho", "0.0", "-o", str(out)]) == 0
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["metadata"]["subcommand"] == "verify"
    assert payload["metadata"]["summary"]["violations"] == 0
    assert [c["k"] for c in payload["report"]["checks"]] == list(range(3, 10))


def test_mincut_on_complete_graph(capsys):
    assert main(["mincut", "--complete", "6", "--k", "2:3"]) == 0
    rows = _data_rows(capsys.readouterr().out)
    assert rows[0] == "k,min_cut,exact,witness"
    assert rows[1].startswith("2,8,true,") and rows[2].startswith("3,9,true,")


def test_pairing_with_enumeration(capsys):
    assert main(["pairing", "--n1", "3", "--n2", "4", "--exact"]) == 0
    text = capsys.readouterr().out
    rows = _data_rows(text)
    assert rows[0] == "l,probability,tail_bound,enumerated"
    assert len(rows) == 1 + 4
    assert "summary.mean" in read_csv_metadata(text)


def test_hitting_summary(capsys):
    assert main(["hitting", "--complete", "40", "--lambda", "2", "--bounds"]) == 0
    text = capsys.readouterr().out
    meta = read_csv_metadata(text)
    assert "summary.per_node_log_H" in meta
    assert float(meta["summary.limit"]) == pytest.approx(0.19315, abs=1e-5)
    assert "summary.log_explicit_upper" in meta
    assert len(_data_rows(text)) == 1 + 41


def test_hitting_needs_lambda():
    assert main(["hitting", "--complete", "40"]) == 1


def test_hitting_from_rate_file(tmp_path, capsys):
    rates = tmp_path / "rates.txt"
    rates.write_text("# k birth\n1 1.0\n2 0.0\n", encoding="utf-8")
    assert main(["hitting", "--birth-rates", str(rates), "--format", "json"]) == 0
    report = json.loads(capsys.readouterr().out)["report"]
    values = [row["log_H"] for row in report["rows"]]
    assert values[0] == "-inf"
    assert values[2] == pytest.approx(0.6931471805599453)


def test_simulate_is_reproducible(capsys):
    argv = ["simulate", "--complete", "5", "--tau", "0.1", "--reps", "20", "--seed", "3"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    assert capsys.readouterr().out == first
    assert len(_data_rows(first)) == 21


def test_simulate_trajectory_json(capsys):
    assert main(["simulate", "--complete", "8", "--tau", "0.0", "--trajectory", "0:4:5", "--format", "json"]) == 0
    report = json.loads(capsys.readouterr().out)["report"]
    assert report[0] == {"t": 0.0, "infected": 8}
    assert len(report) == 5


def test_bounds_er_sweep(capsys):
    assert main(["bounds", "er", "--sweep", "sigma=3:10:4"]) == 0
    rows = _data_rows(capsys.readouterr().out)
    assert rows[0] == "sigma,tau0,sigma_tau0"
    assert len(rows) == 5


def test_bounds_er_infeasible_is_not_an_error(capsys):
    assert main(["bounds", "er", "--sigma", "2", "--tau", "1"]) == 0
    report = json.loads(capsys.readouterr().out)["report"]
    assert report["feasible"] is False
    assert report["growth_exponent"] is None


def test_bounds_er_dense_csv(capsys):
    assert main(["bounds", "er", "--n", "1000", "--p", "0.5", "--tau", "0.004", "--format", "csv"]) == 0
    text = capsys.readouterr().out
    assert "feasible,true" in text
    assert "terms.lambda," in text and "terms.constant_exponent," in text


def test_bounds_cm_inapplicable_constant(capsys):
    assert main(["bounds", "cm", "--dist", "constant:2", "--tau", "1"]) == 0
    report = json.loads(capsys.readouterr().out)["report"]
    assert report["feasible"] is False and report["notes"]


def test_bounds_cm_ratio_sweep(capsys):
    assert main(["bounds", "cm", "--dist", "poisson:3", "--ratio-sweep", "0.1:0.5:3"]) == 0
    rows = _data_rows(capsys.readouterr().out)
    assert rows[0] == "gamma,psi,entropy,ratio"
    assert len(rows) == 4


@pytest.mark.parametrize(
    "argv",
    [
        ["gen", "--er", "5", "1.5"],
        ["mincut", "--complete", "5"],
        ["bounds", "er", "--sweep", "tau=1:2:3"],
        ["bounds", "cm", "--dist", "weibull:2", "--tau", "1"],
        ["bounds", "cm", "--dist", "empirical:x=1", "--tau", "1"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_one(argv):
    assert main(argv) == 1


def test_range_parsing():
    assert parse_range("0:1:5") == (0.0, 1.0, 5)
    name, values = parse_sweep("sigma=3:5:3")
    assert name == "sigma" and values.tolist() == [3.0, 4.0, 5.0]
    with pytest.raises(UsageError):
        parse_range("1:0:3")
    with pytest.raises(UsageError):
        parse_sweep("3:5:3")
