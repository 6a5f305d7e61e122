import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from mednnt import reporting
from mednnt.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_USAGE, main
from mednnt.core import Dataset
from mednnt.inference import sandwich
from mednnt.simulate import SimulationConfig, generate
from mednnt.stack import solve

EXAMPLE_TABLE = """\
INNE  2.5000
IEIN  3.3333
INNT  2.7027
DNNE  3.3333
DEIN  5.0000
DNNT  3.7037
NNE   1.4286
EIN   2.0000
NNT   1.5625"""


def test_example_table(capsys):
    assert main(["example"]) == 0
    assert capsys.readouterr().out.strip() == EXAMPLE_TABLE


def test_example_json_validates(capsys):
    assert main(["example", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    jsonschema.validate(doc, reporting.load_schema("example"))
    assert doc["indices"]["EIN"] == pytest.approx(2.0)


@pytest.fixture()
def cohort_csv(tmp_path):
    path = tmp_path / "cohort.csv"
    assert main(["generate", "--n", "1600", "--seed", "31", "--out", str(path)]) == 0
    return path


def test_estimate_report(cohort_csv, tmp_path):
    out = tmp_path / "report.json"
    assert main(["estimate", "--input", str(cohort_csv), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, reporting.load_schema("report"))
    nnt = doc["indices"]["NNT"]
    assert 1.6 < nnt["estimate"] < 2.6
    assert nnt["lower"] <= nnt["estimate"] <= nnt["upper"]
    eff = doc["effects"]
    for g in ("group0", "group1", "marginal"):
        assert eff["p_total"][g]["estimate"] == pytest.approx(
            eff["p_direct"][g]["estimate"] + eff["p_indirect"][g]["estimate"], abs=1e-15)
    assert doc["metadata"]["n"] == 1600
    assert doc["diagnostics"]["residual_norm"] < 1e-8 * 1600


def test_estimate_stdout_and_column_mapping(tmp_path, capsys):
    data = generate(SimulationConfig(n=800, seed=2), 0)
    path = tmp_path / "renamed.csv"
    reporting.write_csv(data, path, {"outcome": "y", "exposure": "x", "mediator": "z", "confounder": "age"})
    assert main(["estimate", "--input", str(path), "--outcome", "y", "--exposure", "x", "--mediator", "z",
                 "--confounder", "age", "--family", "logit", "--level", "0.9"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["metadata"]["level"] == 0.9


def test_infinite_index_serialization():
    for rep in range(20):
        data = generate(SimulationConfig(gamma=(-1.0, 0.0, -2.0), n=400, seed=2), rep)
        theta = solve(data, "logit")
        if theta.infinite_indices():
            break
    doc = reporting.estimate_report(data, theta, sandwich(data, theta, "logit"), "logit")
    jsonschema.validate(doc, reporting.load_schema("report"))
    name = theta.infinite_indices()[0]
    assert doc["indices"][name] == {"estimate": "inf", "se": None, "lower": None, "upper": None, "infinite": True}


def test_parse_error_names_row_and_column(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("I,A,M,L\n1,0,2,0.5\n0,1,1,0.4\n")
    assert main(["estimate", "--input", str(path)]) == EXIT_DATA
    err = capsys.readouterr().err
    assert "row 1" in err and "'M'" in err
    with pytest.raises(reporting.ParseError) as info:
        reporting.read_csv(path)
    assert (info.value.row, info.value.column) == (1, "M")


def test_missing_column_and_bad_number(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("I,A,M\n1,0,1\n")
    with pytest.raises(reporting.ParseError):
        reporting.read_csv(path)
    path.write_text("I,A,M,L\n1,0,1,abc\n")
    with pytest.raises(reporting.ParseError) as info:
        reporting.read_csv(path)
    assert info.value.column == "L"


def test_empty_exposure_group(tmp_path, capsys):
    path = tmp_path / "unexposed.csv"
    reporting.write_csv(Dataset([1, 0, 1, 0], [0, 0, 0, 0], [1, 1, 0, 0], [0.1, 0.2, 0.3, 0.4]), path)
    assert main(["estimate", "--input", str(path)]) == EXIT_DATA
    assert "empty exposure group" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert main(["estimate", "--input", str(tmp_path / "nope.csv")]) == EXIT_DATA


def test_numerical_failure_exit_code(tmp_path):
    path = tmp_path / "separated.csv"
    L = np.array([-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0])
    reporting.write_csv(Dataset((L > 0).astype(float), [0, 1, 0, 1, 0, 1, 0, 1], [1, 0, 0, 1, 1, 0, 0, 1], L), path)
    assert main(["estimate", "--input", str(path)]) == EXIT_NUMERIC


def test_usage_errors():
    with pytest.raises(SystemExit) as info:
        main(["simulate"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main(["oracle", "--beta", "1,2"])
    assert info.value.code == EXIT_USAGE


def test_simulate_is_reproducible(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.json"
        assert main(["simulate", "--n", "200", "--reps", "10", "--seed", "7", "--draws", "200000",
                     "--out", str(out)]) == 0
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    csvs = [o.with_suffix(".replications.csv") for o in outs]
    assert csvs[0].read_bytes() == csvs[1].read_bytes()
    doc = json.loads(outs[0].read_text())
    jsonschema.validate(doc, reporting.load_schema("coverage"))
    assert doc["retained"] + doc["excluded"] == 10


def test_oracle_command(tmp_path, capsys):
    out = tmp_path / "truth.json"
    assert main(["oracle", "--draws", "200000", "--out", str(out)]) == 0
    table = capsys.readouterr().out
    assert table.splitlines()[-1].startswith("NNT")
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, reporting.load_schema("oracle"))
    lines = out.with_suffix(".indices.csv").read_text().splitlines()
    assert lines[0] == "index,value" and len(lines) == 10


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mednnt.cli", "example"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == EXAMPLE_TABLE
