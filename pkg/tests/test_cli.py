import json
import math
import subprocess
import sys
from pathlib import Path

import pytest
from click.testing import CliRunner

from chaostail.cli import EXIT_DEGENERATE, EXIT_INPUT, EXIT_NO_POSITIVE_MAX, main_group

jsonschema = pytest.importorskip("jsonschema")
SCHEMA = json.loads((Path(__file__).resolve().parents[1] / "docs" / "report.schema.json").read_text())


def run(*args, env=None):
    r = CliRunner().invoke(main_group, list(args), env=env, catch_exceptions=False)
    return r.exit_code, r.output


def report(*args, env=None):
    code, out = run(*args, env=env)
    assert code == 0, out
    return json.loads(out)


def test_analyze_product2_json_validates():
    rep = report("analyze", "--function", "product2", "--x", "10,20", "--mc-n", "10000")
    jsonschema.validate(rep, SCHEMA)
    assert rep["h0"] == pytest.approx(1 / math.sqrt(math.pi), rel=1e-8)
    assert rep["m"] == 0 and rep["kind"] == "finite"
    ev = rep["evaluations"][1]
    assert ev["log10_tail"] == pytest.approx(math.log10(ev["tail"]), rel=1e-12)
    assert rep["mc"]["n"] == 10000


def test_analyze_expression_with_covariance(tmp_path):
    cov = tmp_path / "b.csv"
    cov.write_text("1,0.5\n0.5,1\n")
    rep = report("analyze", "--function", "u1*u2", "--alpha", "2", "--dim", "2", "--cov", str(cov),
                 "--x", "30", "--mc-n", "0")
    jsonschema.validate(rep, SCHEMA)
    closed = 1.5 / math.sqrt(2 * math.pi) * 30**-0.5 * math.exp(-30 / 1.5)
    assert rep["evaluations"][0]["tail"] == pytest.approx(closed, rel=1e-8)
    assert len(rep["input"]["cov_digest"]) == 16


def test_analyze_with_chart(tmp_path):
    chart = tmp_path / "circle.json"
    chart.write_text(json.dumps({"name": "circle", "dim": 1, "ambient_dim": 3,
                                 "map": ["0", "cos(2*pi*s1)", "sin(2*pi*s1)"]}))
    rep = report("analyze", "--function", "u1^2+2*u2^2+2*u3^2", "--alpha", "2", "--dim", "3",
                 "--chart", str(chart), "--x", "40", "--mc-n", "0")
    jsonschema.validate(rep, SCHEMA)
    assert rep["m"] == 1 and rep["h0"] == pytest.approx(math.sqrt(2), rel=1e-8)
    assert rep["maximizers"] is None and rep["chart_ids"] == ["circle"]


def test_csv_output():
    code, out = run("analyze", "--function", "product_d3", "--x", "10,20", "--format", "csv", "--mc-n", "0")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "x,tail,log10_tail,density,log10_density,valid"
    assert len(lines) == 3


def test_degenerate_exit_code_and_block():
    code, out = run("analyze", "--function", "diameter_n3_m2", "--x", "10", "--mc-n", "0")
    assert code == EXIT_DEGENERATE
    rep = json.loads(out)
    jsonschema.validate(rep, SCHEMA)
    assert rep["error"]["kind"] == "degenerate_hessian"
    assert rep["error"]["eigenvalues"]


def test_no_positive_maximum():
    code, out = run("analyze", "--function", "-u1^2-u2^2", "--alpha", "2", "--dim", "2", "--x", "1")
    assert code == EXIT_NO_POSITIVE_MAX
    jsonschema.validate(json.loads(out), SCHEMA)


@pytest.mark.parametrize("args", [
    ["--function", "u1*)u2", "--alpha", "2", "--dim", "2", "--x", "1"],
    ["--function", "u1*u2", "--alpha", "3", "--dim", "2", "--x", "1"],
    ["--function", "u1*u2", "--dim", "2", "--x", "1"],
    ["--function", "product2", "--x", "-1"],
    ["--function", "no_such_entry", "--x", "1"],
])
def test_input_errors(args):
    code, out = run("analyze", *args)
    assert code == EXIT_INPUT, out
    jsonschema.validate(json.loads(out), SCHEMA)


def test_bad_covariance(tmp_path):
    cov = tmp_path / "b.csv"
    cov.write_text("1,0.5\n0.4,1\n")
    code, _ = run("analyze", "--function", "u1*u2", "--alpha", "2", "--dim", "2", "--cov", str(cov), "--x", "1")
    assert code == EXIT_INPUT


def test_seed_env_override():
    a = report("mc", "--function", "product_d3", "--x", "10", "--n", "5000", "--seed", "1")
    b = report("mc", "--function", "product_d3", "--x", "10", "--n", "5000", "--seed", "1",
               env={"CHAOS_SEED": "2"})
    c = report("mc", "--function", "product_d3", "--x", "10", "--n", "5000", "--seed", "2")
    assert b[0]["seed"] == 2 and b[0]["mean"] == c[0]["mean"] != a[0]["mean"]


def test_determinism_end_to_end():
    args = ("analyze", "--function", "product_d3", "--x", "10", "--mc-n", "20000", "--seed", "4")
    a, b = report(*args), report(*args)
    for rep in (a, b):
        rep.pop("timing")
    assert a == b


@pytest.mark.parametrize("estimator", ["conditional", "plain", "density"])
def test_mc_estimators(estimator):
    rec = report("mc", "--function", "product2", "--x", "2", "--n", "20000", "--estimator", estimator)
    assert rec[0]["mean"] > 0 and rec[0]["n"] == 20000


def test_compare_product2():
    rep = report("compare", "--function", "product2", "--x", "20,40,80", "--n", "100000")
    assert rep["expected_slope"] == -1.0
    assert len(rep["rows"]) == 3


def test_compare_refuses_degenerate():
    code, _ = run("compare", "--function", "diameter_n3_m2", "--x", "10,20", "--n", "1000")
    assert code == EXIT_DEGENERATE


def test_catalog_commands():
    names = [e["name"] for e in json.loads(run("catalog", "list")[1])]
    assert "product2" in names
    shown = json.loads(run("catalog", "show", "quadratic_form_1_2_2")[1])
    assert shown["reference"]["m"] == 1
    assert run("catalog", "show", "missing")[0] == EXIT_INPUT


def test_console_entry_maps_usage_errors():
    r = subprocess.run([sys.executable, "-m", "chaostail", "analyze", "--bogus"], capture_output=True, text=True)
    assert r.returncode == EXIT_INPUT
    r = subprocess.run([sys.executable, "-m", "chaostail", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "chaostail" in r.stdout
