import io
import json

import jsonschema
import pytest

from singzero.cli import REPORT_SCHEMA, format_table, main, run_pipeline
from singzero.corpus import load_case
from singzero.textio import parse_system


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_deflate_case_json(capsys):
    code, out, _ = run(["deflate", "--case", "dz2", "--theta", "0.005", "--eps", "0.005", "--json"], capsys)
    report = json.loads(out)
    jsonschema.validate(report, REPORT_SCHEMA)
    assert code == 0
    assert report["final_size"] == 3 and report["n_alpha"] == 0
    assert report["verdict"] == "Exact" and report["verified"]


def test_deflate_human_output(capsys):
    code, out, _ = run(["deflate", "--case", "ex6"], capsys)
    assert code == 0
    assert "final size   7 (3 new variables" in out
    assert "alpha3 in [" in out


def test_deflate_from_file(tmp_path, capsys):
    path = tmp_path / "sys.txt"
    path.write_text("x^2 + y - 3\nx - y + 1\n")
    code, out, _ = run(["deflate", str(path), "--point", "1.0001, 1.9999", "--theta", "0.01"], capsys)
    assert code == 0
    assert "no deflation needed" in out
    point = tmp_path / "p.txt"
    point.write_text("1.0001 1.9999\n")
    code, out, _ = run(["deflate", str(path), "--point-file", str(point), "--theta", "0.01", "--json"], capsys)
    assert code == 0 and json.loads(out)["message"] == "no deflation needed"


def test_deflate_errors(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("x + $\n")
    code, _, err = run(["deflate", str(path), "--point", "0"], capsys)
    assert code == 1 and "line 1" in err
    path.write_text("x + y\nx - y\n")
    code, _, err = run(["deflate", str(path)], capsys)
    assert code == 1 and "no approximate zero" in err
    code, _, err = run(["deflate", str(path), "--point", "0"], capsys)
    assert code == 1 and "coordinates" in err
    code, _, err = run(["deflate", str(path), "--point", "1,1"], capsys)
    assert code == 1 and "not an approximate zero" in err
    code, _, err = run(["deflate", "--case", "nope"], capsys)
    assert code == 1


def test_exit_code_perturbed(capsys):
    code, out, _ = run(
        ["deflate", "--case", "ex8b", "--theta", "0.5", "--max-retries", "1", "--no-verify", "--json"], capsys
    )
    report = json.loads(out)
    jsonschema.validate(report, REPORT_SCHEMA)
    assert report["verdict"] in ("Exact", "Perturbed")
    assert code == (0 if report["verdict"] == "Exact" else 2)


def test_exit_code_unverified():
    report = run_pipeline(parse_system("x^2 - 2"), [1.4142], "sqrt2", theta=0.01)
    assert report.exit_code() == 0
    report.accuracy = "unverified"
    assert report.exit_code() == 3
    report.verdict = "Perturbed"
    assert report.exit_code() == 2
    report.status = "error"
    assert report.exit_code() == 1


def test_run_pipeline_is_deterministic():
    c = load_case("dz2")
    a = run_pipeline(c.system, c.approx_zero, "a", theta=0.005, eps=0.005)
    b = run_pipeline(c.system, c.approx_zero, "a", theta=0.005, eps=0.005)
    assert (a.verdict, a.final_size, a.point, a.inclusion) == (b.verdict, b.final_size, b.point, b.inclusion)


def test_bench_table_and_json(capsys):
    code, out, _ = run(["bench", "dz2", "--breadth", "5"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].split()[:4] == ["System", "var", "mul", "Verified"]
    row = lines[2].split()
    assert row[0] == "breadth5" and row[6] == "5" and row[7] == "0"
    code, out, _ = run(["bench", "ex3", "--json"], capsys)
    reports = json.loads(out)
    for r in reports:
        jsonschema.validate(r, REPORT_SCHEMA)


def test_bench_empty_selector(capsys):
    code, out, _ = run(["bench"], capsys)
    assert code == 0
    assert out.strip().splitlines() == [format_table([])]


def test_bench_unknown_case(capsys):
    code, _, err = run(["bench", "nope"], capsys)
    assert code == 1 and "unknown case" in err


def test_cases_and_show(capsys):
    code, out, _ = run(["cases"], capsys)
    assert code == 0 and "dz2" in out
    code, out, _ = run(["show", "ex3"], capsys)
    assert code == 0
    body = "\n".join(line for line in out.splitlines() if not line.startswith("#"))
    assert parse_system(body) == load_case("ex3").system
    code, _, _ = run(["show", "nope"], capsys)
    assert code == 1


def test_requires_subcommand():
    with pytest.raises(SystemExit):
        main([])


def test_error_report_validates():
    report = run_pipeline(parse_system("x + y\nx - y"), [1.0, 1.0], "far")
    assert report.status == "error" and report.exit_code() == 1
    jsonschema.validate(json.loads(json.dumps(report.to_json())), REPORT_SCHEMA)
    buf = io.StringIO()
    buf.write(format_table([report]))
    assert "error" in buf.getvalue()
