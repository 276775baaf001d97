import csv
import io
import json

import pytest

from ivalkit import cli
from ivalkit import experiments as ex
from ivalkit import rounding as rd


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, list(csv.DictReader(io.StringIO(out)))


def test_check_rounding(capsys):
    code, rows = run(capsys, "check-rounding", "--n", "1000")
    assert code == 0
    assert {r["op"] for r in rows} >= {"add", "sub", "mul", "div"}
    assert all(r["failures"] == "0" for r in rows)


def test_check_rounding_reports_failure(capsys, monkeypatch):
    real = rd.conformance_suite

    def broken(*args, **kwargs):
        report = real(*args, **kwargs)
        report.failures.append(("add", 1.0, 2.0, 3.0, 3.0))
        return report

    monkeypatch.setattr(cli.rd, "conformance_suite", broken)
    code, rows = run(capsys, "check-rounding", "--n", "50")
    assert code == 2
    assert {r["op"]: r["failures"] for r in rows}["add"] == "1"


def test_check_rounding_unknown_backend(capsys):
    assert cli.main(["check-rounding", "--n", "10", "--backend", "abacus"]) == 3


def test_mueller(capsys):
    code, rows = run(capsys, "mueller", "--iterations", "20")
    assert code == 0 and len(rows) == 20
    assert rows[14]["point"] == "-3.568095025888212"
    assert rows[15]["lo"] == "-inf" and rows[15]["hi"] == "inf"


def test_chain_and_global_flags_in_either_position(capsys, tmp_path):
    out = tmp_path / "chain.csv"
    code = cli.main(["--seed", "3", "--samples", "500", "chain", "--measurements", "1,2", "--operations", "2",
                     "--out", str(out)])
    assert code == 0 and capsys.readouterr().out == ""
    first = ex.chain_from_csv(out.read_text())
    code = cli.main(["chain", "--seed", "3", "--samples", "500", "--measurements", "1,2", "--operations", "2",
                     "--out", str(out)])
    assert code == 0 and ex.chain_from_csv(out.read_text()) == first
    assert len(first) == 2 * 3 * 9
    for s in (1, 2):
        for n in range(3):
            assert sum(first[(s, n, ex.bin_label(k))] for k in range(9)) == pytest.approx(1.0)


def test_chain_bad_measurements(capsys):
    assert cli.main(["chain", "--measurements", "0"]) == 3
    assert cli.main(["chain", "--measurements", "a,b"]) == 3
    assert cli.main(["--samples", "0", "chain"]) == 3


def test_bench_deviation(capsys, tmp_path):
    deltas = tmp_path / "deltas.csv"
    code, rows = run(capsys, "bench-deviation", "--reference-paths", "--deltas", str(deltas))
    assert code == 0
    got = {(r["expr"], r["arithmetic"]): float(r["integral"]) for r in rows}
    assert got[("x", "fb")] == 0.0
    assert got[("1/(x+2)", "classical")] == pytest.approx(1.333333333333333, abs=1e-9)
    assert got[("(x+2)/(x+2)", "fb")] <= 1e-9
    delta_rows = list(csv.DictReader(io.StringIO(deltas.read_text())))
    assert delta_rows and set(delta_rows[0]) == {"expr", "arithmetic", "eval_path", "integral", "reference", "delta"}


def test_bench_deviation_custom_expression(capsys):
    code, rows = run(capsys, "bench-deviation", "--expr", "x^2", "--arith", "fb", "classical")
    assert code == 0
    assert [(r["arithmetic"], r["eval_path"], r["integral"]) for r in rows] == [
        ("fb", "fb", "0.5"), ("classical", "mul", "4.0"), ("classical", "pow", "2.0")
    ]
    assert cli.main(["bench-deviation", "--expr", "x +"]) == 3


def test_bench_deviation_flags_ordering_violation(capsys, monkeypatch):
    real = cli.mt.bench_deviation

    def skewed(*args, **kwargs):
        reports = real(*args, **kwargs)
        return [r if r.arithmetic != "fb" else cli.mt.DeviationReport(r.expr, r.arithmetic, 99.0, r.cheb_bound, r.eval_path)
                for r in reports]

    monkeypatch.setattr(cli.mt, "bench_deviation", skewed)
    assert cli.main(["bench-deviation", "--expr", "x^2"]) == 2


def test_solve_builtin_classical(capsys):
    code, rows = run(capsys, "solve", "--builtin", "symmetric", "--arith", "classical")
    assert code == 0
    want = [(-101.0, 71.0), (-62.25, 99.0), (-90.0, 90.0)]
    for r, (lo, hi) in zip(rows, want):
        assert float(r["lo"]) == pytest.approx(lo, abs=1e-2)
        assert float(r["hi"]) == pytest.approx(hi, abs=1e-2)
        assert r["method"] == "classical"


def test_solve_with_oracle(capsys):
    code, rows = run(capsys, "solve", "--builtin", "skew", "--arith", "fb", "--oracle")
    assert code == 0
    assert [r["method"] for r in rows] == ["fb+interval"] * 3 + ["corner-oracle"] * 3
    code, rows = run(capsys, "solve", "--builtin", "skew", "--arith", "affine", "--pure")
    assert code == 0 and rows[0]["method"] == "affine"


def test_solve_file(capsys, tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"n": 2, "A": [[2, 2], [0, 0], [0, 0], [1, 1]], "b": [[2, 4], [3, 3]]}))
    code, rows = run(capsys, "solve", "--file", str(path), "--oracle")
    assert code == 0
    assert (float(rows[0]["lo"]), float(rows[0]["hi"])) == (1.0, 2.0)
    path.write_text("{}")
    assert cli.main(["solve", "--file", str(path)]) == 3
    assert cli.main(["solve", "--file", str(tmp_path / "missing.json")]) == 3


def test_fb_eval_literal(capsys):
    code, rows = run(capsys, "fb-eval", "[|x|-x, |x|-x+0.25]", "--points", "21")
    assert code == 0 and len(rows) == 21
    mid = rows[10]
    assert (float(mid["x"]), float(mid["L"]), float(mid["U"])) == (0.0, 0.0, 0.25)


def test_fb_eval_expression_and_coefficients(capsys, tmp_path):
    code, rows = run(capsys, "fb-eval", "(x-0.5)*(x-0.5)", "--coefficients")
    assert code == 0
    got = {(r["bound"], r["param"]): (float(r["coef_x"]), float(r["coef_abs"]), float(r["const"])) for r in rows}
    assert got[("L", "x")] == (-1.0, 1.0, 0.0)
    assert got[("U", "")] == (0.0, 0.0, 0.25)
    svg = tmp_path / "band.svg"
    assert cli.main(["fb-eval", "x*x", "--svg", str(svg), "--points", "5"]) == 0
    assert svg.read_text().startswith("<svg")


def test_fb_eval_multiple_parameters(capsys):
    assert cli.main(["fb-eval", "x*y", "--points", "3"]) == 3
    code, rows = run(capsys, "fb-eval", "x*y", "--points", "3", "--fix", "y=1")
    assert code == 0
    for r in rows:
        assert float(r["L"]) <= float(r["x"]) <= float(r["U"])
    for bad in (["--fix", "z=1"], ["--fix", "y=2"], ["--fix", "y=abc"]):
        assert cli.main(["fb-eval", "x*y", *bad]) == 3


def test_fb_eval_bad_input(capsys):
    assert cli.main(["fb-eval", "[x"]) == 3
    assert cli.main(["fb-eval", "x", "--points", "1"]) == 3


def test_usage_errors(capsys):
    assert cli.main([]) == 3
    assert cli.main(["nonsense"]) == 3
    assert cli.main(["--help"]) == 0
