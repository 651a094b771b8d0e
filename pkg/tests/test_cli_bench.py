import csv
import json
import math

import pytest

from cdaqcp.bench import COLUMNS, BenchParams, merge_baseline, run_bench
from cdaqcp.cli import disjunction_data, main, render_svg
from cdaqcp.instance_io import serialize
from cdaqcp.oracle import circle_instance

BOXQP_1 = "1\n0.8\n-2.0\n"
BOXQP_2 = "2\n0 0\n0 -1\n-1 0\n"


@pytest.fixture
def fixtures(tmp_path):
    d = tmp_path / "inst"
    d.mkdir()
    (d / "circle.json").write_text(serialize(circle_instance()))
    (d / "one.boxqp").write_text(BOXQP_1)
    (d / "two.txt").write_text(BOXQP_2)
    (d / "notes.md").write_text("ignored")
    return d


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_bench_three_fixtures(fixtures, tmp_path):
    out, plot = tmp_path / "b.csv", tmp_path / "p.csv"
    rows = run_bench(str(fixtures), BenchParams(out_csv=str(out), plot_csv=str(plot)))
    table = _read(out)
    assert len(rows) == len(table) == 3
    assert list(table[0]) == COLUMNS
    assert all(r["status"] == "optimal" for r in table)
    assert float(next(r for r in table if r["name"] == "one")["tau_upper"]) == pytest.approx(-0.2)
    assert float(next(r for r in table if r["name"] == "two")["tau_upper"]) == pytest.approx(-1.0)
    assert {r["name"] for r in _read(plot)} == {"circle", "one", "two"}


def test_bench_empty_directory(tmp_path):
    d = tmp_path / "empty"
    d.mkdir()
    out = tmp_path / "b.csv"
    assert run_bench(str(d), BenchParams(out_csv=str(out), plot_csv=None)) == []
    assert out.read_text().strip() == ",".join(COLUMNS)


def test_bench_isolates_failures(fixtures, tmp_path):
    (fixtures / "broken.json").write_text("{")
    out = tmp_path / "b.csv"
    run_bench(str(fixtures), BenchParams(out_csv=str(out), plot_csv=None))
    table = _read(out)
    broken = next(r for r in table if r["name"] == "broken")
    assert broken["status"].startswith("error:")
    assert sum(r["status"] == "optimal" for r in table) == 3


def test_bench_baseline_merge(fixtures, tmp_path):
    base = tmp_path / "base.csv"
    base.write_text("name,lower_bound,upper_bound\ncircle,0.6,0.8\ntwo,-1.5,-1.0\n")
    out = tmp_path / "b.csv"
    run_bench(str(fixtures), BenchParams(out_csv=str(out), plot_csv=None, baseline_csv=str(base)))
    table = {r["name"]: r for r in _read(out)}
    assert "additional_gap_closed" in table["circle"]
    # ours ~sqrt(0.5) against 0.6 with best upper ~sqrt(0.5): nearly all of the gap
    lo = float(table["circle"]["tau_lower"])
    ub = min(float(table["circle"]["tau_upper"]), 0.8)
    assert float(table["circle"]["additional_gap_closed"]) == pytest.approx((lo - 0.6) / (ub - 0.6) * 100)
    assert float(table["two"]["additional_gap_closed"]) == pytest.approx(100.0)
    assert table["one"]["additional_gap_closed"] == ""


def test_merge_baseline_sign():
    rows = [{"name": "a", "tau_lower": -2.0, "tau_upper": 0.0}]
    merge_baseline(rows, {"a": (-1.0, 1.0)})
    assert rows[0]["additional_gap_closed"] == pytest.approx(-50.0)


# -- command line ----------------------------------------------------------


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_solve(capsys, fixtures, tmp_path):
    sol = tmp_path / "sol.json"
    log = tmp_path / "log.jsonl"
    code, out, _ = run(capsys, "solve", str(fixtures / "circle.json"), "--log-json", str(log), "--output", str(sol))
    assert code == 0
    summary = json.loads(out)
    assert summary["status"] == "optimal" and abs(summary["tau_upper"] - math.sqrt(0.5)) <= 1e-3
    assert len(log.read_text().splitlines()) == summary["iterations"]
    assert json.loads(sol.read_text())["status"] == "optimal"


def test_cli_solve_log_to_stdout(capsys, fixtures):
    code, out, err = run(capsys, "solve", str(fixtures / "one.boxqp"), "--log-json", "-")
    assert code == 0
    assert all("k" in json.loads(ln) for ln in out.splitlines())
    assert json.loads(err.strip().splitlines()[-1])["tau_upper"] == pytest.approx(-0.2)


def test_cli_negate(capsys, fixtures):
    # maximizing -x^2 + 0.8x means minimizing x^2 - 0.8x: -0.16 at x = 0.4
    code, out, _ = run(capsys, "solve", str(fixtures / "one.boxqp"), "--negate")
    data = json.loads(out)
    assert code == 0 and data["tau_upper"] == pytest.approx(-0.16, abs=1e-6) and data["x"] == pytest.approx([0.4], abs=1e-4)


def test_cli_exit_codes(capsys, fixtures, tmp_path):
    assert run(capsys, "solve", str(tmp_path / "missing.json"))[0] == 65
    (tmp_path / "bad.json").write_text('{"n": 1}')
    assert run(capsys, "solve", str(tmp_path / "bad.json"))[0] == 65
    infeasible = {"n": 1, "bounds": [[-1, 1]], "objective": {"c": [1]}, "constraints": [{"Q": [[0, 0, 1]], "rhs": -0.1}]}
    (tmp_path / "inf.json").write_text(json.dumps(infeasible))
    assert run(capsys, "solve", str(tmp_path / "inf.json"))[0] == 3
    assert run(capsys, "solve", str(fixtures / "circle.json"), "--time-limit", "0")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == 64
    with pytest.raises(SystemExit) as exc:
        main(["solve", "x.json", "--mode", "nope"])
    assert exc.value.code == 64
    assert run(capsys, "enumerate", "1", "0", "2")[0] == 64


def test_cli_oracle(capsys, fixtures):
    code, out, _ = run(capsys, "oracle", str(fixtures / "one.boxqp"), "--step", "0.25")
    data = json.loads(out)
    assert code == 0 and data["value"] == pytest.approx(-0.2) and data["point"] == [1.0]


def test_cli_enumerate_and_svg(capsys, tmp_path):
    svg = tmp_path / "fig.svg"
    code, out, _ = run(capsys, "enumerate", "-1", "1", "2", "--svg", str(svg), "--points", "50")
    data = json.loads(out)
    assert code == 0 and len(data["triangles"]) == 4 and len(data["curve"]) == 50
    assert data["knots"] == pytest.approx([-1, 1 - math.sqrt(2), 0, math.sqrt(2) - 1, 1])
    for tri in data["triangles"]:
        assert tri["polyline"][0] == tri["polyline"][-1] and len(tri["polyline"]) == 4
    text = svg.read_text()
    assert text.startswith("<svg") and text.count("<polygon") == 4 and text.count("<circle") == 5


def test_render_svg_is_deterministic():
    data = disjunction_data(0.0, 2.0, 3, 40)
    assert render_svg(data) == render_svg(data)


def test_cli_equivalence(capsys):
    code, out, _ = run(capsys, "equivalence", "0", "3", "2", "--mode", "dplus")
    assert code == 0 and json.loads(out)["ok"]


def test_cli_bench(capsys, fixtures, tmp_path):
    out_csv = tmp_path / "b.csv"
    code, out, _ = run(capsys, "bench", str(fixtures), "--out", str(out_csv), "--plot", str(tmp_path / "p.csv"))
    assert code == 0 and "3 instances" in out
    assert len(_read(out_csv)) == 3


def test_cli_verify_quick(capsys):
    code, out, _ = run(capsys, "verify")
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 9 and all(ln.startswith("[PASS]") for ln in lines)
