import csv
import json
import math

import pytest

from quarticsk.cli import main, parse_values, read_config
from quarticsk.disorder import DisorderPlan
from quarticsk.errors import BudgetExceededError
from quarticsk.phaselab import (
    CELLS_HEADER,
    THEORY_HEADER,
    SweepSpec,
    cells_csv,
    estimate_work,
    load_grid,
    run_sweep,
    write_report,
)


def _spec(**kw):
    base = dict(beta_grid=(0.0, 0.5), m_grid=(0.0, 0.9), n_list=(6, 8), eps=0.2,
                plan=DisorderPlan(5, base_seed=2), outputs=frozenset({"csv", "json", "plot"}))
    base.update(kw)
    return SweepSpec(**base)


def test_single_cell_beta_zero():
    grid = run_sweep(_spec(beta_grid=(0.0,), m_grid=(0.3,), n_list=(6,)))
    (est,) = grid.ordered_cells()
    assert est.mean_f == 0.0 and est.stderr == 0.0


def test_overlays_at_m_09():
    grid = run_sweep(_spec(beta_grid=(4.69, 5.26), m_grid=(0.9,), n_list=(6,)))
    (tc,) = grid.overlays()
    assert tc.window.lo == pytest.approx(4.6900, abs=1e-3)
    assert tc.window.hi == pytest.approx(5.2632, abs=1e-3)
    from quarticsk.theory import envelope
    assert envelope(5.2632, 0.9) == pytest.approx(-0.002965, abs=1e-5)
    env = {(e["beta"], e["m"]): e["envelope"] for e in grid.envelope_values()}
    assert env[(4.69, 0.9)] == 0.0
    assert env[(5.26, 0.9)] < 0


def test_report_files(tmp_path):
    grid = run_sweep(_spec(m_grid=(0.5, 0.95)))
    paths = write_report(grid, tmp_path)
    names = sorted(p.name for p in paths)
    assert names == ["cells.csv", "plot_phase.py", "report.json", "theory.csv"]

    with open(tmp_path / "cells.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CELLS_HEADER
    assert len(rows) == 1 + 8
    by_key = {(c.n, c.m, c.beta): c for c in grid.ordered_cells()}
    for r in rows[1:]:
        est = by_key[(int(r[2]), float(r[1]), float(r[0]))]
        assert float(r[8]) == est.mean_f
        assert float(r[9]) == est.stderr

    with open(tmp_path / "theory.csv", newline="") as fh:
        th = list(csv.DictReader(fh))
    assert list(th[0].keys()) == THEORY_HEADER
    row05 = next(r for r in th if float(r["m"]) == 0.5)
    assert row05["window_lo"] == "" and row05["window_hi"] == ""
    row95 = next(r for r in th if float(r["m"]) == 0.95)
    assert float(row95["beta_at"]) == pytest.approx(10.2564, abs=1e-4)
    assert float(row95["beta_c"]) == pytest.approx(7.0136, abs=1e-4)
    assert float(row95["i_m"]) == pytest.approx(0.116907, abs=1e-4)

    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["artifact"]["version"]
    assert rep["budget"]["used"] == estimate_work(grid.spec)
    assert len(rep["cells"]) == 8 and len(rep["theory"]) == 2

    script = (tmp_path / "plot_phase.py").read_text()
    assert "cells.csv" in script and "theory.csv" in script


def test_plot_script_runs(tmp_path):
    pytest.importorskip("matplotlib")
    import subprocess
    import sys

    grid = run_sweep(_spec(beta_grid=(0.0, 0.5, 1.0), m_grid=(0.0, 0.5, 0.9)))
    write_report(grid, tmp_path)
    subprocess.run([sys.executable, str(tmp_path / "plot_phase.py")], check=True)
    assert (tmp_path / "phase.svg").read_text().lstrip().startswith("<?xml")


def test_rerun_identical_csv():
    a = cells_csv(run_sweep(_spec()))
    b = cells_csv(run_sweep(_spec(plan=DisorderPlan(5, base_seed=2, parallelism=4))))
    assert a == b


def test_budget_refused_up_front():
    spec = _spec(n_list=(20,), budget=1e6)
    with pytest.raises(BudgetExceededError) as info:
        run_sweep(spec)
    assert info.value.estimate == estimate_work(spec) > 1e6


def test_invalid_grids():
    with pytest.raises(ValueError):
        _spec(beta_grid=())
    with pytest.raises(ValueError):
        _spec(beta_grid=(-1.0,))
    with pytest.raises(ValueError):
        _spec(m_grid=(1.0,))
    with pytest.raises(ValueError):
        _spec(outputs=frozenset({"xls"}))


def test_load_grid_roundtrip(tmp_path):
    grid = run_sweep(_spec())
    write_report(grid, tmp_path)
    again = load_grid(tmp_path / "report.json")
    assert cells_csv(again) == cells_csv(grid)


def test_parse_values():
    assert parse_values("0.5,1,2") == [0.5, 1.0, 2.0]
    assert parse_values("0:1:3") == [0.0, 0.5, 1.0]
    assert parse_values("8:12:3", int) == [8, 10, 12]


def test_cli_sweep_and_report(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["sweep", "--n", "6,8", "--beta", "0:1:3", "--m", "0,0.9", "--samples", "4",
                 "--seed", "11", "--out", str(out), "--outputs", "csv,json"])
    assert code == 0
    first = (out / "cells.csv").read_bytes()
    again = tmp_path / "again"
    assert main(["report", "--from", str(out), "--out", str(again), "--outputs", "csv,json,plot"]) == 0
    assert (again / "cells.csv").read_bytes() == first
    assert (again / "plot_phase.py").exists()


def test_cli_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# manifest\nn = 6\nbeta = 0.5\nm = 0.2\nsamples = 3\nseed = 5\n")
    assert read_config(cfg)["beta"] == "0.5"
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["sweep", "--config", str(cfg), "--out", str(b), "--beta", "0.7"]) == 0
    ra = list(csv.DictReader(open(a / "cells.csv")))
    rb = list(csv.DictReader(open(b / "cells.csv")))
    assert ra[0]["beta"] == "0.5" and rb[0]["beta"] == "0.7"
    assert ra[0]["samples"] == "3" and ra[0]["seed"] == "5"


def test_cli_parallelism_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("QUARTICSK_PARALLELISM", "3")
    out = tmp_path / "p"
    assert main(["sweep", "--n", "6", "--beta", "0.5", "--m", "0.1", "--samples", "2", "--out", str(out),
                 "--outputs", "json"]) == 0
    assert json.loads((out / "report.json").read_text())["spec"]["plan"]["parallelism"] == 3


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["sweep", "--n", "24", "--samples", "1000", "--budget", "1e6", "--out", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["exit_code"] == 2 and err["error"]["estimate"] > 1e6

    assert main(["enumerate", "--n", "10", "--m", "1.5"]) == 1
    assert json.loads(capsys.readouterr().err)["error"]["exit_code"] == 1

    assert main(["bogus"]) == 1
    capsys.readouterr()

    assert main(["sweep", "--n", "10", "--m", "0.3", "--eps", "0.01", "--restricted", "--samples", "2",
                 "--out", str(tmp_path / "e")]) == 1
    err = json.loads(capsys.readouterr().err)["error"]
    assert err["kind"] == "EmptyBandError" and err["nearest"] == pytest.approx([0.2, 0.4])


def test_cli_single_commands(capsys):
    assert main(["moments", "--n", "2", "--beta", "1", "--m", "0"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["second_moment_log"] == pytest.approx(math.log((math.e + 1) / 2), abs=1e-12)

    assert main(["bounds", "--m", "0.5,0.9", "--beta", "5.2632", "--n", "20", "--eps", "0.05"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["m_star"] == pytest.approx(0.8628, abs=1e-3)
    assert rep["rows"][0]["window_lo"] is None
    assert rep["rows"][1]["envelope"][0]["value"] == pytest.approx(-0.002965, abs=1e-5)

    assert main(["enumerate", "--n", "8", "--beta", "0", "--m", "0.3", "--eps", "2", "--corr"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["log_z"] == pytest.approx(0.0, abs=1e-13)
    assert rep["log_z_complement"] == "-inf"

    assert main(["mc", "--n", "6", "--beta", "0.4", "--m", "0.1", "--samples", "3", "--sweeps", "200",
                 "--rungs", "4"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["method"] == "monte_carlo" and len(rep["ladder"]) == 4
