import json

import pytest

from issc import cli
from issc.distortion import LogisticDistortionModel, synth_curve, write_samples
import numpy as np


def _config(tmp_path, extra=""):
    p = tmp_path / "c.yaml"
    p.write_text("scene:\n  p_o: [100, 50]\nlink:\n  P_T: 25 dBm\n" + extra)
    return str(p)


def test_solve_to_stdout(tmp_path, capsys):
    assert cli.main(["solve", "--config", _config(tmp_path)]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["scheme"] == "proposed" and d["R_s"] in (3.0, 6.0, 9.0, 12.0)


def test_solve_writes_report(tmp_path):
    assert cli.main(["solve", "--config", _config(tmp_path), "--out", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "report.json").read_text())["status"].startswith("optimal")


def test_baseline(tmp_path, capsys):
    assert cli.main(["baseline", "--config", _config(tmp_path)]) == 0
    assert json.loads(capsys.readouterr().out)["scheme"] == "wf_zf"


def test_infeasible_exit_code(tmp_path):
    assert cli.main(["solve", "--config", _config(tmp_path, "solver:\n  Pi: 1.0e-12\n")]) == 2


def test_error_exit_codes(tmp_path):
    assert cli.main(["solve", "--config", _config(tmp_path, "solver:\n  colour: blue\n")]) == 1
    assert cli.main(["solve", "--config", str(tmp_path / "missing.yaml")]) == 1


def test_sweep_csv(tmp_path):
    out = tmp_path / "s.csv"
    rc = cli.main(["sweep", "--config", _config(tmp_path), "--axis", "P_T", "--from", "25", "--to", "30",
                   "--points", "2", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("axis,scheme,R_s") and len(lines) == 5


def test_sweep_bounds_from_config_in_dbm(tmp_path):
    cfg = _config(tmp_path, "sweep:\n  sweep_from: 25\n  sweep_to: 30\n  sweep_points: 2\n")
    out = tmp_path / "s.csv"
    assert cli.main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    axis = [float(line.split(",")[0]) for line in out.read_text().splitlines()[1:]]
    assert axis[0] == pytest.approx(10 ** -0.5) and axis[-1] == pytest.approx(1.0)


def test_sweep_empty_grid(tmp_path, capsys):
    rc = cli.main(["sweep", "--config", _config(tmp_path), "--axis", "P_T", "--from", "25", "--to", "30",
                   "--points", "0"])
    assert rc == 0
    assert capsys.readouterr().out.splitlines() == [
        "axis,scheme,R_s,R_c,gamma_dB,ber_exact,ber_approx,D_o,log10_D_o,trace_crb,trace_hcrb,"
        "power_comm,power_sense,status"]


def test_fit(tmp_path, capsys):
    m = LogisticDistortionModel(6.0, -2.5, 1.7, 3.0, -3.0)
    write_samples(synth_curve(m, np.logspace(-8, -0.5, 30)), tmp_path / "s.csv")
    rc = cli.main(["fit", "--samples", str(tmp_path / "s.csv"), "--rs", "6", "--out", str(tmp_path / "b.csv")])
    assert rc == 0
    assert (tmp_path / "b.csv").read_text().startswith("R_s,Ds_hat,Dc_hat,E1,E2")
    (tmp_path / "few.csv").write_text("rho_b,D_o\n0.1,0.2\n")
    assert cli.main(["fit", "--samples", str(tmp_path / "few.csv"), "--rs", "6", "--out", str(tmp_path / "x.csv")]) == 1


def test_check(tmp_path, capsys):
    assert cli.main(["check", "--config", _config(tmp_path)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out and all(line.startswith("PASS") for line in out)


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "issc", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "sweep" in r.stdout
