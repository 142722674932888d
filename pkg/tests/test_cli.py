import json
import math

import numpy as np
import pytest

from hg_compton.cli import THREADS_ENV, main
from hg_compton.output import config_text_from_output

BEAM = """\
beam.k_keV = 500
beam.w0_pm = {w0}
beam.nx = {nx}
beam.ny = {ny}
"""


def write_cfg(path, body, w0=25, nx=1, ny=0):
    path.write_text(BEAM.format(w0=w0, nx=nx, ny=ny) + body, encoding="utf-8")
    return str(path)


def data_rows(path):
    lines = [l for l in open(path, encoding="utf-8").read().splitlines() if not l.startswith("#")]
    return lines[0].split(","), [l.split(",") for l in lines[1:]]


def test_kn_reference(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "kn.cfg", "scan.mode = kn-reference\nscan.theta_pi = 0.5, 0.1\n")
    out = tmp_path / "kn.csv"
    assert main([cfg, "--out", str(out), "--units", "barn"]) == 0
    cols, rows = data_rows(out)
    assert cols == ["theta_pi", "E0_keV", "value_keV2_sr", "value_barn_sr"]
    # sorted by theta
    assert [float(r[0]) for r in rows] == [0.1, 0.5]
    v, barn = float(rows[1][2]), float(rows[1][3])
    assert barn == pytest.approx(v * 197.3269804**2 * 1e4, rel=1e-14)
    text = out.read_text()
    assert text.startswith("# hg-compton ")
    assert "# constant alpha = " in text


def test_exit_codes(tmp_path, capsys):
    assert main([str(tmp_path / "missing.cfg")]) == 2
    err = json.loads(capsys.readouterr().err.strip())
    assert err["status"] == "error" and err["exit_code"] == 2

    bad = write_cfg(tmp_path / "bad.cfg", "scan.mode = angular\nbeam.foo = 1\n")
    assert main([bad]) == 2
    err = json.loads(capsys.readouterr().err.strip())
    assert err["type"] == "ValidationError" and "beam.foo" in err["message"]

    broken = tmp_path / "broken.cfg"
    broken.write_text("beam.k_keV 500\n")
    assert main([str(broken)]) == 2
    assert json.loads(capsys.readouterr().err.strip())["type"] == "ParseError"

    starved = write_cfg(
        tmp_path / "starved.cfg",
        "scan.mode = validate\nvalidate.instances = 1\nquad.tol = 1e-12\nquad.order = 2\nquad.max_subdivisions = 1\n",
    )
    assert main([starved, "--out", str(tmp_path / "v.csv")]) == 3
    assert json.loads(capsys.readouterr().err.strip())["exit_code"] == 3


def test_bad_thread_env(tmp_path, monkeypatch, capsys):
    cfg = write_cfg(tmp_path / "a.cfg", "scan.mode = kn-reference\n")
    monkeypatch.setenv(THREADS_ENV, "many")
    assert main([cfg, "--out", str(tmp_path / "o.csv")]) == 2


ANGULAR = "scan.mode = angular\nscan.theta_pi = 0.9, 0.3\nscan.phi_pi = 0.5, 0, 1.25\nscan.deltaE_keV = 1.5, 0, 400\n"


def test_angular_rows_sorted_and_status(tmp_path):
    cfg = write_cfg(tmp_path / "a.cfg", ANGULAR)
    out = tmp_path / "a.csv"
    assert main([cfg, "--out", str(out), "--units", "barn"]) == 0
    cols, rows = data_rows(out)
    assert cols[:6] == ["theta_pi", "phi_pi", "E_q_keV", "deltaE_keV", "value_keV3_sr", "error_keV3_sr"]
    assert cols[-1] == "status"
    keys = [(float(r[0]), float(r[1]), float(r[2])) for r in rows]
    assert keys == sorted(keys)
    assert len(rows) == 18
    status = [r[-1] for r in rows]
    # E0 + 400 keV exceeds k
    assert status.count("empty") == 6 and status.count("ok") == 12
    assert all(r[4] == "nan" for r in rows if r[-1] == "empty")


def test_byte_identical_across_runs_and_threads(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path / "a.cfg", ANGULAR + "run.threads = 2\n", nx=2, ny=1)
    outs = []
    for i, extra in enumerate([[], ["--threads", "1"], ["--threads", "4"], []]):
        if i == 3:
            monkeypatch.setenv(THREADS_ENV, "3")
        out = tmp_path / f"o{i}.csv"
        assert main([cfg, "--out", str(tmp_path / "o.csv")] + extra) == 0
        out.write_bytes((tmp_path / "o.csv").read_bytes())
        outs.append(out.read_bytes())
    assert all(o == outs[0] for o in outs)


def test_rerun_from_header(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = write_cfg(tmp_path / "a.cfg", ANGULAR + "output.format = json\n")
    assert main([cfg, "--out", "first.json", "--units", "barn"]) == 0
    first = (tmp_path / "first.json").read_bytes()
    (tmp_path / "again.cfg").write_text(config_text_from_output("first.json"))
    (tmp_path / "first.json").unlink()
    assert main(["again.cfg"]) == 0
    assert (tmp_path / "first.json").read_bytes() == first
    doc = json.loads(first)
    assert doc["columns"][-1] == "status"
    assert any(row[4] is None for row in doc["rows"])
    assert any(line.startswith("# default-applied: quad.tol") for line in doc["header"])


def test_spectrum_node_counts(tmp_path):
    # phi = 0 reveals n_x nodes, phi = pi/2 reveals n_y nodes
    cfg = write_cfg(
        tmp_path / "s.cfg",
        "scan.mode = spectrum\nscan.theta_pi = 0.1\nscan.phi_pi = 0, 0.25, 0.5\n"
        "scan.E_half_width_keV = 4\nscan.E_step_keV = 0.04\n",
        w0=75, nx=2, ny=1,
    )
    out = tmp_path / "spec.csv"
    assert main([cfg, "--out", str(out), "--threads", "4"]) == 0
    counts = {}
    for phi in ("0", "0.25", "0.5"):
        path = tmp_path / f"spec_theta0.1pi_phi{phi}pi.csv"
        header = [l for l in path.read_text().splitlines() if l.startswith("# node_count")]
        counts[phi] = header[0].split("=")[1].strip()
        cols, rows = data_rows(path)
        E = np.array([float(r[2]) for r in rows])
        assert np.all(np.diff(E) > 0)
    assert counts["0"] == "2"
    assert counts["0.5"] == "1"


@pytest.mark.slow
def test_validate_mode(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "v.cfg", "scan.mode = validate\nvalidate.instances = 2\nvalidate.seed = 3\n")
    out = tmp_path / "v.csv"
    assert main([cfg, "--out", str(out), "--threads", "2"]) == 0
    assert "max relative deviation" in capsys.readouterr().out
    cols, rows = data_rows(out)
    assert len(rows) == 2
    i = cols.index("rel_deviation")
    assert all(float(r[i]) < 1e-3 for r in rows)
    assert all(r[-1] == "ok" for r in rows)
