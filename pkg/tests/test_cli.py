import json
import subprocess
import sys

import pytest

from lagrhofer import cli
from lagrhofer.qmcalc import FunctionSample


def _run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr().out


def test_defect_json(capsys):
    code, out = _run(capsys, "defect", "--tau", "1/4")
    rep = json.loads(out)
    assert code == 0
    assert rep["schema"] == 1 and rep["command"] == "defect"
    assert rep["defect"] == "12"
    assert rep["valuations"] == ["-1"] * 4
    assert [p["label"] for p in rep["critical_points"]] == ["(+,+)", "(+,-)", "(-,+)", "(-,-)"]
    assert rep["failures"] == []


def test_defect_text_and_q_sign(capsys):
    code, out = _run(capsys, "--text", "defect", "--tau", "1/8", "--q-sign", "-1")
    assert code == 0
    assert "defect: 12" in out
    assert "failures: none" in out


def test_defect_with_packaged_fixture(capsys):
    code, out = _run(capsys, "defect", "--fixture", "s2xs2.json")
    assert code == 0
    assert json.loads(out)["defect"] == "12"


def test_defect_bad_tau_is_reported(capsys):
    code, out = _run(capsys, "defect", "--tau", "3/4")
    assert code == 1
    assert "tau" in json.loads(out)["error"]


def test_defect_coupled_fixture_fails_cleanly(capsys):
    code, out = _run(capsys, "defect", "--fixture", "f2_0.json")
    assert code == 1
    assert "coupled" in json.loads(out)["error"]


def test_geometry_check_default_passes(capsys):
    code, out = _run(capsys, "geometry-check", "--grid", "120", "120")
    rep = json.loads(out)
    assert code == 0, rep["failures"]
    assert rep["epsilon_delta"] == pytest.approx(0.0641, abs=1e-4)


def test_geometry_check_detects_escape(capsys):
    code, out = _run(capsys, "geometry-check", "--delta", "0.9", "--tau", "0.25", "--grid", "60", "60")
    assert code == 1


def test_diameter_table(capsys):
    code, out = _run(capsys, "diameter-table", "--h-values", "1,10,100")
    rep = json.loads(out)
    assert code == 0
    lows = [c["lower_bound"] for c in rep["certificates"]]
    assert lows == sorted(lows)
    assert lows[-1] == pytest.approx(49.924009112268244, rel=1e-12)


def test_phi_bounds_from_files(tmp_path, capsys):
    f = FunctionSample.bump(0.5, 0.3, 2.0)
    g = FunctionSample.zero()
    fp, gp = tmp_path / "f.json", tmp_path / "g.json"
    fp.write_text(json.dumps(f.to_dict()))
    gp.write_text(json.dumps(g.to_dict()))
    code, out = _run(capsys, "phi-bounds", "--f", str(fp), "--g", str(gp))
    rep = json.loads(out)
    assert code == 0, rep["failures"]
    c = rep["certificate"]
    assert c["lower_bound"] <= c["upper_bound"]
    assert c["upper_bound"] == pytest.approx(2.0, abs=1e-9)


def test_phi_bounds_missing_file(tmp_path, capsys):
    code, out = _run(capsys, "phi-bounds", "--f", str(tmp_path / "nope.json"), "--g", str(tmp_path / "x.json"))
    assert code == 1
    assert "error" in json.loads(out)


def test_config_and_output_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    dest = tmp_path / "report.json"
    cfg.write_text(json.dumps({"cutoff": "5/2", "output": str(dest)}))
    code, out = _run(capsys, "--config", str(cfg), "defect")
    assert code == 0 and out == ""
    rep = json.loads(dest.read_text())
    assert rep["params"]["cutoff"] == "5/2"


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"cutof": 3}))
    code, out = _run(capsys, "--config", str(cfg), "defect")
    assert code == 1
    assert "unknown config keys" in json.loads(out)["error"]


def test_output_flag(tmp_path, capsys):
    dest = tmp_path / "out.txt"
    code, out = _run(capsys, "--text", "-o", str(dest), "diameter-table", "--h-values", "5")
    assert code == 0 and out == ""
    assert "h=5" in dest.read_text()


def test_run_config_validation():
    with pytest.raises(ValueError):
        cli.RunConfig(cutoff=1)
    with pytest.raises(ValueError):
        cli.RunConfig(area_tol=0)


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "lagrhofer", "--text", "defect"],
                       capture_output=True, text=True, timeout=120)
    assert r.returncode == 0
    assert "defect: 12" in r.stdout
