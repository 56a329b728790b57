import json
from pathlib import Path

import numpy as np
import pytest

from mooney_sla import cli, coercivity
from mooney_sla.config import RunConfig, load_config
from mooney_sla.errors import ParameterError
from mooney_sla.sla_driver import equilibrium_config, pure_shear_config

DEMOS = Path(__file__).resolve().parents[1] / "demos" / "configs"


def write_json(path, data):
    path.write_text(json.dumps(data))
    return path


def minimal(**material):
    m = {"s1": 1.0, "s2": -0.3, "beta": 100.0}
    m.update(material)
    return {"material": m, "mesh": {"generator": {"nx": 2, "ny": 2}}}


def test_roundtrip_to_dict():
    cfg = pure_shear_config(n=2, steps=3)
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


@pytest.mark.parametrize("patch,match", [
    ({"typo": 1}, "unknown key"),
    ({"schedule": {"total_steps": 0}}, "total_steps"),
    ({"schedule": {"total_steps": 2, "ramp": [0.5]}}, "ramp"),
    ({"solver": {"tol": 1.5}}, "tol"),
    ({"certification": {"mode": "loud"}}, "mode"),
    ({"boundary": {"traction": [1, 2, 3]}}, "traction"),
    ({"boundary": {"traction_stress_table": [[[0, 0], [0, 0]]] * 2}}, "table"),
    ({"mesh": {}}, "mesh"),
    ({"solver": {"colour": "red"}}, "unknown key"),
])
def test_config_validation(patch, match):
    data = minimal()
    data.update(patch)
    with pytest.raises(ParameterError, match=match):
        RunConfig.from_dict(data)


def test_material_condition():
    with pytest.raises(ParameterError, match="s2 < s1"):
        RunConfig.from_dict(minimal(s2=1.0))


def test_ramp_amplitudes():
    cfg = RunConfig.from_dict({**minimal(), "schedule": {"total_steps": 3, "ramp": [0.1, 0.5, 1]}})
    assert [cfg.schedule.amplitude(i) for i in range(4)] == [0.0, 0.1, 0.5, 1.0]


def test_invalid_json(tmp_path):
    (tmp_path / "c.json").write_text("{")
    with pytest.raises(ParameterError, match="invalid JSON"):
        load_config(tmp_path / "c.json")


def test_mesh_path_relative_to_config(tmp_path):
    assert cli.main(["mesh-gen", str(tmp_path / "m.txt"), "--nx", "2", "--ny", "2"]) == 0
    data = minimal()
    data["mesh"] = {"path": "m.txt"}
    cfg_path = write_json(tmp_path / "c.json", data)
    assert cli.main(["run", str(cfg_path), "--out", str(tmp_path / "out")]) == 0


def test_run_equilibrium(tmp_path, capsys):
    cfg = equilibrium_config()
    path = write_json(tmp_path / "eq.json", cfg.to_dict())
    assert cli.main(["run", str(path), "--out", str(tmp_path / "out")]) == 0
    csvs = sorted((tmp_path / "out").glob("step_*.csv"))
    assert len(csvs) == cfg.schedule.total_steps
    for p in csvs:
        assert np.all(np.loadtxt(p, delimiter=",", skiprows=1)[:, 3:] == 0)


def test_run_shipped_pure_shear(tmp_path, capsys):
    assert cli.main(["run", str(DEMOS / "pure_shear.json"), "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["final"]["mean_T12"] == pytest.approx(0.26, rel=0.02)
    assert json.loads(capsys.readouterr().out)["mean_T12"] == summary["final"]["mean_T12"]


def test_run_bad_parameters(tmp_path, capsys):
    path = write_json(tmp_path / "bad.json", minimal(s2=1.5))
    assert cli.main(["run", str(path)]) == 1
    assert "s2 < s1" in capsys.readouterr().err


def test_run_missing_file(tmp_path):
    assert cli.main(["run", str(tmp_path / "nope.json")]) == 1


def test_run_unclamped_mesh_needs_flag(tmp_path):
    data = minimal()
    data["mesh"]["generator"]["labels"] = {"bottom": 1, "top": 1, "left": 1, "right": 1}
    path = write_json(tmp_path / "c.json", data)
    assert cli.main(["run", str(path)]) == 1
    assert cli.main(["run", str(path), "--allow-unclamped", "--out", str(tmp_path / "o")]) == 0


def test_run_step_too_large(tmp_path):
    path = write_json(tmp_path / "c.json", pure_shear_config(n=2, steps=1, kappa=0.6).to_dict())
    assert cli.main(["run", str(path)]) == 2


def test_run_strict_certification(tmp_path):
    data = pure_shear_config(n=2, steps=1).to_dict()
    data["certification"]["mode"] = "strict"
    path = write_json(tmp_path / "c.json", data)
    assert cli.main(["run", str(path)]) == 4


def test_run_solver_failure(tmp_path, monkeypatch):
    from mooney_sla import sla_driver
    from mooney_sla.errors import SolverError

    def fail(*a, **k):
        raise SolverError("stagnated")

    monkeypatch.setattr(sla_driver, "solve", fail)
    path = write_json(tmp_path / "c.json", pure_shear_config(n=2, steps=1).to_dict())
    assert cli.main(["run", str(path)]) == 3


def test_certify_prestretched(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert cli.main(["certify", str(DEMOS / "certify_prestretched.json"), "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["admissible"] and rep["beta0"] == pytest.approx(1.81910, abs=1e-5)


def test_certify_isotropic_default(tmp_path, capsys):
    path = write_json(tmp_path / "c.json", {**minimal(s1=1.0, s2=0.0, p0_initial=0.0)})
    assert cli.main(["certify", str(path), "--alpha", "0.5", "--k", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["beta0"] == 0.0


def test_certify_gap_violation(capsys):
    assert cli.main(["certify", str(DEMOS / "certify_gap_violation.json")]) == 5
    rep = json.loads(capsys.readouterr().out)
    assert not rep["admissible"]
    assert {v["condition"] for v in rep["violations"]} == {"pressure_gap"}


def test_certify_flags_override(capsys):
    assert cli.main(["certify", str(DEMOS / "certify_prestretched.json"),
                     "--beta-max", "1.0"]) == 5


def test_verify_single_suite(capsys, tmp_path):
    assert cli.main(["verify", "patch", "--json", str(tmp_path / "v.json")]) == 0
    out = capsys.readouterr().out
    assert out.startswith("PASS patch")
    assert json.loads((tmp_path / "v.json").read_text())["passed"]


def test_verify_canary_names_failing_suite(monkeypatch, capsys):
    real = coercivity.build_A

    def mutated(s, beta, params):
        A = real(s, beta, params)
        return coercivity.CoercivityMatrix(A.A11, A.A22, A.A12, A.A33, A.A44, -A.A34, A.beta)

    monkeypatch.setattr(coercivity, "build_A", mutated)
    assert cli.main(["verify", "all"]) == 6
    captured = capsys.readouterr()
    assert "FAIL quadform" in captured.out
    assert json.loads(captured.out[captured.out.index("{"):])["first_failure"] == "quadform"
    assert "quadform" in captured.err


def test_mesh_gen(tmp_path, capsys):
    path = tmp_path / "m.txt"
    assert cli.main(["mesh-gen", str(path), "--nx", "3", "--ny", "2",
                     "--labels", "bottom=3,top=2"]) == 0
    assert path.read_text().startswith("nodes")


def test_mesh_gen_bad_labels():
    with pytest.raises(SystemExit):
        cli.main(["mesh-gen", "x.txt", "--labels", "middle=3"])
