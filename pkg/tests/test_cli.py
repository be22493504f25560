import json
import subprocess
import sys

import numpy as np
import pytest

from gptd import cli
from gptd.errors import DualityGapError


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("GPTD_TOL", raising=False)
    assert cli.main(["polygon", "--n", "4", "-o", "square.json"]) == 0
    return tmp_path


def _problem(path, indices, priors=None, model="square.json"):
    indices = list(indices)
    if priors is None:
        priors = [1 / len(indices)] * len(indices)
    data = {"model": model, "states": {"vertex_indices": indices}, "priors": list(priors)}
    path.write_text(json.dumps(data))
    return str(path)


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_polygon_writes_model(workdir, capsys):
    code, out, _ = _run(capsys, "polygon", "--n", "4", "-o", "square.json")
    assert code == 0
    data = json.loads((workdir / "square.json").read_text())
    assert len(data["vertices"]) == 4 and data["unit"] == [0.0, 0.0, 1.0]
    assert len(out.strip().splitlines()) == 5  # header plus one row per vertex


def test_polygon_hexagon(capsys):
    code, out, _ = _run(capsys, "polygon", "--n", "6")
    model = json.loads(out)["model"]
    assert code == 0 and len(model["vertices"]) == 6
    np.testing.assert_allclose(np.array(model["vertices"]) @ model["unit"], 1.0, atol=1e-12)


def test_polygon_usage_error(capsys):
    code, _, err = _run(capsys, "polygon", "--n", "2")
    assert code == 2
    assert json.loads(err)["exit_code"] == 2


def test_solve_square(workdir, capsys):
    code, out, _ = _run(capsys, "solve", _problem(workdir / "p.json", range(4)))
    report = json.loads(out)
    assert code == 0
    assert report["schema"] == "1" and report["pass"] is True
    assert report["p_guess"] == pytest.approx(0.5, abs=1e-9)
    assert report["uniform_ratio"]["r"] == pytest.approx(0.25, abs=1e-9)


def test_solve_malformed_json(workdir, capsys):
    (workdir / "bad.json").write_text("{not json")
    code, out, err = _run(capsys, "solve", "bad.json")
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "invalid_problem"


def test_missing_file(workdir, capsys):
    code, _, err = _run(capsys, "solve", "nowhere.json")
    assert code == 2
    assert "no such file" in json.loads(err)["message"]


def test_invalid_priors(workdir, capsys):
    code, _, _ = _run(capsys, "solve", _problem(workdir / "p.json", [0, 1], [0.9, 0.9]))
    assert code == 2


def test_solve_pair(workdir, capsys):
    code, out, _ = _run(capsys, "solve", _problem(workdir / "p.json", [0, 2]))
    assert code == 0
    assert json.loads(out)["p_guess"] == pytest.approx(1.0, abs=1e-9)


def test_solver_failure_exit_code(workdir, capsys, monkeypatch):
    def failing(problem, tol=1e-9, gap_tol=1e-8):
        raise DualityGapError(0.5, 0.6, gap_tol)

    monkeypatch.setattr(cli, "solve_discrimination", failing)
    code, _, err = _run(capsys, "solve", _problem(workdir / "p.json", range(4)))
    assert code == 3
    assert json.loads(err)["error"] == "solver_failure"


def test_steer_square(workdir, capsys):
    code, out, _ = _run(capsys, "steer", _problem(workdir / "p.json", range(4)))
    report = json.loads(out)
    assert code == 0
    assert report["bound"] == pytest.approx(0.5, abs=1e-9)
    assert report["tight"] is True
    assert report["diagonal_sum"] == pytest.approx(1.0, abs=1e-9)


def test_steer_degenerate(workdir, capsys):
    code, _, err = _run(capsys, "steer", _problem(workdir / "p.json", range(4), [1, 0, 0, 0]))
    assert code == 4
    assert json.loads(err)["error"] == "degenerate_scenario"


def test_steer_pair(workdir, capsys):
    code, out, _ = _run(capsys, "steer", _problem(workdir / "p.json", [0, 2]))
    assert code == 0
    assert json.loads(out)["diagonal_sum"] == pytest.approx(1.0, abs=1e-9)


def test_oracle_square(workdir, capsys):
    code, out, _ = _run(capsys, "oracle", _problem(workdir / "p.json", range(4)))
    report = json.loads(out)
    assert code == 0
    assert report["delta"] <= 1e-8
    assert report["bases_examined"] == 11440


def test_oracle_cap(workdir, capsys):
    assert cli.main(["polygon", "--n", "8", "-o", "octagon.json"]) == 0
    capsys.readouterr()
    code, _, err = _run(capsys, "oracle", _problem(workdir / "p.json", range(8), model="octagon.json"))
    assert code == 5
    assert json.loads(err)["error"] == "cap_exceeded"


def test_oracle_single_state(workdir, capsys):
    code, out, _ = _run(capsys, "oracle", _problem(workdir / "p.json", [1]))
    report = json.loads(out)
    assert code == 0
    assert report["oracle_value"] == pytest.approx(1.0) and report["solver_value"] == pytest.approx(1.0)


@pytest.mark.parametrize("indices,priors", [(range(4), None), ([0, 2], None), ([0, 1, 3], [0.2, 0.5, 0.3]),
                                            ([1], None)])
def test_verify_accepts_solve_output(workdir, capsys, indices, priors):
    problem = _problem(workdir / "p.json", indices, priors)
    code, out, _ = _run(capsys, "solve", problem)
    assert code == 0
    (workdir / "report.json").write_text(out)
    code, out, _ = _run(capsys, "verify", problem, "report.json")
    assert code == 0
    assert json.loads(out)["pass"] is True


def test_verify_rejects_tampered_report(workdir, capsys):
    problem = _problem(workdir / "p.json", range(4))
    _, out, _ = _run(capsys, "solve", problem)
    report = json.loads(out)
    report["K"] = [0.0, 0.0, 0.4]
    (workdir / "report.json").write_text(json.dumps(report))
    code, out, _ = _run(capsys, "verify", problem, "report.json")
    assert code == 1
    assert json.loads(out)["pass"] is False
    report["schema"] = "0"
    (workdir / "report.json").write_text(json.dumps(report))
    assert _run(capsys, "verify", problem, "report.json")[0] == 2


def test_reports_are_byte_stable(workdir, capsys):
    problem = _problem(workdir / "p.json", [0, 1, 3], [0.2, 0.5, 0.3])
    for command in ("solve", "steer", "oracle"):
        first = _run(capsys, command, problem)
        second = _run(capsys, command, problem)
        assert first == second


def test_tolerance_from_environment(workdir, capsys, monkeypatch):
    problem = _problem(workdir / "p.json", range(4))
    monkeypatch.setenv("GPTD_TOL", "1e-7")
    assert json.loads(_run(capsys, "solve", problem)[1])["tol"] == 1e-7
    assert json.loads(_run(capsys, "solve", problem, "--tol", "1e-10")[1])["tol"] == 1e-10
    monkeypatch.setenv("GPTD_TOL", "tiny")
    assert _run(capsys, "solve", problem)[0] == 2
    monkeypatch.delenv("GPTD_TOL")
    assert _run(capsys, "solve", problem, "--tol", "-1")[0] == 2


def test_dump_geometry(workdir, capsys):
    problem = _problem(workdir / "p.json", range(4))
    assert _run(capsys, "solve", problem, "--dump-geometry", "geometry.csv")[0] == 0
    rows = (workdir / "geometry.csv").read_text().splitlines()
    assert rows[0] == "set,index,x0,x1,x2"
    kinds = [row.split(",")[0] for row in rows[1:]]
    assert kinds.count("state_space") == 4 and kinds.count("given") == 4 and kinds.count("complement") == 4
    given = np.array([[float(c) for c in row.split(",")[2:]] for row in rows[1:] if row.startswith("given")])
    comp = np.array([[float(c) for c in row.split(",")[2:]] for row in rows[1:] if row.startswith("complement")])
    # given vertex x plus complement vertex x is the same K for every x
    np.testing.assert_allclose(given + comp, np.tile([0, 0, 0.5], (4, 1)), atol=1e-9)


def test_text_format(workdir, capsys):
    code, out, _ = _run(capsys, "solve", _problem(workdir / "p.json", range(4)), "--format", "text")
    assert code == 0
    assert "pass: True" in out.splitlines()


def test_module_entry_point(workdir):
    proc = subprocess.run([sys.executable, "-m", "gptd", "steer", _problem(workdir / "p.json", range(4))],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["tight"] is True


def test_missing_priors_rejected(workdir, capsys):
    (workdir / "p.json").write_text(json.dumps({"model": "square.json", "states": {"vertex_indices": [0, 1]}}))
    code, _, err = _run(capsys, "solve", "p.json")
    assert code == 2
    assert "priors" in json.loads(err)["message"]
