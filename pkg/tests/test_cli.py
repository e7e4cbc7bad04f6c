import json

import numpy as np
import pytest

from dnlab.cli import main
from dnlab.dnmap import read_dn_csv
from dnlab.mesh import read_mesh


@pytest.fixture
def files(tmp_path):
    (tmp_path / "ring.cfg").write_text("kind = counterexample\nalpha = 1\nR = 0.9\n")
    (tmp_path / "id.cfg").write_text("kind = constant  # identity\nvalue = 1\n")
    return tmp_path


def test_mesh_command(files, capsys):
    out = files / "m.txt"
    assert main(["mesh", "--rings", "2", "--sectors", "8", "--out", str(out)]) == 0
    assert "V=17 T=24 B=8 E=40" in capsys.readouterr().err
    assert read_mesh(out).n_vertices == 17
    assert main(["mesh", "--rings", "3", "--sectors", "8", "--snap", "0.5", "--refine", "1"]) == 0
    assert capsys.readouterr().out.startswith("disc-mesh v1 97 ")


def test_mesh_command_errors(capsys):
    assert main(["mesh", "--rings", "2", "--sectors", "8", "--snap", "1.5"]) == 2
    assert "outside" in capsys.readouterr().err


def test_dn_and_norm(files, capsys):
    m = files / "m.txt"
    main(["mesh", "--rings", "24", "--sectors", "128", "--snap", "0.81,0.9", "--out", str(m)])
    assert main(["dn", "--sigma", str(files / "ring.cfg"), "--mesh", str(m), "--kmax", "16",
                 "--out", str(files / "ring.csv"), "--dump-solution", str(files / "u.csv")]) == 0
    assert main(["dn", "--sigma", str(files / "id.cfg"), "--mesh", str(m), "--kmax", "16"]) == 0
    (files / "id.csv").write_text(capsys.readouterr().out)
    assert read_dn_csv(files / "id.csv").k_max == 16
    sol = (files / "u.csv").read_text().splitlines()
    assert sol[0] == "vertex,x,y,value" and len(sol) == 1 + 1 + 24 * 128
    assert main(["norm", "--dn", str(files / "ring.csv"), "--minus", str(files / "id.csv"),
                 "--from", "0.5", "--to", "-0.5"]) == 0
    val = float(capsys.readouterr().out)
    assert val == pytest.approx(0.1935, rel=0.02)
    assert main(["norm", "--dn", str(files / "id.csv")]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(1.0, rel=0.05)


def test_dn_rejects_aliasing(files, capsys):
    m = files / "m.txt"
    main(["mesh", "--rings", "4", "--sectors", "16", "--out", str(m)])
    assert main(["dn", "--sigma", str(files / "id.cfg"), "--mesh", str(m), "--kmax", "5"]) == 2
    assert "k_max" in capsys.readouterr().err


def test_oracles(capsys):
    assert main(["oracle", "kstar", "--R", "0.95"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "R,k_star,t_star,m_k_star,bound,exceeds"
    assert out[1].split(",")[1] == "6" and out[1].endswith("True")
    assert main(["oracle", "layered", "--radii", "0.5", "--values", "4,1", "--kmax", "1"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert float(rows[2].split(",")[1]) == pytest.approx(1.352941, abs=1e-6)
    assert main(["oracle", "mk", "--alpha", "1", "--R", "0.9", "--kmax", "3"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 4
    assert main(["oracle", "laminate", "--a", "1", "--b", "2"]) == 0
    vals = [float(r.split(",")[2]) for r in capsys.readouterr().out.splitlines()[1:]]
    assert vals == [4 / 3, 0.0, 0.0, 1.5]
    assert main(["oracle", "kstar", "--R", "0.7"]) == 2


def test_experiment_exit_codes(files, capsys):
    cfg = files / "c.cfg"
    cfg.write_text("fem_R = []\n")
    assert main(["experiment", "counterexample", "--config", str(cfg),
                 "--out", str(files / "ok")]) == 0
    rep = json.loads((files / "ok" / "report.json").read_text())
    assert rep["passed"] and (files / "ok" / "analytic.csv").exists()
    assert "PASS counterexample-bound" in capsys.readouterr().out
    # an unmet tolerance gives exit code 1 with a full report
    assert main(["experiment", "counterexample", "--config", str(cfg), "--out",
                 str(files / "bad"), "--set", "fem_R=[0.9]", "--set", "n_rings=18",
                 "--set", "n_sectors=112"]) == 1
    assert (files / "bad" / "report.json").exists()
    # invalid configs never leave partial output
    assert main(["experiment", "cloaking", "--out", str(files / "none"),
                 "--set", "beta=-2"]) == 2
    assert not (files / "none").exists()
