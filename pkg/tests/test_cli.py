import numpy as np
import pytest

from pffc import io
from pffc.cli import main


@pytest.fixture
def tiny(tmp_path):
    cfg = tmp_path / "tiny.txt"
    cfg.write_text("# tiny run\nn = 4\nM = 2\nmax_newton = 2\n")
    return cfg


def test_run_writes_outputs(tiny, tmp_path, capsys):
    out = tmp_path / "run"
    status = main(["run", "--config", str(tiny), "--out", str(out), "--snapshots", "1,2"])
    assert status in (0, 1)
    rows = io.read_iterations(out / "iterations.csv")
    assert rows[0]["iter"] == 0 and rows[0]["rel_residual"] == 1.0
    x, q = io.read_force_profile(out / "force_profile.txt")
    assert np.all(np.diff(x) > 0) and x.size == 5
    for name in ("state_m1.vtk", "state_m2.vtk", "adjoint_m2.vtk", "summary.txt", "config.txt", "controls.txt"):
        assert (out / name).is_file()
    assert "results in" in capsys.readouterr().out


def test_run_honours_pffc_out(tiny, tmp_path, monkeypatch):
    monkeypatch.setenv("PFFC_OUT", str(tmp_path / "env"))
    assert main(["run", "--preset", "example2", "--config", str(tiny)]) in (0, 1)
    assert (tmp_path / "env" / "example2" / "iterations.csv").is_file()


def test_mesh_and_timestep_flags(tiny, tmp_path):
    out = tmp_path / "flags"
    main(["run", "--config", str(tiny), "--mesh", "2", "--timesteps", "1", "--out", str(out)])
    text = (out / "config.txt").read_text()
    assert "n = 2\n" in text and "M = 1\n" in text


def test_bad_config_reports_line(tmp_path, capsys):
    cfg = tmp_path / "bad.txt"
    cfg.write_text("n = 4\n\nbogus = 1\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "bad.txt:3:" in err and "unknown key" in err


def test_verify_rejects_large_mesh(tmp_path, capsys):
    cfg = tmp_path / "big.txt"
    cfg.write_text("n = 32\n")
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "verification is limited" in capsys.readouterr().err


def test_verify_desk(tmp_path, capsys):
    assert main(["verify", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "verification.txt").read_text().splitlines()
    assert len(lines) >= 7 and all(line.startswith("PASS") for line in lines)


def test_gradcheck_small(tmp_path, capsys):
    cfg = tmp_path / "g.txt"
    cfg.write_text("n = 4\nM = 3\ngamma = 1e5\nfd_directions = 2\n")
    assert main(["gradcheck", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    text = (tmp_path / "gradcheck.txt").read_text()
    assert "# gradient" in text and "# hessian" in text
