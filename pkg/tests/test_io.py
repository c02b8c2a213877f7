import numpy as np
import pytest

from pffc import io
from pffc.mesh import build_mesh
from pffc.optimize import IterationRecord


def test_iteration_log_round_trip(tmp_path):
    path = tmp_path / "iterations.csv"
    recs = [IterationRecord(0, 0, 1.0, 2.5e-6, 5.163e-3, 4.9289e-3, 2.3406e-4, 1.0),
            IterationRecord(1, 4, 0.1, 2.5e-7, 4.6e-3, 4.5e-3, 1e-4, 2473.4, ["negative_curvature"])]
    with io.IterationLog(path) as log:
        log.append(recs[0])
        # the header and first row are on disk before the run finishes
        assert len(path.read_text().splitlines()) == 2
        log.append(recs[1])
    text = path.read_text().splitlines()
    assert text[0] == "iter,cg,rel_residual,abs_residual,cost,tracking,tikhonov,max_force"
    rows = io.read_iterations(path)
    assert rows[1]["cg"] == 4 and rows[1]["max_force"] == 2473.4
    assert rows[0]["tikhonov"] == 2.3406e-4


def test_force_profile_sorted(tmp_path):
    path = tmp_path / "force_profile.txt"
    io.write_force_profile(path, [1.0, 0.0, 0.5], [3.0, 1.0, 2.0])
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    x, q = io.read_force_profile(path)
    assert list(x) == [0.0, 0.5, 1.0] and list(q) == [1.0, 2.0, 3.0]


def test_fmt_17_digits():
    assert float(io.fmt(0.1 + 0.2)) == 0.1 + 0.2
    assert io.fmt(0.1 + 0.2) == "0.30000000000000004"


def test_vtk_structure_and_round_trip(tmp_path, rng):
    mesh = build_mesh(4)
    U = rng.standard_normal(mesh.num_dofs)
    path = tmp_path / "state_m20.vtk"
    io.write_state_vtk(path, mesh, U, 0.5)
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[2:5] == ["ASCII", "DATASET STRUCTURED_GRID", "DIMENSIONS 5 5 1"]
    pts = np.array([[float(v) for v in l.split()] for l in lines[6:6 + 25]])
    assert np.allclose(pts[:, :2], mesh.nodes)
    data = io.read_vtk_point_data(path)
    ux, uy, phi = mesh.split(U)
    assert np.array_equal(data["displacement"][:, 0], ux)
    assert np.array_equal(data["displacement"][:, 1], uy)
    assert np.array_equal(data["phase_field"], phi)
    io.write_adjoint_vtk(tmp_path / "adjoint_m20.vtk", mesh, U, 0.5)
    adj = io.read_vtk_point_data(tmp_path / "adjoint_m20.vtk")
    assert set(adj) == {"z_u", "z_phi"}
