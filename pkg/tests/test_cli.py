"""End-to-end runs of the command-line interface.

Each test drives ``main(argv)`` in-process and checks the artifacts on
disk; one smoke test goes through the installed module entry point.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from rbfsurf.cli import _parse_grid, _parse_ints, main
from rbfsurf.lbo import SparseOperator
from rbfsurf.nodesets import load_nodes, schwarz_p
from rbfsurf.surface_geom import load_frames


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture()
def sphere_file(tmp_path, capsys):
    path = tmp_path / "nodes.txt"
    code, _, _ = run_cli(capsys, "nodes", "gen", "--surface", "sphere",
                         "--n", "200", "--out", str(path))
    assert code == 0
    return path


class TestParsers:
    def test_grid_literal(self):
        assert np.array_equal(_parse_grid("1,2.5,4"), [1.0, 2.5, 4.0])

    def test_grid_range(self):
        assert np.allclose(_parse_grid("1:3:5"), [1.0, 1.5, 2.0, 2.5, 3.0])

    def test_ints(self):
        assert _parse_ints("11,15,31") == [11, 15, 31]


class TestNodes:
    def test_gen_writes_unit_vectors(self, tmp_path, capsys):
        path = tmp_path / "n.txt"
        code, out, _ = run_cli(capsys, "nodes", "gen", "--n", "150", "--out", str(path))
        assert code == 0
        assert "wrote 150 nodes" in out
        assert "done in" in out
        nodes = load_nodes(path)
        assert len(nodes) == 150
        assert np.abs(np.linalg.norm(nodes.points, axis=1) - 1).max() < 1e-12

    def test_gen_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        run_cli(capsys, "nodes", "gen", "--n", "64", "--method", "repulsion",
                "--seed", "7", "--out", str(a))
        run_cli(capsys, "nodes", "gen", "--n", "64", "--method", "repulsion",
                "--seed", "7", "--out", str(b))
        assert a.read_text() == b.read_text()

    def test_gen_rejects_other_surfaces(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "nodes", "gen", "--surface", "schwarz-p",
                               "--n", "64", "--out", str(tmp_path / "x.txt"))
        assert code == 2
        assert "error:" in err

    def test_project_with_drop(self, sphere_file, tmp_path, capsys):
        out_path = tmp_path / "proj.txt"
        code, out, _ = run_cli(capsys, "nodes", "project", "--surface", "schwarz-p",
                               "--in", str(sphere_file), "--out", str(out_path),
                               "--drop-misses")
        assert code == 0
        projected = load_nodes(out_path)
        assert 0 < len(projected) <= 200
        surface = schwarz_p()
        assert np.abs(surface.F(projected.points)).max() < 1e-9

    def test_project_fails_loudly_without_drop(self, sphere_file, tmp_path, capsys):
        # the polar rays never cross the level set, so strict mode must fail
        code, _, err = run_cli(capsys, "nodes", "project", "--surface", "schwarz-p",
                               "--in", str(sphere_file), "--out", str(tmp_path / "p.txt"))
        assert code == 2
        assert "error:" in err


class TestGeomAndOperator:
    def test_estimate_frames_round_trip(self, sphere_file, tmp_path, capsys):
        frames_path = tmp_path / "frames.csv"
        code, out, _ = run_cli(capsys, "geom", "estimate", "--nodes", str(sphere_file),
                               "--stencil", "15", "--out", str(frames_path))
        assert code == 0
        points, frames = load_frames(frames_path)
        assert len(points) == 200
        assert np.abs(np.linalg.norm(frames.normals, axis=1) - 1).max() < 1e-9

    def test_build_with_analytic_frames(self, sphere_file, tmp_path, capsys):
        op_path = tmp_path / "op.txt"
        code, out, _ = run_cli(capsys, "lbo", "build", "--nodes", str(sphere_file),
                               "--frames", "analytic:sphere", "--stencil", "15",
                               "--out", str(op_path))
        assert code == 0
        assert "200x200" in out
        op = SparseOperator.load(op_path)
        assert op.n == 200
        assert op.stencil_size == 15

    def test_build_with_frame_file(self, sphere_file, tmp_path, capsys):
        frames_path = tmp_path / "frames.csv"
        run_cli(capsys, "geom", "estimate", "--nodes", str(sphere_file),
                "--stencil", "15", "--out", str(frames_path))
        op_path = tmp_path / "op.txt"
        code, _, _ = run_cli(capsys, "lbo", "build", "--nodes", str(sphere_file),
                             "--frames", str(frames_path), "--stencil", "15",
                             "--out", str(op_path))
        assert code == 0

    def test_build_rejects_mismatched_frames(self, sphere_file, tmp_path, capsys):
        other = tmp_path / "other.txt"
        run_cli(capsys, "nodes", "gen", "--n", "64", "--out", str(other))
        frames_path = tmp_path / "frames.csv"
        run_cli(capsys, "geom", "estimate", "--nodes", str(other),
                "--stencil", "15", "--out", str(frames_path))
        code, _, err = run_cli(capsys, "lbo", "build", "--nodes", str(sphere_file),
                               "--frames", str(frames_path), "--stencil", "15",
                               "--out", str(tmp_path / "op.txt"))
        assert code == 2
        assert "error:" in err

    def test_spectrum_report(self, sphere_file, tmp_path, capsys):
        op_path = tmp_path / "op.txt"
        run_cli(capsys, "lbo", "build", "--nodes", str(sphere_file),
                "--frames", "analytic:sphere", "--stencil", "15", "--out", str(op_path))
        spec_path = tmp_path / "spec.csv"
        code, out, _ = run_cli(capsys, "spectrum", "--operator", str(op_path),
                               "--kmax", "2", "--out", str(spec_path))
        assert code == 0
        assert "stable" in out
        assert "k=2" in out
        assert spec_path.read_text().startswith("re,im")


class TestSimulate:
    def test_turing_snapshots(self, sphere_file, tmp_path, capsys):
        out_dir = tmp_path / "turing"
        code, out, _ = run_cli(capsys, "simulate", "turing",
                               "--nodes", str(sphere_file),
                               "--frames", "analytic:sphere", "--preset", "spots",
                               "--t-end", "2", "--snapshot-every", "1",
                               "--stencil", "15", "--out", str(out_dir))
        assert code == 0
        index = (out_dir / "times.csv").read_text().splitlines()
        assert index[0] == "snapshot,time,file"
        assert len(index) == 4  # states at t = 0, 1, 2
        header = (out_dir / "snapshot_0000.csv").read_text().splitlines()[0]
        assert header == "x,y,z,u,v"

    def test_schaeffer_probe_and_vtk(self, sphere_file, tmp_path, capsys):
        out_dir = tmp_path / "wave"
        code, out, _ = run_cli(capsys, "simulate", "schaeffer",
                               "--nodes", str(sphere_file),
                               "--frames", "analytic:sphere", "--t-end", "2",
                               "--snapshot-every", "2", "--stencil", "15",
                               "--probe", "3", "--vtk", "--out", str(out_dir))
        assert code == 0
        probe = (out_dir / "probe_3.csv").read_text().splitlines()
        assert probe[0] == "t,v,h"
        assert len(probe) > 2
        header = (out_dir / "snapshot_0000.csv").read_text().splitlines()[0]
        assert header == "x,y,z,v,h"
        assert (out_dir / "snapshot_0000.vtk").exists()


class TestBench:
    def test_eps_sweep_json_and_csv(self, tmp_path, capsys):
        csv_path = tmp_path / "sweep.csv"
        code, out, _ = run_cli(capsys, "bench", "eps-sweep", "--n", "150",
                               "--stencil", "11", "--eps-grid", "2,4",
                               "--out", str(csv_path), "--json")
        assert code == 0
        report = json.loads(out[: out.rindex("}") + 1])
        assert len(report["rows"]) == 2
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "n,m,eps,max_error,max_cond,failures"
        assert len(lines) == 3

    def test_eps_sweep_plain_output(self, capsys):
        code, out, _ = run_cli(capsys, "bench", "eps-sweep", "--n", "150",
                               "--stencil", "11", "--eps-grid", "2:4:3")
        assert code == 0
        assert out.count("max_error") == 3

    def test_lbo_convergence_orders(self, capsys):
        code, out, _ = run_cli(capsys, "bench", "lbo-convergence",
                               "--n", "100,200,400", "--stencil", "11", "--json")
        assert code == 0
        report = json.loads(out[: out.rindex("}") + 1])
        assert "11" in report["orders"]
        assert len(report["rows"]) == 3

    def test_lbo_convergence_csv_footer(self, tmp_path, capsys):
        csv_path = tmp_path / "conv.csv"
        code, _, _ = run_cli(capsys, "bench", "lbo-convergence",
                             "--n", "100,200,400", "--stencil", "11",
                             "--out", str(csv_path))
        assert code == 0
        text = csv_path.read_text()
        assert "# mu[M=11] =" in text

    def test_frame_convergence_json(self, capsys):
        code, out, _ = run_cli(capsys, "bench", "frame-convergence",
                               "--n", "100,200,400", "--stencil", "11", "--json")
        assert code == 0
        report = json.loads(out[: out.rindex("}") + 1])
        assert "11" in report["orders_normal"]
        assert "11" in report["orders_kappa"]


def test_module_entry_point(tmp_path):
    path = tmp_path / "n.txt"
    proc = subprocess.run(
        [sys.executable, "-m", "rbfsurf", "nodes", "gen", "--n", "64",
         "--out", str(path)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert path.exists()
