import json
import math
import re

import numpy as np
import pytest

from kornlab.cli import main, parse_profile
from kornlab.gridfield import PeriodicGrid, ScalarField, save_field


def run(argv, capsys=None):
    code = main(argv)
    return code


class TestParseProfile:
    def test_stock_string(self):
        cos_c, sin_c = parse_profile("0.2+0.05*cos(3t)")
        assert cos_c == {0: 0.2, 3: 0.05}
        assert sin_c == {}

    def test_signs_spaces_and_sin(self):
        cos_c, sin_c = parse_profile("0.3 - 0.1*cos(2*t) + 0.05*sin(t)")
        assert cos_c == {0: 0.3, 2: -0.1}
        assert sin_c == {1: 0.05}

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_profile("0.2+weird(3t)")


class TestKornCommand:
    def test_square_sweep_report(self, tmp_path):
        report = tmp_path / "korn.json"
        code = run(["korn", "--domain", "square", "--refine", "2",
                    "--bc", "tangential", "--report", str(report)])
        assert code == 0
        payload = json.loads(report.read_text())
        result = payload["result"]
        assert result["monotone_nondecreasing"]
        assert 1.90 <= result["kappa_sq_final"] <= 2.0 + 1e-9
        assert payload["config"]["domain"] == "square"
        assert "timestamp" in payload and "version" in payload

    def test_store_maximizer_flag(self, tmp_path):
        report = tmp_path / "korn.json"
        code = run(["korn", "--domain", "square", "--refine", "1",
                    "--store-maximizer", "--report", str(report)])
        assert code == 0
        levels = json.loads(report.read_text())["result"]["levels"]
        assert all("maximizer" in lvl for lvl in levels)
        assert len(levels[-1]["maximizer"]) == 2 * 5**2  # full dof vector

    def test_disk_reports_rotational_symmetry_and_deflation(self, tmp_path):
        report = tmp_path / "disk.json"
        code = run(["korn", "--domain", "disk", "--refine", "3", "--report", str(report)])
        assert code == 0
        last = json.loads(report.read_text())["result"]["levels"][-1]
        assert last["l_omega"]["kind"] == "rotational"
        assert last["deflated_rotation"]

    def test_malformed_mesh_file_exits_2_with_diagnostic(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"vertices": [[0,0],[1,0],[2,0]], "triangles": [[0,1,2]]}')
        code = run(["korn", "--mesh-file", str(bad)])
        assert code == 2
        assert "area" in capsys.readouterr().err

    def test_mesh_file_path(self, tmp_path):
        from kornlab.mesh import save_mesh, unit_square

        mesh_path = tmp_path / "mesh.json"
        save_mesh(unit_square(4), mesh_path)
        report = tmp_path / "report.json"
        code = run(["korn", "--mesh-file", str(mesh_path), "--report", str(report)])
        assert code == 0
        result = json.loads(report.read_text())["result"]
        assert len(result["levels"]) == 1

    def test_structurally_singular_problem_exits_4(self, tmp_path, capsys):
        # the two-triangle square has no admissible slip fields at all
        from kornlab.mesh import save_mesh, unit_square

        mesh_path = tmp_path / "tiny.json"
        save_mesh(unit_square(1), mesh_path)
        code = run(["korn", "--mesh-file", str(mesh_path), "--bc", "tangential"])
        assert code == 4
        assert "empty" in capsys.readouterr().err


class TestRigidityCommand:
    def test_default_run_certifies_equality(self, tmp_path):
        report = tmp_path / "rig.json"
        code = run(["rigidity", "--n", "128", "--report", str(report)])
        assert code == 0
        r = json.loads(report.read_text())["result"]
        assert abs(r["ratio"] - 1.0) < 1e-3
        assert abs(r["g_norm"] / r["f_norm"] - 1.0) < 1e-10

    def test_r0_flag_sets_optimal_angle(self, tmp_path):
        report = tmp_path / "rig.json"
        code = run(["rigidity", "--n", "128", "--r0", "1.0472", "--report", str(report)])
        assert code == 0
        r = json.loads(report.read_text())["result"]
        assert abs(r["optimal_theta"] - math.pi / 3) < 1e-4

    def test_zero_alpha_file_exits_3(self, tmp_path, capsys):
        grid = PeriodicGrid(64, 20.0)
        path = tmp_path / "alpha.json"
        save_field(ScalarField(grid, np.zeros((64, 64))), path)
        code = run(["rigidity", "--alpha-file", str(path)])
        assert code == 3
        assert "rotation" in capsys.readouterr().err

    def test_unknown_profile_exits_2(self):
        assert run(["rigidity", "--n", "64", "--profile", "gaussian-bump",
                    "--width", "50"]) == 2  # support check fails


class TestShellCommand:
    def test_default_writes_csv_and_slope(self, tmp_path):
        csv_path = tmp_path / "table.csv"
        report = tmp_path / "shell.json"
        code = run(["shell", "--h-list", "0.1,0.05", "--angular", "128",
                    "--radial", "2", "--csv", str(csv_path), "--report", str(report)])
        assert code == 0
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "h,grad_norm,symgrad_norm,ratio,tangency_residual"
        assert len(lines) == 3
        assert json.loads(report.read_text())["result"]["slope"] is not None

    def test_single_h_has_no_slope(self, tmp_path):
        report = tmp_path / "shell1.json"
        code = run(["shell", "--h-list", "0.1", "--angular", "128",
                    "--radial", "2", "--report", str(report)])
        assert code == 0
        assert json.loads(report.read_text())["result"]["slope"] is None

    def test_constant_profile_exits_3(self, capsys):
        code = run(["shell", "--profile", "0.2", "--h-list", "0.1,0.05"])
        assert code == 3
        assert "rigid rotation" in capsys.readouterr().err

    def test_coeffs_file(self, tmp_path):
        coeffs = tmp_path / "coeffs.json"
        coeffs.write_text(json.dumps({"cos": {"0": 0.25, "2": 0.04}}))
        report = tmp_path / "shell.json"
        code = run(["shell", "--coeffs", str(coeffs), "--h-list", "0.1,0.05",
                    "--angular", "128", "--radial", "2", "--report", str(report)])
        assert code == 0


class TestSelftestCommand:
    def test_clean_run_passes(self, tmp_path, capsys):
        report = tmp_path / "self.json"
        code = run(["selftest", "--seed", "1", "--samples", "2000",
                    "--report", str(report)])
        out = capsys.readouterr().out
        assert code == 0
        assert "FAIL" not in out
        assert json.loads(report.read_text())["result"]["all_passed"]

    def test_break_det_constant_fails_loudly(self, capsys):
        code = run(["selftest", "--seed", "1", "--samples", "2000",
                    "--break-det-constant"])
        out = capsys.readouterr().out
        assert code == 1
        assert re.search(r"\[FAIL\] mat2\.det_identity", out)

    def test_fixed_seed_is_deterministic(self, capsys):
        run(["selftest", "--seed", "9", "--samples", "1500"])
        first = capsys.readouterr().out
        run(["selftest", "--seed", "9", "--samples", "1500"])
        second = capsys.readouterr().out
        assert first == second


def test_thread_cap_env_var(monkeypatch):
    from kornlab.cli import _apply_thread_cap

    monkeypatch.setenv("KORNLAB_THREADS", "2")
    monkeypatch.delenv("OMP_NUM_THREADS", raising=False)
    monkeypatch.setenv("OPENBLAS_NUM_THREADS", "8")  # explicit settings win
    _apply_thread_cap()
    import os

    assert os.environ["OMP_NUM_THREADS"] == "2"
    assert os.environ["OPENBLAS_NUM_THREADS"] == "8"


class TestConfigHandling:
    def test_config_file_with_flag_override(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"domain": "square", "refine": 1, "bc": "dirichlet"}))
        report = tmp_path / "report.json"
        code = run(["korn", "--config", str(config), "--refine", "2",
                    "--report", str(report)])
        assert code == 0
        cfg = json.loads(report.read_text())["config"]
        assert cfg["refine"] == 2       # flag wins
        assert cfg["bc"] == "dirichlet"  # config survives

    def test_unknown_config_key_exits_2(self, tmp_path, capsys):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"domain": "square", "bogus": 1}))
        assert run(["korn", "--config", str(config)]) == 2
        assert "bogus" in capsys.readouterr().err

    def test_reports_identical_apart_from_timestamp(self, tmp_path):
        out = tmp_path / "report.json"
        args = ["rigidity", "--n", "64", "--width", "0.5", "--amplitude", "0.4",
                "--report", str(out)]
        assert run(args) == 0
        first = json.loads(out.read_text())
        assert run(args) == 0
        second = json.loads(out.read_text())
        first.pop("timestamp")
        second.pop("timestamp")
        assert first == second
