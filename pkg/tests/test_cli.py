"""Experiment drivers: manifests, exit codes, replay, and the console entry.

Solver-backed cases run on coarse grids with a mild final width so each
test stays around a second.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from unstablefb import (
    RunManifest,
    main,
    read_field_csv,
    rerun_manifest,
    run_solve,
    run_threshold_scan,
)

COARSE = dict(n_r=64, n_phi=64, eps_min=0.05)


@pytest.fixture(scope="module")
def solve_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    manifest = run_solve(2, M=40.0, out_dir=out, **COARSE)
    return out, manifest


class TestSolveDriver:
    def test_status_and_exit_code(self, solve_run):
        _, m = solve_run
        assert m.status == "ok"
        assert m.exit_code == 0
        assert all(rec["passed"] for rec in m.checks)

    def test_manifest_written_and_loadable(self, solve_run):
        out, m = solve_run
        stored = RunManifest.load(out / "manifest.json")
        assert stored.experiment == "solve"
        assert stored.content_hash == m.content_hash
        assert stored.headline == m.headline
        assert stored.parameters["backend"] == "direct"

    def test_outputs_exist(self, solve_run):
        out, m = solve_run
        assert set(m.outputs) == {"solution.csv", "solution.vtk", "solution.json"}
        for name in m.outputs:
            assert (out / name).exists()
        field = read_field_csv(out / "solution.csv")
        assert field.grid.shape == (64, 64)

    def test_headline_content(self, solve_run):
        _, m = solve_run
        assert 0.0 < m.headline["kappa"] < 0.26
        assert abs(m.headline["origin_value"]) <= 1e-8
        assert m.headline["eps_final"] == 0.05

    def test_content_hash_tracks_parameters(self, solve_run, tmp_path):
        _, m = solve_run
        other = run_solve(2, M=39.0, out_dir=tmp_path, **COARSE)
        assert len(m.content_hash) == 64
        assert other.content_hash != m.content_hash

    def test_runtime_recorded(self, solve_run):
        _, m = solve_run
        assert m.runtime_seconds > 0.0


class TestFailurePath:
    def test_unreachable_tolerance_writes_failure_manifest(self, tmp_path):
        m = run_solve(2, M=40.0, n_r=32, n_phi=32, eps_min=0.1,
                      out_dir=tmp_path, eps_start=0.1, newton_tol=1e-30)
        assert m.status == "solver_failure"
        assert m.exit_code == 3
        assert m.failure  # reason recorded
        stored = json.loads((tmp_path / "manifest.json").read_text())
        assert stored["status"] == "solver_failure"


class TestRerun:
    def test_headline_is_bit_stable(self, solve_run, tmp_path):
        out, m = solve_run
        fresh, same = rerun_manifest(out / "manifest.json", tmp_path)
        assert same
        assert fresh.headline["kappa"] == m.headline["kappa"]

    def test_unknown_experiment_rejected(self, tmp_path):
        bad = {"experiment": "mystery", "parameters": {}, "content_hash": "0" * 64,
               "outputs": [], "headline": {}, "checks": [], "status": "ok",
               "failure": None, "runtime_seconds": 0.0}
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(bad))
        with pytest.raises(ValueError):
            rerun_manifest(path, tmp_path / "out")


class TestScanDriver:
    def test_small_scan(self, tmp_path):
        m = run_threshold_scan([0.0, 2.0, 4.0], 0.5, tmp_path,
                               n_r=256, n_phi=256, mc_samples=200_000)
        assert m.status == "ok"
        assert (tmp_path / "threshold_scan.csv").exists()
        header = (tmp_path / "threshold_scan.csv").read_text().splitlines()[0]
        assert header == "M,energy_bound"
        assert m.headline["m_star"] is not None
        assert 1.5 < m.headline["m_star"] < 2.5

    def test_all_positive_scan_has_no_threshold(self, tmp_path):
        m = run_threshold_scan([0.0, 0.5], 0.5, tmp_path,
                               n_r=256, n_phi=256, mc_samples=100_000)
        assert m.headline["m_star"] is None
        # a short positive scan cannot show the negative tail; the check
        # machinery must not demand one below the 4*C1 landmark
        assert m.status == "ok"


class TestConsoleEntry:
    def test_solve_command(self, tmp_path, capsys):
        code = main(["solve", "--k", "2", "--M", "40", "--nr", "64",
                     "--nphi", "64", "--eps-min", "0.05",
                     "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert "[pass] converged" in out
        assert "status: ok" in out

    def test_field_analysis_commands(self, tmp_path, capsys, solve_run):
        run_dir, _ = solve_run
        csv = str(run_dir / "solution.csv")
        assert main(["phi", csv, "--out", str(tmp_path / "prof.csv")]) == 0
        assert main(["blowup", csv, "--radii", "0.1,0.2,0.3",
                     "--out", str(tmp_path / "blow.csv")]) == 0
        assert main(["fb", csv, "--out", str(tmp_path)]) == 0
        assert (tmp_path / "prof.csv").exists()
        assert (tmp_path / "blow.csv").exists()
        assert (tmp_path / "fb.csv").exists()

    def test_rerun_command(self, tmp_path, capsys, solve_run):
        run_dir, _ = solve_run
        code = main(["rerun", str(run_dir / "manifest.json"),
                     "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert "identical" in out

    def test_missing_field_file_is_usage_error(self, tmp_path):
        assert main(["phi", str(tmp_path / "absent.csv")]) == 2

    def test_bad_arguments_exit_2(self):
        with pytest.raises(SystemExit) as info:
            main(["frobnicate"])
        assert info.value.code == 2
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 2
