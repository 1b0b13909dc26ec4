"""End-to-end CLI checks: exit codes, file outputs, determinism."""

import json
import subprocess
import sys

import numpy as np
import pytest

from opnorm import fileio, symmetrize
from opnorm.cli import main


def write_identity(tmp_path, n=8, name="id.mtx"):
    path = tmp_path / name
    fileio.write_matrix(path, np.eye(n))
    return path


def strip_wall_time(path):
    payload = json.loads(path.read_text())
    payload.pop("wall_time_ms")
    return payload


class TestCertify:
    def test_identity_verified(self, tmp_path, capsys):
        mtx = write_identity(tmp_path)
        out = tmp_path / "cert.json"
        code = main(["certify", str(mtx), "--delta", "0.1",
                     "--max-iters", "5000", "--out", str(out)])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "bound" in stdout
        payload = json.loads(out.read_text())
        assert list(payload) == list(fileio.CERTIFICATE_FIELDS)
        assert payload["bound"] == pytest.approx(8.0, rel=1e-6)
        assert payload["verified"] == "verified"
        assert payload["n"] == 8

    def test_all_ones_early_stop(self, tmp_path):
        mtx = tmp_path / "ones.mtx"
        fileio.write_matrix(mtx, np.ones((8, 8)))
        out = tmp_path / "cert.json"
        code = main(["certify", str(mtx), "--max-iters", "5000",
                     "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["bound"] == pytest.approx(64.0, rel=1e-6)
        assert payload["early_stopped"] is True
        assert payload["iterations_used"] == 1

    def test_deterministic_json(self, tmp_path):
        mtx = tmp_path / "m.csv"
        rng = np.random.default_rng(5)
        m = symmetrize(rng.standard_normal((9, 9)))
        np.fill_diagonal(m, np.abs(np.diag(m)))
        fileio.write_matrix(mtx, m)
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            code = main(["certify", str(mtx), "--max-iters", "500",
                         "--seed", "3", "--out", str(out)])
            assert code in (0, 3)
            outs.append(out)
        assert strip_wall_time(outs[0]) == strip_wall_time(outs[1])
        lines = [
            [ln for ln in p.read_text().splitlines() if "wall_time_ms" not in ln]
            for p in outs
        ]
        assert lines[0] == lines[1]

    def test_inf2_mode(self, tmp_path):
        mtx = write_identity(tmp_path, n=4)
        out = tmp_path / "cert.json"
        code = main(["certify", str(mtx), "--mode", "inf2",
                     "--max-iters", "5000", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["mode"] == "inf2"
        assert payload["bound"] == pytest.approx(2.0, rel=1e-6)

    def test_missing_file_exit_2(self, tmp_path):
        assert main(["certify", str(tmp_path / "nope.mtx")]) == 2

    def test_malformed_file_exit_2(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("garbage\n")
        assert main(["certify", str(path)]) == 2

    def test_negative_diagonal_exit_3(self, tmp_path):
        m = np.eye(4)
        m[0, 0] = -1.0
        path = tmp_path / "neg.mtx"
        fileio.write_matrix(path, m)
        assert main(["certify", str(path), "--max-iters", "100"]) == 3

    def test_asymmetric_inf1_exit_3(self, tmp_path):
        path = tmp_path / "asym.csv"
        path.write_text("2\n1.0,5.0\n0.0,1.0\n")
        assert main(["certify", str(path), "--max-iters", "100"]) == 3


class TestOracle:
    def test_identity_value(self, tmp_path, capsys):
        mtx = write_identity(tmp_path, n=4)
        assert main(["oracle", str(mtx)]) == 0
        out = capsys.readouterr().out
        assert "value 4.0" in out
        assert "argmax" in out

    def test_inf2_mode(self, tmp_path, capsys):
        mtx = write_identity(tmp_path, n=4)
        assert main(["oracle", str(mtx), "--mode", "inf2"]) == 0
        assert "value 2.0" in capsys.readouterr().out

    def test_size_cap_exit_3(self, tmp_path):
        mtx = write_identity(tmp_path, n=25)
        assert main(["oracle", str(mtx)]) == 3


class TestProject:
    def test_synth_planted_recovers(self, tmp_path, capsys):
        prefix = tmp_path / "proj"
        code = main(["project", "--synth", "planted", "--n", "20",
                     "--rank", "2", "--sparsity-true", "3", "--sparsity", "3",
                     "--samples", "120", "--budget", "0.05",
                     "--max-iters", "3000", "--out", str(prefix)])
        assert code == 0
        assert "supports_recovered True" in capsys.readouterr().out
        report = json.loads((tmp_path / "proj.json").read_text())
        assert report["rank"] == 2
        assert report["kappa"] <= np.sqrt(20)
        assert report["reconstruction_error"] <= 0.05
        basis = fileio.read_data_csv(tmp_path / "proj_basis.csv")
        assert basis.shape == (20, 2)

    def test_data_csv_input(self, tmp_path):
        rng = np.random.default_rng(0)
        a = np.zeros((50, 8))
        a[:, 0] = rng.standard_normal(50)
        a[:, 1] = rng.standard_normal(50)
        data_path = tmp_path / "data.csv"
        fileio.write_data_csv(data_path, a)
        code = main(["project", "--data", str(data_path), "--rank", "2",
                     "--budget", "0.05", "--max-iters", "3000",
                     "--out", str(tmp_path / "p")])
        assert code == 0

    def test_infeasible_budget_exit_4(self, tmp_path):
        rng = np.random.default_rng(1)
        data_path = tmp_path / "data.csv"
        fileio.write_data_csv(data_path, rng.standard_normal((40, 10)))
        code = main(["project", "--data", str(data_path), "--rank", "1",
                     "--budget", "1e-9", "--max-iters", "2000",
                     "--out", str(tmp_path / "p")])
        assert code == 4

    def test_malformed_data_exit_2(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("oops\n")
        assert main(["project", "--data", str(path), "--rank", "2"]) == 2


class TestTranslate:
    def _records(self, tmp_path, rows="1,1.0\n" * 5):
        path = tmp_path / "records.csv"
        path.write_text(rows)
        return path

    def test_step_curve_at_sqrt_n_translation(self, tmp_path):
        records = self._records(tmp_path)
        out = tmp_path / "curve.csv"
        code = main(["translate", "--records", str(records),
                     "--kappa", "55.42", "--epsilons", "0.0,1.0,1.5",
                     "--out", str(out)])
        assert code == 0
        points = fileio.read_curve(out)
        assert points[1][0] == pytest.approx(0.018044, abs=1e-6)
        assert points[1][1] == 1.0
        assert points[2][1] == 0.0
        assert (tmp_path / "curve.png").exists()

    def test_no_plot_flag(self, tmp_path):
        records = self._records(tmp_path)
        out = tmp_path / "curve.csv"
        code = main(["translate", "--records", str(records), "--kappa", "2.0",
                     "--out", str(out), "--no-plot"])
        assert code == 0
        assert not (tmp_path / "curve.png").exists()

    def test_kappa_from_certificate(self, tmp_path):
        records = self._records(tmp_path)
        cert = tmp_path / "cert.json"
        fileio.write_certificate_json(cert, {
            "n": 4, "bound": 4.0, "mode": "inf1", "y": [1.0] * 4,
            "iterations_used": 1, "early_stopped": False, "stop_reason": None,
            "verified": "verified", "margin": 0.0, "wall_time_ms": 1.0})
        out = tmp_path / "curve.csv"
        code = main(["translate", "--records", str(records),
                     "--cert", str(cert), "--epsilons", "1.0",
                     "--out", str(out), "--no-plot"])
        assert code == 0
        points = fileio.read_curve(out)
        assert points[0][0] == pytest.approx(0.5)  # kappa = sqrt(4) = 2

    def test_unverified_certificate_refused(self, tmp_path):
        records = self._records(tmp_path)
        cert = tmp_path / "cert.json"
        fileio.write_certificate_json(cert, {
            "n": 4, "bound": 4.0, "mode": "inf1", "y": [1.0] * 4,
            "iterations_used": 1, "early_stopped": False, "stop_reason": None,
            "verified": "failed", "margin": -1.0, "wall_time_ms": 1.0})
        code = main(["translate", "--records", str(records),
                     "--cert", str(cert), "--out", str(tmp_path / "c.csv")])
        assert code == 3

    def test_empty_records_exit_2(self, tmp_path):
        records = self._records(tmp_path, rows="")
        code = main(["translate", "--records", str(records), "--kappa", "2.0",
                     "--out", str(tmp_path / "c.csv")])
        assert code == 2

    def test_missing_kappa_exit_3(self, tmp_path):
        records = self._records(tmp_path)
        assert main(["translate", "--records", str(records),
                     "--out", str(tmp_path / "c.csv")]) == 3

    def test_nonpositive_kappa_exit_3(self, tmp_path):
        records = self._records(tmp_path)
        assert main(["translate", "--records", str(records), "--kappa", "-1",
                     "--out", str(tmp_path / "c.csv")]) == 3


class TestBench:
    def test_small_grid_with_oracle(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = main(["bench", "--family", "qp", "--grid", "6:10:2",
                     "--trials", "2", "--oracle", "--max-iters", "400",
                     "--seed", "1", "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        header = lines[0].split(",")
        assert header[:3] == ["n", "trial", "wall_ms"]
        assert "oracle_value" in header and "ratio" in header
        rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
        assert len(rows) == 6  # 3 sizes x 2 trials
        assert all(float(r["ratio"]) >= 1.0 - 1e-9 for r in rows)
        assert (tmp_path / "bench.png").exists()

    def test_psd_family(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = main(["bench", "--family", "psd", "--grid", "12:16:4",
                     "--trials", "1", "--max-iters", "400",
                     "--out", str(out), "--no-plot"])
        assert code == 0
        assert len(out.read_text().splitlines()) == 3

    def test_oracle_cap_enforced(self, tmp_path):
        code = main(["bench", "--grid", "30:30", "--oracle",
                     "--out", str(tmp_path / "b.csv")])
        assert code == 3


class TestConsoleScript:
    def test_entry_point_help(self):
        proc = subprocess.run([sys.executable, "-m", "opnorm.cli", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "certify" in proc.stdout
