import subprocess
import sys

import numpy as np
import pytest

from tomoanm import io
from tomoanm.cli import main

SMALL_SCENE = """
seed = 3
[scene]
azimuth_size = 2
range_size = 30
building_azimuth = [0, 1]
[output]
prefix = "run"
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL_SCENE)
    return path


def run(*argv):
    return main([str(a) for a in argv])


class TestSimulateReconstruct:
    def test_simulate_writes_stack_and_truth(self, tmp_path, small_config):
        assert run("simulate", "--config", small_config, "--out", tmp_path) == 0
        stack = io.read_slc_stack(tmp_path / "run_stack.tsar")
        assert stack.shape == (8, 2, 30)
        truth = io.read_truth_csv(tmp_path / "run_truth.csv", 2, 30)
        assert sum(len(c) for row in truth for c in row) > 0

    def test_reconstruct_deterministic_ply(self, tmp_path, small_config, capsys):
        run("simulate", "--config", small_config, "--out", tmp_path)
        outputs = []
        for sub in ("a", "b"):
            code = run("reconstruct", "--config", small_config, "--out", tmp_path / sub,
                       "--stack", tmp_path / "run_stack.tsar", "--truth", tmp_path / "run_truth.csv",
                       "--algos", "ivdst,omp")
            assert code == 0
            outputs.append([(tmp_path / sub / f"run_{a}.ply").read_bytes() for a in ("ivdst", "omp")])
        assert outputs[0] == outputs[1]
        assert "height RMSE" in capsys.readouterr().out

    def test_noiseless_flag(self, tmp_path, small_config):
        run("simulate", "--config", small_config, "--out", tmp_path, "--noiseless")
        stack = io.read_slc_stack(tmp_path / "run_stack.tsar")
        assert np.allclose(stack.data[:, 1, 0], stack.data[0, 1, 0])  # flat ground at f = 0


class TestEstimate:
    def test_configured_pixel(self, capsys):
        assert run("estimate", "--algos", "ivdst,sdp") == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "algorithm,frequency,elevation_m,re,im"
        for line in lines[1:]:
            assert abs(float(line.split(",")[1]) - 0.5) < 1e-4

    def test_pixel_from_stack(self, tmp_path, small_config, capsys):
        run("simulate", "--config", small_config, "--out", tmp_path)
        capsys.readouterr()
        assert run("estimate", "--stack", tmp_path / "run_stack.tsar", "--azimuth", 1, "--range", 2) == 0
        assert len(capsys.readouterr().out.splitlines()) == 2

    def test_pixel_outside_stack(self, tmp_path, small_config):
        run("simulate", "--config", small_config, "--out", tmp_path)
        assert run("estimate", "--stack", tmp_path / "run_stack.tsar", "--azimuth", 5) == 1


class TestSweepCommand:
    def test_byte_identical_reruns(self, tmp_path):
        args = ("sweep", "--kind", "snr", "--grid", "20,30", "--trials", "2", "--algos", "ivdst,omp",
                "--no-timing", "--seed", "5")
        assert run(*args, "--out", tmp_path / "a") == 0
        assert run(*args, "--out", tmp_path / "b") == 0
        for name in ("tomoanm_snr.csv", "tomoanm_snr.gp"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        table = io.read_sweep_csv(tmp_path / "a" / "tomoanm_snr.csv", "snr")
        assert len(table) == 4

    def test_elements_sweep_plot(self, tmp_path):
        assert run("sweep", "--kind", "elements", "--grid", "4,6", "--trials", "1", "--algos", "ivdst",
                   "--out", tmp_path) == 0
        assert "set logscale x" in (tmp_path / "tomoanm_elements.gp").read_text()


class TestCrlbAndExitCodes:
    def test_crlb_table(self, capsys):
        assert run("crlb", "-n", 8, "--snr", "30") == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "snr_db,variance,rmse"
        assert float(lines[1].split(",")[1]) == pytest.approx(3.0155114179267197e-07, rel=1e-12)

    def test_usage_error(self):
        assert run("estimate", "--algos", "music") == 1
        assert run("bogus") == 1

    def test_config_error(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("[geomtry]\n")
        assert run("crlb", "--config", bad) == 1
        assert run("crlb", "-n", 1) == 1

    def test_runtime_error(self, tmp_path):
        bad = tmp_path / "bad.tsar"
        bad.write_bytes(b"XXXX" + bytes(16))
        assert run("reconstruct", "--stack", bad, "--out", tmp_path) == 2
        assert run("reconstruct", "--stack", tmp_path / "missing.tsar", "--out", tmp_path) == 2

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "tomoanm", "crlb", "-n", "4", "--snr", "0"],
                              capture_output=True, text=True)
        assert proc.returncode == 0 and proc.stdout.startswith("snr_db,variance,rmse")
        proc = subprocess.run([sys.executable, "-m", "tomoanm"], capture_output=True, text=True)
        assert proc.returncode == 1
