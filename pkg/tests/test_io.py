import struct

import numpy as np
import pytest

from tomoanm import io
from tomoanm.bench import SweepRow, SweepTable
from tomoanm.errors import (
    BadMagicError,
    ConfigError,
    FormatError,
    TruncatedFileError,
    VersionMismatchError,
)
from tomoanm.tomosar import ArrayGeometry, PointCloud, SceneConfig, SLCStack, simulate_building_scene


def table(kind="snr", algos=("ivdst", "sdp", "omp", "ist"), params=(0.0, 10.0)):
    rows = [SweepRow(p, a, 0.1 / (1 + p) + i * 1e-3, 0.5, 0.01 * (i + 1), 0.009, 5)
            for p in params for i, a in enumerate(algos)]
    return SweepTable(kind, tuple(rows))


class TestSlcStack:
    def test_default_scene_round_trip(self, tmp_path):
        stack = simulate_building_scene(SceneConfig(), seed=0).stack
        path = tmp_path / "s.tsar"
        io.write_slc_stack(stack, path)
        back = io.read_slc_stack(path)
        assert back.shape == (8, 21, 64)
        assert back.data.tobytes() == stack.data.tobytes()
        assert path.stat().st_size == 20 + 8 * 21 * 64 * 16

    def test_header_layout(self, tmp_path):
        stack = SLCStack(np.arange(2 * 3 * 4).reshape(2, 3, 4) * (1 + 2j), ArrayGeometry(2))
        path = tmp_path / "h.tsar"
        io.write_slc_stack(stack, path)
        raw = path.read_bytes()
        assert struct.unpack("<4sHHIII", raw[:20]) == (b"TSAR", 1, 2, 3, 4, 0)
        # channel-major, then azimuth, then range; real then imaginary
        assert struct.unpack("<dd", raw[20 + 16:20 + 32]) == (1.0, 2.0)

    def test_shorter_than_header(self, tmp_path):
        path = tmp_path / "short.tsar"
        path.write_bytes(b"TSAR\x01\x00")
        with pytest.raises(TruncatedFileError):
            io.read_slc_stack(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "t.tsar"
        io.write_slc_stack(SLCStack(np.ones((2, 2, 2), complex), ArrayGeometry(2)), path)
        path.write_bytes(path.read_bytes()[:-1])
        with pytest.raises(TruncatedFileError):
            io.read_slc_stack(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.tsar"
        io.write_slc_stack(SLCStack(np.ones((2, 1, 1), complex), ArrayGeometry(2)), path)
        path.write_bytes(b"XXXX" + path.read_bytes()[4:])
        with pytest.raises(BadMagicError):
            io.read_slc_stack(path)

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "v.tsar"
        io.write_slc_stack(SLCStack(np.ones((2, 1, 1), complex), ArrayGeometry(2)), path)
        raw = bytearray(path.read_bytes())
        raw[4:6] = struct.pack("<H", 2)
        path.write_bytes(bytes(raw))
        with pytest.raises(VersionMismatchError):
            io.read_slc_stack(path)

    def test_errors_are_distinct(self):
        kinds = {TruncatedFileError, BadMagicError, VersionMismatchError}
        assert len(kinds) == 3 and all(issubclass(k, FormatError) for k in kinds)


class TestSweepCsv:
    def test_single_row(self, tmp_path):
        path = tmp_path / "one.csv"
        io.write_sweep_csv(SweepTable("snr", (SweepRow(30.0, "ivdst", 1e-3, 1.0, 0.01, 0.01, 1),)), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "param,algorithm,rmse_mean,success_rate,runtime_mean_s,runtime_median_s,trials"
        assert len(lines) == 2

    def test_rows_ordered(self, tmp_path):
        path = tmp_path / "o.csv"
        t = table(params=(10.0, 0.0))
        io.write_sweep_csv(t, path)
        keys = [(float(l.split(",")[0]), l.split(",")[1]) for l in path.read_text().splitlines()[1:]]
        assert keys == sorted(keys)

    def test_round_trip(self, tmp_path):
        path = tmp_path / "r.csv"
        t = table()
        io.write_sweep_csv(t, path)
        back = io.read_sweep_csv(path, "snr")
        assert len(back) == len(t)
        for a, b in zip(t.rows, back.rows):
            assert a.algorithm == b.algorithm and a.trials == b.trials
            np.testing.assert_allclose([a.param, a.rmse_mean, a.success_rate, a.runtime_mean_s],
                                       [b.param, b.rmse_mean, b.success_rate, b.runtime_mean_s],
                                       rtol=0, atol=1e-12)

    def test_empty_table(self, tmp_path):
        with pytest.raises(ConfigError):
            io.write_sweep_csv(SweepTable("snr", ()), tmp_path / "e.csv")


class TestPly:
    def test_empty_cloud(self, tmp_path):
        path = tmp_path / "e.ply"
        io.write_point_cloud_ply(PointCloud.empty(), path)
        text = path.read_text()
        assert "element vertex 0" in text
        assert io.read_point_cloud_ply(path).shape == (0, 4)

    def test_three_points(self, tmp_path):
        path = tmp_path / "p.ply"
        cloud = PointCloud([0, 1, 2], [3, 4, 5], [1.5, 20.25, 63.125], [1.0, 0.5, 0.25],
                           azimuth_spacing=3.0, ground_range_spacing=2.0)
        io.write_point_cloud_ply(cloud, path)
        lines = path.read_text().splitlines()
        assert "element vertex 3" in lines
        body = lines[lines.index("end_header") + 1:]
        assert len(body) == 3
        rows = io.read_point_cloud_ply(path)
        np.testing.assert_array_equal(rows[:, 2], [1.5, 20.25, 63.125])
        np.testing.assert_array_equal(rows[:, 0], [0.0, 3.0, 6.0])
        np.testing.assert_array_equal(rows[:, 1], [6.0, 8.0, 10.0])


class TestPlotScript:
    def test_snr_has_crlb(self, tmp_path):
        path = tmp_path / "snr.gp"
        io.emit_plot_script(table(), "snr", path, "snr.csv")
        text = path.read_text()
        assert text.count("title ") == 5 and "CRLB" in text
        assert "set logscale y" in text and "snr.csv" in text

    def test_elements_loglog(self, tmp_path):
        path = tmp_path / "el.gp"
        io.emit_plot_script(table("elements", params=(4.0, 8.0)), "elements", path, "el.csv")
        text = path.read_text()
        assert text.count("title ") == 4 and "CRLB" not in text
        assert "set logscale x" in text and "set logscale y" in text

    def test_empty(self, tmp_path):
        with pytest.raises(ConfigError):
            io.emit_plot_script(SweepTable("snr", ()), "snr", tmp_path / "x.gp", "x.csv")

    def test_kind_mismatch(self, tmp_path):
        with pytest.raises(ConfigError):
            io.emit_plot_script(table("snr"), "elements", tmp_path / "x.gp", "x.csv")
