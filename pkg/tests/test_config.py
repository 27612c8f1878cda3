import pytest

from tomoanm.config import RunConfig, load_config, parse_config
from tomoanm.errors import ConfigError

MINIMAL = """
seed = 7

[geometry]
n_elements = 8
element_spacing = 0.11

[estimator]
algorithm = "ivdst"
k = 1

[pixel]
frequencies = [0.5]
amplitudes = [[1.0, 0.0]]
snr_db = 30.0
"""


def test_minimal_pixel_config():
    cfg = parse_config(MINIMAL)
    assert isinstance(cfg, RunConfig)
    assert cfg.seed == 7 and cfg.geometry.n_elements == 8
    assert cfg.pixel.frequencies == (0.5,) and cfg.pixel.amplitudes == (1 + 0j,)
    assert cfg.pixel.snr_db == 30.0


def test_empty_config_uses_defaults():
    cfg, ref = parse_config(""), RunConfig()
    for name in ("seed", "geometry", "estimator", "scene", "pixel", "output", "amplitude_floor", "k_max"):
        assert getattr(cfg, name) == getattr(ref, name)
    assert cfg.sweep.kind == ref.sweep.kind and cfg.sweep.grid == ref.sweep.grid


def test_zero_elements_names_field():
    with pytest.raises(ConfigError, match=r"geometry\.n_elements"):
        parse_config("[geometry]\nn_elements = 0\n")


def test_unknown_section():
    with pytest.raises(ConfigError, match="unknown key 'geomtry'"):
        parse_config("[geomtry]\nn_elements = 8\n")


def test_unknown_nested_key():
    with pytest.raises(ConfigError, match=r"unknown key 'estimator\.ivdst\.stepsize'"):
        parse_config("[estimator.ivdst]\nstepsize = 0.5\n")


@pytest.mark.parametrize("text, path", [
    ("[estimator.ivdst]\nstep_size = 2.0\n", "estimator.ivdst.step_size"),
    ("[estimator.sdp]\npenalty = -1.0\n", "estimator.sdp.penalty"),
    ("[estimator]\nk = 8\n", "estimator.k"),
    ("[sweep]\ntrials = 0\n", "sweep"),
    ("[geometry]\nelement_spacing = \"wide\"\n", "geometry.element_spacing"),
    ("[pixel]\nfrequencies = [1.5]\n", "pixel.frequencies"),
    ("[reconstruct]\nk_max = 9\n", "reconstruct.k_max"),
    ("[scene]\nbuilding_height = 500.0\n", "scene"),
    ("[estimator]\nalgorithm = \"music\"\n", "estimator.algorithm"),
])
def test_invariant_violations_carry_path(text, path):
    with pytest.raises(ConfigError, match=path.replace(".", r"\.")):
        parse_config(text)


def test_noiseless_marker_and_carrier():
    cfg = parse_config('[geometry]\ncarrier_frequency = 9.6e9\n[scene]\nsnr_db = "none"\n')
    assert cfg.scene.snr_db is None
    assert cfg.geometry.wavelength == pytest.approx(299_792_458.0 / 9.6e9)


def test_sweep_section():
    cfg = parse_config('[sweep]\nkind = "elements"\ngrid = [4, 8]\nalgorithms = ["ivdst"]\ntrials = 3\n')
    assert cfg.sweep.kind == "elements" and cfg.sweep.grid == (4.0, 8.0)
    assert cfg.sweep.algorithms == ("ivdst",) and cfg.sweep.trials == 3


def test_invalid_toml():
    with pytest.raises(ConfigError):
        parse_config("[geometry\n")


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.toml")
    (tmp_path / "run.toml").write_text(MINIMAL)
    assert load_config(tmp_path / "run.toml").seed == 7
