import pytest

from dicke_bands.config import CASE_PRESETS, build_config, parse_config_text


def test_parse_basic():
    text = """
    # comment line
    omega = 1.0
    omega0 = 5.0   # trailing comment
    coupling_ratio_f = 3.0
    j = 15
    n_max = auto
    maslov_index = 2
    j_list = 5 6 7
    """
    data = parse_config_text(text)
    assert data["omega0"] == 5.0
    assert data["n_max"] is None
    assert data["maslov_index"] == 2
    assert data["j_list"] == (5.0, 6.0, 7.0)


def test_parse_rejects_unknown_key():
    with pytest.raises(ValueError, match="unknown key"):
        parse_config_text("omeega = 1.0")


def test_parse_rejects_bad_line():
    with pytest.raises(ValueError, match="expected"):
        parse_config_text("omega 1.0")


def test_case_presets(tmp_path):
    cfg = build_config(case="a")
    p = cfg.params()
    assert (p.omega, p.omega0, p.j) == (1.0, 5.0, 15.0)
    assert p.f == pytest.approx(3.0, rel=1e-15)
    cfg_b = build_config(case="b")
    assert cfg_b.params().f == pytest.approx(5.0, rel=1e-15)
    assert set(CASE_PRESETS) == {"a", "b"}


def test_override_precedence(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("omega = 2.0\ncoupling_ratio_f = 4.0\nj = 3\n")
    cfg = build_config(file=f, case="a", overrides={"j": 5.0})
    # file overrides the preset, CLI overrides the file
    assert cfg.omega == 2.0
    assert cfg.coupling_ratio_f == 4.0
    assert cfg.j == 5.0


def test_gamma_wins_over_preset_ratio():
    cfg = build_config(case="b", overrides={"gamma": 1.25})
    assert cfg.params().gamma == 1.25


def test_requires_coupling():
    with pytest.raises(ValueError):
        build_config(overrides={"omega": 1.0, "j": 2.0})


def test_exclusive_coupling_inputs():
    with pytest.raises(ValueError):
        build_config(overrides={"coupling_ratio_f": 2.0, "gamma": 1.0, "j": 2.0}).params()
