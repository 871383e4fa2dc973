import pytest
from hypothesis import given, strategies as st

from gpcls.config import DEFAULTS, Config, ConfigError, load_config, parse_config


def test_defaults_fill_every_key():
    cfg = Config()
    assert set(cfg) == set(DEFAULTS)
    assert cfg["sampling.log_factor"] == 20.0 and cfg["experiment.scheme"] == "i"


def test_parse_types_and_comments():
    cfg = parse_config(
        "# comment\n"
        "experiment.n_grid = 64, 128 ,256\n"
        "weights.q = 0.5   # trailing comment\n"
        "weights.normalize = true\n"
        "experiment.seed = 12\n"
        "\n"
        "field.psi = hats\n"
    )
    assert cfg["experiment.n_grid"] == [64, 128, 256]
    assert cfg["weights.q"] == 0.5 and isinstance(cfg["weights.q"], float)
    assert cfg["weights.normalize"] is True
    assert cfg["experiment.seed"] == 12
    assert cfg["field.psi"] == "hats"


def test_int_key_accepts_integral_float_only():
    assert Config({"mesh.nh": 64.0})["mesh.nh"] == 64
    with pytest.raises(ConfigError):
        Config({"mesh.nh": 64.5})


@pytest.mark.parametrize("text", ["bogus.key = 1", "experiment.seed", "experiment.seed = ", " = 3",
                                  "weights.normalize = 3", "mesh.nh = abc"])
def test_malformed(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_single_value_list():
    assert parse_config("experiment.n_grid = 64")["experiment.n_grid"] == [64]


@given(st.integers(0, 2**40), st.floats(0.01, 1.99), st.lists(st.integers(2, 10**6), min_size=1, max_size=6))
def test_dumps_roundtrip(seed, q, grid):
    cfg = Config({"experiment.seed": seed, "weights.q": q, "experiment.n_grid": grid})
    assert parse_config(cfg.dumps()) == cfg


def test_load_config(tmp_path):
    assert load_config(None) == Config()
    path = tmp_path / "c.cfg"
    path.write_text("mesh.nh = 8\n")
    assert load_config(path)["mesh.nh"] == 8
