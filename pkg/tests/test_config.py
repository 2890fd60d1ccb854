import json
import math

import pytest

from sine_gordon_lab.config import config_from_dict, load_config, parse_overrides
from sine_gordon_lab.errors import ConfigError, RegimeError
from sine_gordon_lab.parabolic import Placement


@pytest.mark.parametrize(
    "tokens, expected",
    [
        (["--grid.n_side", "64"], {"grid.n_side": "64"}),
        (["--grid.n_side=64", "--beta2", "3.14"], {"grid.n_side": "64", "beta2": "3.14"}),
        (["--sampler.potential_off"], {"sampler.potential_off": "true"}),
        (["--sampler.potential_off", "--seed=3"], {"sampler.potential_off": "true", "seed": "3"}),
        ({"N": "8"}, {"N": "8"}),
        (None, {}),
    ],
)
def test_parse_overrides(tokens, expected):
    """Override tokens map onto flat dotted keys."""
    assert parse_overrides(tokens) == expected


def test_stray_override_value():
    """A value without a preceding key is rejected."""
    with pytest.raises(ConfigError):
        parse_overrides(["64"])


def test_defaults():
    config = load_config(None)
    assert config.subcommand == "renorm-table"
    assert config.beta2 == pytest.approx(math.pi)
    assert config.dynamics.to_config(config.grid.chi).placement is Placement.NONLINEARITY
    assert config.dynamics.to_config("smooth", Placement.NOISE).placement is Placement.NOISE
    assert config.sampler.to_config("sharp").chi == "sharp"


def test_overrides_are_typed():
    config = config_from_dict(
        {"grid": {"L": 2}},
        {"scan.N_list": "[8, 16]", "grid.n_side": "64", "sampler.potential_off": "true", "seed": "7"},
    )
    assert config.scan.N_list == [8.0, 16.0]
    assert config.grid.n_side == 64
    assert config.grid.L == 2.0
    assert config.sampler.potential_off is True
    assert config.seed == 7
    assert config.as_dict()["grid"]["n_side"] == 64


def test_unknown_key_names_its_path():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"grid": {"bogus": 1}})
    assert info.value.field == "grid.bogus"
    assert "grid.bogus" in str(info.value)


@pytest.mark.parametrize(
    "data, field",
    [
        ({"grid": {"n_side": "abc"}}, "grid.n_side"),
        ({"grid": {"n_side": 2.5}}, "grid.n_side"),
        ({"grid": {"n_side": 48}}, "grid.n_side"),
        ({"grid": {"n_side": 2}}, "grid.n_side"),
        ({"sampler": {"tune": "maybe"}}, "sampler.tune"),
        ({"scan": {"N_list": 16}}, "scan.N_list"),
        ({"grid": 3}, "grid"),
        ({"dynamics": {"dt": -0.1}}, "dynamics.dt"),
        ({"dynamics": {"placement": "both"}}, "dynamics.placement"),
        ({"scan": {"kind": "phi"}}, "scan.kind"),
        ({"subcommand": "fly"}, "subcommand"),
        ({"seed": -1}, "seed"),
    ],
)
def test_invalid_values(data, field):
    """Every rejected value reports the key path it came from."""
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    assert info.value.field == field


def test_override_into_a_value_is_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"N": 4}, {"N.x": "1"})


def test_wave_regime():
    with pytest.raises(RegimeError):
        config_from_dict({"subcommand": "run-wave", "beta2": 2.0 * math.pi})
    config = config_from_dict({"subcommand": "run-wave", "beta2": 3.0})
    assert config.beta2 == 3.0
    with pytest.raises(ConfigError):
        config_from_dict({"subcommand": "run-wave", "beta2": 3.0, "norms": {"alpha": 0.5}})


@pytest.mark.parametrize("subcommand", ["run-parabolic", "sample-gibbs", "gmc-scan", "apriori-fit"])
def test_interacting_regime(subcommand):
    with pytest.raises(RegimeError):
        config_from_dict({"subcommand": subcommand, "beta2": 4.0 * math.pi})


@pytest.mark.parametrize("subcommand", ["renorm-table", "gff-check"])
def test_free_field_subcommands_ignore_regime(subcommand):
    assert config_from_dict({"subcommand": subcommand, "beta2": 20.0}).beta2 == 20.0


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(tmp_path / "missing.json")
    assert info.value.field == "config"

    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(broken)

    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(listing)


def test_load_config_file(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"subcommand": "gmc-scan", "scan": {"N_list": [4, 8]}}), encoding="utf-8")
    config = load_config(path, {"scan.samples": "32"})
    assert config.subcommand == "gmc-scan"
    assert config.scan.N_list == [4.0, 8.0]
    assert config.scan.samples == 32
