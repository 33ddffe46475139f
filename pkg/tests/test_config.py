import json

import pytest

from netkernel.core.config import (
    ConfigManager,
    ExperimentConfig,
    load_experiment_config,
    merge_defaults,
    parse_experiment_config,
    read_config_mapping,
)
from netkernel.core.errors import ConfigError


def test_yaml_file_is_validated(write_config):
    path = write_config({"experiment": "fit-als", "seed": 4, "system": {"N": 8, "M": 20}})
    config = load_experiment_config(path)
    assert isinstance(config, ExperimentConfig)
    assert config.seed == 4
    assert config.system.N == 8
    assert config.system.d == 2
    assert config.basis.preset == "lj3"


def test_json_file_is_accepted(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({"experiment": "simulate"}))
    assert load_experiment_config(path).experiment == "simulate"


def test_defaults_layer_sits_under_the_file(write_config):
    path = write_config({"experiment": "study-rip", "system": {"N": 4}})
    layer = {"system": {"N": 3, "d": 1}, "basis": {"preset": "rip_fourier"}}
    config = load_experiment_config(path, lambda name: layer if name == "study-rip" else {})
    assert (config.system.N, config.system.d) == (4, 1)
    assert config.basis.preset == "rip_fourier"


@pytest.mark.parametrize(
    "payload",
    [
        {"experiment": "simulate", "system": {"N": 6, "particles": 3}},
        {"experiment": "simulate", "system": {"N": 1}},
        {"experiment": "simulate", "system": {"init": {"kind": "uniform_box", "lo": 2.0, "hi": 1.0}}},
        {"experiment": "no-such-experiment"},
        {"seed": 3},
    ],
    ids=["unknown-key", "small-N", "empty-box", "unknown-experiment", "missing-experiment"],
)
def test_invalid_configurations_raise_config_error(write_config, payload):
    with pytest.raises(ConfigError):
        load_experiment_config(write_config(payload))


def test_empty_and_unparseable_files(tmp_path):
    empty = tmp_path / "empty.yaml"
    empty.write_text("   \n")
    with pytest.raises(ConfigError):
        read_config_mapping(empty)
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        read_config_mapping(broken)
    with pytest.raises(ConfigError):
        read_config_mapping(tmp_path / "missing.yaml")


def test_non_mapping_configuration_rejected():
    with pytest.raises(ConfigError):
        parse_experiment_config(["simulate"], "list.yaml")
    with pytest.raises(ConfigError):
        parse_experiment_config(None, "null.yaml")


def test_merge_defaults_is_recursive():
    defaults = {"system": {"N": 3, "d": 1}, "seed": 1}
    merged = merge_defaults(defaults, {"system": {"N": 5}, "kernel": {"preset": None}})
    assert merged == {"system": {"N": 5, "d": 1}, "seed": 1, "kernel": {"preset": None}}
    assert defaults == {"system": {"N": 3, "d": 1}, "seed": 1}


def test_regularizer_section_modes():
    config = parse_experiment_config(
        {"experiment": "fit-orals", "estimation": {"orals_regularizer": {"mode": "tikhonov_id", "lam": 1e-8}}}
    )
    assert config.estimation.orals_regularizer.lam == 1e-8
    with pytest.raises(ConfigError):
        parse_experiment_config({"experiment": "fit-als", "estimation": {"regularizer": {"mode": "ridge"}}})


def test_config_manager_update_and_save(tmp_path):
    path = tmp_path / "settings.json"
    manager = ConfigManager(config_file=path)
    manager.update_config(threads=3, log_level="debug")
    assert manager.config.threads == 3
    assert manager.config.log_level == "DEBUG"
    saved = json.loads(path.read_text())
    assert saved["threads"] == 3
    assert ConfigManager(config_file=path).config.threads == 3


def test_config_manager_rejects_invalid_settings(tmp_path):
    manager = ConfigManager(config_file=tmp_path / "settings.json")
    with pytest.raises(ConfigError):
        manager.update_config(threads=0)
    with pytest.raises(ConfigError):
        manager.update_config(log_level="loud")
