"""Config file parsing, env overrides, and unknown-key rejection."""

import json

import pytest

from inklabel.config import AppConfig, load_config
from inklabel.errors import ConfigError
from inklabel.morphology import Close, Smooth


def _write(tmp_path, payload) -> str:
    p = tmp_path / "config.json"
    p.write_text(json.dumps(payload) if not isinstance(payload, str) else payload)
    return str(p)


def test_defaults_without_file():
    cfg = load_config(env={})
    assert cfg.service.port == 8077
    assert cfg.service.host == "127.0.0.1"
    assert cfg.pipeline.threshold.method == "otsu"
    assert len(cfg.pipeline.recipe) == 1
    step = cfg.pipeline.recipe[0]
    assert isinstance(step, Close)
    assert (step.se.width, step.se.height) == (15, 3)
    assert cfg.pipeline.epsilon == 1.0


def test_file_values_applied(tmp_path):
    path = _write(tmp_path, {
        "pipeline": {
            "threshold": {"method": "global", "t": 100},
            "invert": True,
            "recipe": [{"op": "smooth", "run_h": 30, "run_v": 40, "combined": True}],
            "epsilon": 2.5,
            "labels": [{"name": "text", "color": "#FF0000"}, {"name": "logo"}],
            "label_map": {"1": "text", "*": "logo"},
            "output_dir": "out",
        },
        "service": {"port": 9000, "snapshot_dir": "snaps", "session_timeout_s": 5},
    })
    cfg = load_config(path, env={})
    assert cfg.pipeline.threshold.method == "global"
    assert cfg.pipeline.threshold.t == 100
    assert cfg.pipeline.invert is True
    assert cfg.pipeline.recipe == [Smooth(30, 40, True)]
    assert cfg.pipeline.epsilon == 2.5
    assert cfg.pipeline.labels == [{"name": "text", "color": "#FF0000"}, {"name": "logo"}]
    assert cfg.pipeline.label_map == {"1": "text", "*": "logo"}
    assert cfg.service.port == 9000
    assert cfg.service.snapshot_dir == "snaps"
    assert cfg.service.session_timeout_s == 5.0


def test_env_overrides_file(tmp_path):
    path = _write(tmp_path, {"service": {"port": 9000}})
    env = {
        "INKLABEL_SERVICE_PORT": "9100",
        "INKLABEL_PIPELINE_EPSILON": "0.5",
        "INKLABEL_SERVICE_HOST": "0.0.0.0",
        "UNRELATED": "ignored",
    }
    cfg = load_config(path, env=env)
    assert cfg.service.port == 9100
    assert cfg.pipeline.epsilon == 0.5
    assert cfg.service.host == "0.0.0.0"


def test_env_json_parse_falls_back_to_string():
    cfg = load_config(env={"INKLABEL_SERVICE_SNAPSHOT_DIR": "plain/dir"})
    assert cfg.service.snapshot_dir == "plain/dir"


def test_env_compound_key():
    cfg = load_config(env={"INKLABEL_SERVICE_MAX_UPLOAD_MB": "8"})
    assert cfg.service.max_upload_mb == 8


def test_unknown_env_section_rejected():
    with pytest.raises(ConfigError):
        load_config(env={"INKLABEL_OTHER_PORT": "1"})


def test_unknown_section_rejected(tmp_path):
    path = _write(tmp_path, {"pipelines": {}})
    with pytest.raises(ConfigError) as err:
        load_config(path, env={})
    assert "pipelines" in str(err.value)


def test_unknown_pipeline_key_rejected(tmp_path):
    path = _write(tmp_path, {"pipeline": {"treshold": {"method": "otsu"}}})
    with pytest.raises(ConfigError) as err:
        load_config(path, env={})
    assert "treshold" in str(err.value)


def test_unknown_service_key_rejected(tmp_path):
    path = _write(tmp_path, {"service": {"prot": 1}})
    with pytest.raises(ConfigError):
        load_config(path, env={})


def test_unknown_threshold_key_rejected(tmp_path):
    path = _write(tmp_path, {"pipeline": {"threshold": {"method": "otsu", "tt": 4}}})
    with pytest.raises(ConfigError):
        load_config(path, env={})


def test_unknown_recipe_key_rejected(tmp_path):
    path = _write(tmp_path, {"pipeline": {"recipe": [
        {"op": "close", "shape": "rect", "width": 3, "height": 3, "mode": "x"}
    ]}})
    with pytest.raises(ConfigError):
        load_config(path, env={})


def test_unknown_label_key_rejected(tmp_path):
    path = _write(tmp_path, {"pipeline": {"labels": [{"name": "a", "hue": 1}]}})
    with pytest.raises(ConfigError):
        load_config(path, env={})


def test_bad_label_map_key_rejected(tmp_path):
    path = _write(tmp_path, {"pipeline": {"label_map": {"first": "text"}}})
    with pytest.raises(ConfigError):
        load_config(path, env={})


def test_value_type_checks(tmp_path):
    for payload in (
        {"service": {"port": "9000"}},
        {"service": {"port": 0}},
        {"service": {"worker_threads": 0}},
        {"pipeline": {"epsilon": -1}},
        {"pipeline": {"invert": "yes"}},
    ):
        with pytest.raises(ConfigError):
            load_config(_write(tmp_path, payload), env={})


def test_missing_file_and_bad_json(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json", env={})
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "{not json"), env={})
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[1, 2]"), env={})


def test_to_json_round_trip(tmp_path):
    cfg = AppConfig()
    path = _write(tmp_path, cfg.to_json())
    again = load_config(path, env={})
    assert again.to_json() == cfg.to_json()
