import json

import pytest

from scenebench.config import CONFIG_ENV, RunConfig, load_file, resolve
from scenebench.errors import SchemaError


@pytest.fixture(autouse=True)
def no_env_config(monkeypatch):
    monkeypatch.delenv(CONFIG_ENV, raising=False)


def write(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_defaults():
    config = resolve({})
    assert config.suites == ("sod", "sas", "gcg")
    assert config.levels == ("easy", "general", "complex")
    assert (config.seeds, config.trials, config.noise) == (20, 10, (0.0,))
    assert config.agent == "oracle"
    assert config.feedback and not config.per_episode_noise


def test_file_then_flags(tmp_path):
    path = write(tmp_path, {"trials": 3, "noise": [0.05], "agent": "claude", "tau": 0.6})
    config = resolve({"trials": 1, "agent": None}, path)
    assert config.trials == 1
    assert config.noise == (0.05,)
    assert config.agent == "claude"
    assert config.extraction().inside_threshold == 0.6


def test_environment_names_the_file(tmp_path, monkeypatch):
    monkeypatch.setenv(CONFIG_ENV, write(tmp_path, {"seeds": 2}))
    assert resolve({}).seeds == 2
    assert resolve({}, write(tmp_path, {"seeds": 4}, "other.json")).seeds == 4


def test_unknown_keys():
    with pytest.raises(SchemaError) as info:
        resolve({"trails": 3})
    assert "trails" in info.value.message


@pytest.mark.parametrize(
    "doc",
    [{"noise": [1.5]}, {"suites": ["xyz"]}, {"weights": [1, 1]}, {"trials": 0}, {"tau": 0}, {"noise_mode": "shuffle"}],
)
def test_invalid_values(tmp_path, doc):
    with pytest.raises(SchemaError):
        load_file(write(tmp_path, doc))


def test_unreadable_file(tmp_path):
    with pytest.raises(SchemaError):
        load_file(tmp_path / "missing.json")
    path = tmp_path / "broken.json"
    path.write_text("{trials: 3}")
    with pytest.raises(SchemaError) as info:
        load_file(path)
    assert "line 1" in info.value.message


def test_reward_weights():
    weights = RunConfig(weights=(1.0, 0.5, 2.0), alpha=0.25, beta=3.0).reward_weights()
    assert (weights.step, weights.grounding, weights.termination) == (1.0, 0.5, 2.0)
    assert (weights.alpha, weights.beta) == (0.25, 3.0)


def test_document_round_trip():
    config = RunConfig(suites=("sod",), noise=(0.0, 0.1), parallel=2)
    assert RunConfig.from_document(config.to_document()) == config


def test_direct_construction_is_validated():
    with pytest.raises(SchemaError):
        RunConfig(parallel=0)
