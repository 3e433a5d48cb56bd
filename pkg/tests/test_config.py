import json

import pytest

from oppenheim_lab.domain.entities import ExpansionFamily
from oppenheim_lab.domain.exceptions import ConfigError, ModelError
from oppenheim_lab.infrastructure import config as config_module
from oppenheim_lab.infrastructure.config import (
    CONFIG_ENV,
    SequenceSettings,
    apply_overrides,
    build_experiment_config,
    build_sequence,
    load_settings,
    parse_value,
)


def test_packaged_default():
    settings = load_settings()
    assert settings.distribution.kind == "identity"
    assert settings.sequence.kind == "integers"
    assert settings.family.kind == "engel"
    assert settings.plan.gamma == 0.4
    assert settings.plan.beta == "auto"
    assert settings.experiment.n_grid == [1_000, 10_000, 100_000, 1_000_000]
    assert settings.experiment.paths == 50


def test_auto_beta_is_resolved_over_the_grid():
    config = build_experiment_config(load_settings())
    # sup of n^0.4 / floor(n^0.4) on [10^3, 10^6] sits at n = 1023
    assert config.plan.beta == pytest.approx(1.1 * 1023**0.4 / 15.0, rel=1e-9)
    assert config.echo["plan"]["beta"] == config.plan.beta
    assert config.n_max == 1_000_000


@pytest.mark.parametrize(
    ("raw", "expected"),
    [("3", 3), ("0.5", 0.5), ("[1, 2]", [1, 2]), ("chain", "chain"), ('"auto"', "auto")],
)
def test_parse_value(raw, expected):
    assert parse_value(raw) == expected


def test_dotted_overrides():
    data = apply_overrides({"plan": {"gamma": 0.4}}, ["plan.gamma=0.3", "experiment.paths=3"])
    assert data == {"plan": {"gamma": 0.3}, "experiment": {"paths": 3}}


@pytest.mark.parametrize("override", ["no-equals-sign", "=3", "plan.gamma.deep=1"])
def test_malformed_overrides(override):
    with pytest.raises(ConfigError):
        apply_overrides({"plan": {"gamma": 0.4}}, [override])


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigError, match="invalid configuration"):
        load_settings(overrides=["experiment.pathz=3"])


def test_out_of_range_values_are_rejected():
    with pytest.raises(ConfigError):
        load_settings(overrides=["experiment.paths=0"])


def test_config_file_and_environment(tmp_path, monkeypatch):
    path = tmp_path / "lab.json"
    path.write_text(json.dumps({"plan": {"gamma": 0.3, "beta": 2.5}}), encoding="utf-8")
    assert load_settings(path).plan.beta == 2.5
    monkeypatch.setenv(CONFIG_ENV, str(path))
    settings = load_settings()
    assert settings.plan.gamma == 0.3
    assert settings.experiment.paths == 50


def test_missing_and_broken_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_settings(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_settings(broken)


def test_sequence_kinds():
    assert build_sequence(SequenceSettings(kind="scaled", params={"scale": 3})).ell == 3.0
    with pytest.raises(ConfigError):
        build_sequence(SequenceSettings(kind="integers", params={"scale": 2}))
    with pytest.raises(ConfigError):
        build_sequence(SequenceSettings(kind="scaled", params={"width": 2}))


def test_family_takes_no_params():
    with pytest.raises(ConfigError, match="takes no params"):
        build_experiment_config(load_settings(overrides=['family.params={"a": 1}']))


def test_explicit_beta_and_quadratic_model():
    settings = load_settings(overrides=[
        'distribution.kind="quadratic"', "plan.beta=3.0", "experiment.n_grid=[200,400]",
    ])
    config = build_experiment_config(settings)
    assert config.plan.beta == 3.0
    assert config.distribution.alpha == 0.5


def test_blend_parameters_are_checked():
    settings = load_settings(overrides=['distribution.kind="blend"',
                                        'distribution.params={"weight": 2.0}'])
    with pytest.raises(ConfigError):
        build_experiment_config(settings)


def test_plan_grid_conflict_is_a_config_error():
    settings = load_settings(overrides=["plan.beta=50", "experiment.n_grid=[10,100]"])
    with pytest.raises(ConfigError):
        build_experiment_config(settings)


def test_fractional_family_is_a_model_error(monkeypatch):
    monkeypatch.setattr(config_module, "build_family",
                        lambda settings: ExpansionFamily(lambda n, h: h / 2))
    with pytest.raises(ModelError):
        build_experiment_config(load_settings(overrides=["experiment.n_grid=[200,400]"]))
