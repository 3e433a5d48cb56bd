import pytest

from oppenheim_lab.domain.entities import (
    DistributionSpec,
    ExpansionFamily,
    ExperimentConfig,
    ScaledIntegerSequence,
    TrimTruncPlan,
)
from oppenheim_lab.infrastructure.config import CONFIG_ENV


@pytest.fixture(autouse=True)
def packaged_config(monkeypatch):
    monkeypatch.delenv(CONFIG_ENV, raising=False)


@pytest.fixture
def identity():
    return DistributionSpec.identity()


@pytest.fixture
def quadratic():
    return DistributionSpec.quadratic()


@pytest.fixture
def integers():
    return ScaledIntegerSequence(1)


@pytest.fixture
def evens():
    return ScaledIntegerSequence(2)


@pytest.fixture
def engel():
    return ExpansionFamily.engel()


@pytest.fixture
def luroth():
    return ExpansionFamily.luroth_type()


def make_config(mode: str = "iid_X", paths: int = 4, seed: int = 7, **overrides) -> ExperimentConfig:
    options = {
        "distribution": DistributionSpec.identity(),
        "sequence": ScaledIntegerSequence(1),
        "family": ExpansionFamily.engel(),
        "plan": TrimTruncPlan(gamma=0.4, beta=2.0),
        "n_grid": (50, 100),
        "paths": paths,
        "seed": seed,
        "mode": mode,
        "chain_paths": 200,
        "chain_step": 3,
    }
    options.update(overrides)
    return ExperimentConfig(**options)


@pytest.fixture
def small_config():
    return make_config()


@pytest.fixture
def chain_config():
    return make_config(mode="both")


@pytest.fixture
def config_factory():
    return make_config
