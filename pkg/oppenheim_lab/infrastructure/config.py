import json
import logging
import os
from importlib import resources
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from oppenheim_lab.application.verification_service import AcceptanceSettings
from oppenheim_lab.domain.entities import (
    DistributionSpec,
    ExpansionFamily,
    ExperimentConfig,
    ScaledIntegerSequence,
    TrimTruncPlan,
)
from oppenheim_lab.domain.exceptions import ConfigError, ModelError
from oppenheim_lab.domain.services.trimstats_service import choose_beta

logger = logging.getLogger(__name__)

CONFIG_ENV = "OPPENHEIM_LAB_CONFIG"
DEFAULT_CONFIG = "default.json"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DistributionSettings(_Strict):
    kind: Literal["identity", "quadratic", "blend"] = "identity"
    params: dict[str, float] = Field(default_factory=dict)


class SequenceSettings(_Strict):
    kind: Literal["integers", "scaled"] = "integers"
    params: dict[str, int] = Field(default_factory=dict)


class FamilySettings(_Strict):
    kind: Literal["engel", "luroth-type"] = "engel"
    params: dict[str, float] = Field(default_factory=dict)


class PlanSettings(_Strict):
    gamma: float = 0.4
    beta: float | Literal["auto"] = "auto"
    eps0: float = Field(0.1, gt=0)
    margin: float = Field(1.0, ge=1)


class ExperimentSettings(_Strict):
    n_grid: list[int] = Field(default_factory=lambda: [1_000, 10_000, 100_000, 1_000_000])
    paths: int = Field(50, ge=1)
    seed: int = Field(20_240_601, ge=0, lt=1 << 64)
    mode: Literal["iid_X", "chain", "both"] = "iid_X"
    workers: int | None = Field(None, ge=1)
    max_chain_length: int = Field(1000, ge=1)
    max_digit_bits: int = Field(1 << 20, ge=1)
    chain_paths: int = Field(200_000, ge=1)
    chain_step: int = Field(5, ge=1)
    eps: float = Field(0.5, gt=0)
    summability_c: float = Field(0.01, ge=0)


class AcceptanceSchema(_Strict):
    d_tolerance: float = Field(0.05, gt=0)
    nlogn_tolerance: float = Field(0.15, gt=0)
    weak_law_band: tuple[float, float] = (0.8, 1.25)
    comparison_n: int = 10_000


class LabSettings(_Strict):
    distribution: DistributionSettings = Field(default_factory=DistributionSettings)
    sequence: SequenceSettings = Field(default_factory=SequenceSettings)
    family: FamilySettings = Field(default_factory=FamilySettings)
    plan: PlanSettings = Field(default_factory=PlanSettings)
    experiment: ExperimentSettings = Field(default_factory=ExperimentSettings)
    acceptance: AcceptanceSchema = Field(default_factory=AcceptanceSchema)


def parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply dotted ``key=value`` assignments; values are parsed as JSON when possible."""
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        *parents, leaf = key.strip().split(".")
        node = data
        for part in parents:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"override {key!r}: {part!r} is not a section")
            node = child
        node[leaf] = parse_value(raw.strip())
    return data


def read_config_data(path: Path | str | None = None) -> dict:
    """Raw config: ``path``, else $OPPENHEIM_LAB_CONFIG, else the packaged default."""
    path = path or os.getenv(CONFIG_ENV)
    if path is None:
        text = resources.files("oppenheim_lab.configs").joinpath(DEFAULT_CONFIG).read_text("utf-8")
        source = f"packaged {DEFAULT_CONFIG}"
    else:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text(encoding="utf-8")
        source = str(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{source} must hold a JSON object")
    logger.debug("config read from %s", source)
    return data


def load_settings(path: Path | str | None = None, overrides: list[str] | None = None) -> LabSettings:
    data = apply_overrides(read_config_data(path), list(overrides or []))
    try:
        return LabSettings.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration:\n{exc}") from exc


def build_distribution(settings: DistributionSettings) -> DistributionSpec:
    params = dict(settings.params)
    if settings.kind == "identity":
        built = DistributionSpec.identity()
    elif settings.kind == "quadratic":
        built = DistributionSpec.quadratic()
    else:
        built = DistributionSpec.blend(weight=params.pop("weight", 0.5),
                                       power=params.pop("power", 2.0))
    if params:
        raise ConfigError(f"distribution {settings.kind!r} takes no params {sorted(params)}")
    return built


def build_sequence(settings: SequenceSettings) -> ScaledIntegerSequence:
    params = dict(settings.params)
    scale = params.pop("scale", 1)
    if params:
        raise ConfigError(f"sequence {settings.kind!r} takes no params {sorted(params)}")
    if settings.kind == "integers" and scale != 1:
        raise ConfigError("sequence 'integers' has scale 1; use kind 'scaled'")
    return ScaledIntegerSequence(scale)


def build_family(settings: FamilySettings) -> ExpansionFamily:
    if settings.params:
        raise ConfigError(f"family {settings.kind!r} takes no params")
    return ExpansionFamily.engel() if settings.kind == "engel" else ExpansionFamily.luroth_type()


def resolve_beta(settings: LabSettings, distribution: DistributionSpec,
                 sequence: ScaledIntegerSequence) -> float:
    plan = settings.plan
    if plan.beta != "auto":
        return float(plan.beta)
    grid = settings.experiment.n_grid
    if not grid:
        raise ConfigError("n_grid must not be empty")
    if not (0 < plan.gamma < 0.5):
        raise ConfigError(f"gamma must lie in (0, 1/2), got {plan.gamma}")
    beta = choose_beta(distribution, sequence, plan.gamma, max(grid), eps0=plan.eps0,
                       margin=plan.margin, n_min=max(1, min(grid)))
    logger.info("beta resolved to %.6g over n in [%d, %d]", beta, min(grid), max(grid))
    return beta


def build_experiment_config(settings: LabSettings) -> ExperimentConfig:
    try:
        distribution = build_distribution(settings.distribution)
        sequence = build_sequence(settings.sequence)
        family = build_family(settings.family)
    except ModelError as exc:
        raise ConfigError(str(exc)) from exc

    distribution.validate()
    sequence.check_prefix()
    if not family.satisfies_integrality(sequence):
        raise ModelError(f"family {family.kind!r} breaks the integrality hypothesis on {sequence.kind}")

    beta = resolve_beta(settings, distribution, sequence)
    echo = settings.model_dump(mode="json")
    echo["plan"]["beta"] = beta
    experiment = settings.experiment
    return ExperimentConfig(
        distribution=distribution,
        sequence=sequence,
        family=family,
        plan=TrimTruncPlan(gamma=settings.plan.gamma, beta=beta),
        n_grid=tuple(experiment.n_grid),
        paths=experiment.paths,
        seed=experiment.seed,
        mode=experiment.mode,
        max_chain_length=experiment.max_chain_length,
        max_digit_bits=experiment.max_digit_bits,
        chain_paths=experiment.chain_paths,
        chain_step=experiment.chain_step,
        eps=experiment.eps,
        eps0=settings.plan.eps0,
        summability_c=experiment.summability_c,
        echo=echo,
    )


def build_acceptance(settings: LabSettings) -> AcceptanceSettings:
    schema = settings.acceptance
    return AcceptanceSettings(
        d_tolerance=schema.d_tolerance,
        nlogn_tolerance=schema.nlogn_tolerance,
        weak_law_band=tuple(schema.weak_law_band),
        comparison_n=schema.comparison_n,
    )
