from contextlib import contextmanager
from pathlib import Path

from oppenheim_lab.application import ExperimentService, VerificationService
from oppenheim_lab.domain.entities import ExperimentConfig
from oppenheim_lab.infrastructure.config import (
    LabSettings,
    build_acceptance,
    build_experiment_config,
    load_settings,
)
from oppenheim_lab.infrastructure.uow import ReportUnitOfWork
from oppenheim_lab.infrastructure.workers import make_executor


def get_settings(config_path: Path | str | None, overrides: list[str]) -> LabSettings:
    return load_settings(config_path, overrides)


def get_experiment_config(settings: LabSettings) -> ExperimentConfig:
    return build_experiment_config(settings)


def get_experiment_service(config: ExperimentConfig, workers: int | None) -> ExperimentService:
    return ExperimentService(config, make_executor(workers))


def get_verification_service(config: ExperimentConfig,
                             settings: LabSettings) -> VerificationService:
    return VerificationService(config, build_acceptance(settings))


@contextmanager
def get_uow_reports(out_dir: Path | str):
    with ReportUnitOfWork(out_dir) as uow:
        yield uow
