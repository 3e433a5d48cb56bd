"""Acceptance-scale Monte Carlo runs on the packaged configuration.

These take minutes; deselect them with ``-m 'not slow'``.
"""

import pytest

from oppenheim_lab.application import ExperimentService, VerificationService
from oppenheim_lab.application.verification_service import TV_TOLERANCE
from oppenheim_lab.domain.services.diagnostics_service import normalizer_trend
from oppenheim_lab.infrastructure.config import (
    build_acceptance,
    build_experiment_config,
    load_settings,
)
from oppenheim_lab.infrastructure.workers import make_executor

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def default_run():
    settings = load_settings()
    config = build_experiment_config(settings)
    service = ExperimentService(config, make_executor(None))
    verification = VerificationService(config, build_acceptance(settings))
    trimmed = service.run_trimmed_law()
    truncated = service.run_truncated_slln()
    counting = service.run_counting_concentration()
    checks = {check.name: check for check in verification.evaluate(trimmed, truncated, counting)}
    return trimmed, truncated, counting, checks


def test_truncated_sum_tracks_its_mean(default_run):
    _, truncated, _, checks = default_run
    assert checks["truncated_slln"].passed
    assert truncated.row(1_000_000, "truncated_deviation").median <= 0.05


def test_trimmed_sum_tracks_its_normalizer(default_run):
    trimmed, _, _, checks = default_run
    assert checks["trimmed_law_d"].passed
    assert (trimmed.row(1_000_000, "trimmed_deviation").median
            < trimmed.row(10_000, "trimmed_deviation").median)


def test_trimmed_sum_over_n_log_n(default_run):
    trimmed, _, _, checks = default_run
    assert checks["trimmed_law_nlogn"].passed
    assert trimmed.row(1_000_000, "trimmed_over_nlogn").median == pytest.approx(0.4, rel=0.15)


def test_untrimmed_weak_law(default_run):
    _, _, _, checks = default_run
    assert checks["untrimmed_weak_law"].passed


def test_counting_concentration_stays_under_the_bound(default_run):
    _, _, counting, checks = default_run
    assert checks["counting_concentration"].passed
    assert set(counting.notes["atom_count_violations"].values()) == {0}


def test_quadratic_normalizer_moves_toward_alpha_gamma(quadratic, integers):
    rows = normalizer_trend(quadratic, integers, 0.4, [1_000, 10_000, 100_000, 1_000_000])
    deviations = [row.deviation for row in rows]
    assert all(b < a for a, b in zip(deviations, deviations[1:], strict=False))


def test_counting_frequency_at_ten_thousand():
    settings = load_settings(overrides=["experiment.n_grid=[10000]", "experiment.paths=1000"])
    config = build_experiment_config(settings)
    report = ExperimentService(config, make_executor(None)).run_counting_concentration()
    for row in report.concentration:
        assert row.frequency <= row.bound


def test_engel_chain_marginals():
    settings = load_settings(overrides=['experiment.mode="chain"', "experiment.n_grid=[100]",
                                        "experiment.paths=1"])
    config = build_experiment_config(settings)
    report = ExperimentService(config, make_executor(None)).run_marginal_independence()
    assert report.paths == 200_000
    assert report.step == 5
    assert report.total_variation <= TV_TOLERANCE
    assert report.lag_p_value is not None
    assert 0.001 <= report.lag_p_value <= 0.999
    assert report.two_sample_p_value >= 1e-3
