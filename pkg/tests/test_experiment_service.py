import numpy as np
import pytest

from oppenheim_lab.application import ExperimentService
from oppenheim_lab.application.experiment_service import draw_path, simulate_path
from oppenheim_lab.domain.exceptions import ConfigError
from oppenheim_lab.domain.services.trimstats_service import breakdown
from oppenheim_lab.infrastructure.workers import (
    ProcessPoolPathExecutor,
    SerialPathExecutor,
    make_executor,
)

STATISTICS = ("total", "trimmed", "truncated", "exceed", "geq")


@pytest.fixture
def service(small_config):
    return ExperimentService(small_config, SerialPathExecutor())


@pytest.fixture
def chain_service(chain_config):
    return ExperimentService(chain_config, SerialPathExecutor())


def test_grid_prefixes_come_from_one_draw(service):
    task = service._tasks("iid")[2]
    values, chain = draw_path(task)
    stats = simulate_path(task)
    assert chain is None
    assert values.size == 100
    for i, n in enumerate(task.n_grid):
        parts = breakdown(values[:n], task.plan.r(n), task.plan.t(n))
        assert stats.trimmed[i] == parts.trimmed_sum
        assert stats.exceed[i] == parts.exceed_count


def test_trimmed_law_rows(service):
    report = service.run_trimmed_law()
    assert report.targets["trimmed_over_nlogn"] == pytest.approx(0.4)
    row = report.row(100, "trimmed_over_d")
    assert row.paths == 4
    assert row.min <= row.median <= row.max
    assert report.row(100, "trimmed_deviation").min >= 0.0
    assert set(report.notes["sandwich_violations"]) == {"iid:50", "iid:100"}
    with pytest.raises(KeyError):
        report.row(100, "trimmed_over_d", "chain")


def test_trimming_past_the_exceedances_stays_below_the_truncated_sum(service, small_config):
    for stats in service.path_statistics("iid"):
        for i, n in enumerate(small_config.n_grid):
            if stats.exceed[i] <= small_config.plan.r(n):
                assert stats.trimmed[i] <= stats.truncated[i]


def test_truncated_slln_concentration_rows(service, small_config):
    report = service.run_truncated_slln()
    assert len(report.concentration) == len(small_config.n_grid)
    for row in report.concentration:
        assert row.event == "truncated"
        assert 0.0 <= row.frequency <= 1.0
        assert 0.0 < row.bound <= 1.0


def test_counting_concentration(service):
    report = service.run_counting_concentration()
    events = {(row.event, row.n) for row in report.concentration}
    assert events == {("strict", 50), ("geq", 50), ("strict", 100), ("geq", 100)}
    assert report.row(100, "geq_over_bbar").paths == 4
    assert set(report.notes["atom_count_violations"].values()) == {0}


def test_counting_concentration_with_huge_eps_never_fires(service):
    report = service.run_counting_concentration(eps=1e9)
    assert all(row.frequency == 0.0 for row in report.concentration)
    assert set(report.notes["sandwich_fraction"].values()) == {1.0}


def test_counting_concentration_rejects_bad_eps(service):
    with pytest.raises(ConfigError):
        service.run_counting_concentration(eps=0.0)


def test_single_path_report_is_well_formed(config_factory):
    service = ExperimentService(config_factory(paths=1), SerialPathExecutor())
    report = service.run_truncated_slln()
    row = report.row(100, "truncated_over_d")
    assert row.paths == 1
    assert row.std == 0.0
    assert row.mean == row.median == row.min == row.max


def test_statistics_are_cached(service):
    assert service.path_statistics("iid") is service.path_statistics("iid")


def test_results_do_not_depend_on_worker_count(small_config):
    serial = ExperimentService(small_config, SerialPathExecutor()).path_statistics("iid")
    pooled = ExperimentService(small_config, ProcessPoolPathExecutor(2)).path_statistics("iid")
    assert [stats.path_id for stats in pooled] == list(range(small_config.paths))
    for first, second in zip(serial, pooled, strict=True):
        for name in STATISTICS:
            assert np.array_equal(getattr(first, name), getattr(second, name))


def test_make_executor():
    assert isinstance(make_executor(1), SerialPathExecutor)
    assert isinstance(make_executor(3), ProcessPoolPathExecutor)


def test_seed_changes_the_paths(config_factory):
    first = ExperimentService(config_factory(seed=1), SerialPathExecutor())
    second = ExperimentService(config_factory(seed=2), SerialPathExecutor())
    assert not np.array_equal(first.path_statistics("iid")[0].total,
                              second.path_statistics("iid")[0].total)


def test_both_sources_report_side_by_side(chain_service):
    assert chain_service.sources == ["iid", "chain"]
    report = chain_service.run_trimmed_law()
    assert report.row(100, "trimmed_over_d", "iid").paths == 4
    assert report.row(100, "ratio_trimmed_over_nlogn", "chain").paths == 4
    assert set(report.notes["sandwich_violations"]) == {"iid:50", "iid:100",
                                                        "chain:50", "chain:100"}


def test_chain_bracketing_holds(chain_service):
    report = chain_service.run_chain_bracketing()
    assert report.violations == 0
    assert [row.n for row in report.rows] == [50, 100]
    for row in report.rows:
        assert row.max_gap <= row.bound


def test_chain_operations_need_chain_mode(service):
    with pytest.raises(ConfigError):
        service.run_chain_bracketing()
    with pytest.raises(ConfigError):
        service.run_marginal_independence()


def test_marginal_independence(chain_service):
    report = chain_service.run_marginal_independence()
    assert report.paths == 200
    assert report.step == 3
    assert 0.0 <= report.total_variation <= 1.0
    assert report.lag_p_value is not None
    assert 0.0 <= report.lag_p_value <= 1.0
    assert report.two_sample_p_value is not None


def test_marginal_independence_skips_tests_with_few_paths(config_factory):
    service = ExperimentService(config_factory(mode="chain", chain_paths=10), SerialPathExecutor())
    report = service.run_marginal_independence()
    assert report.lag_p_value is None
    assert any(notice.startswith("lag-1 test skipped") for notice in report.notices)


def test_chain_grid_above_the_length_cap_is_rejected(config_factory):
    with pytest.raises(ConfigError, match="chain mode"):
        config_factory(mode="chain", max_chain_length=80)


def test_imap_streams_in_task_order(small_config):
    tasks = ExperimentService(small_config, SerialPathExecutor())._tasks("iid")
    lazy = SerialPathExecutor().imap(draw_path, tasks)
    assert not isinstance(lazy, list)
    pooled = list(ProcessPoolPathExecutor(2).imap(draw_path, tasks))
    assert len(pooled) == small_config.paths
    for task, (values, chain), (expected, _) in zip(tasks, pooled, lazy, strict=True):
        assert chain is None
        assert np.array_equal(values, expected)
        assert values.size == task.n_grid[-1]


def test_iter_samples_matches_the_statistics_streams(service):
    stats = service.path_statistics("iid")
    for path_id, (values, _) in enumerate(service.iter_samples("iid")):
        assert stats[path_id].total[-1] == pytest.approx(values.sum())
