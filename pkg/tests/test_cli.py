import json

import pytest
from click.testing import CliRunner

from oppenheim_lab import __version__
from oppenheim_lab.cli import REPORT_HEADER, cli, main
from oppenheim_lab.domain.exceptions import ConfigError
from oppenheim_lab.infrastructure.repositories import FilesystemReportRepository

SMALL_RUN = ["--paths", "4", "--workers", "1", "--set", "experiment.n_grid=[200,400]"]


def _run(*args) -> int:
    return main(["--log-level", "WARNING", *args])


def test_version():
    result = CliRunner().invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_identity_check_exits_zero(tmp_path):
    out = tmp_path / "identity"
    assert _run("identity-check", "--out", str(out)) == 0
    document = json.loads((out / "identity_check.json").read_text(encoding="utf-8"))
    assert document["passed"] is True
    assert document["seed"] == 20_240_601
    assert document["config"]["plan"]["beta"] == pytest.approx(1.1 * 1023**0.4 / 15.0)


def test_verify_writes_every_report(tmp_path):
    out = tmp_path / "verify"
    assert _run("verify", *SMALL_RUN, "--out", str(out)) in (0, 2)
    for name in ("report.csv", "report.json", "summary.txt", "assumptions.csv"):
        assert (out / name).is_file()
    rows = FilesystemReportRepository(out).read_table(out / "report.csv")
    assert list(rows[0]) == REPORT_HEADER
    assert {row["n"] for row in rows} == {"200", "400"}
    document = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert set(document["reports"]) == {"trimmed_law", "truncated_slln", "counting_concentration"}
    assert "acceptance:" in (out / "summary.txt").read_text(encoding="utf-8")


def test_verify_failure_exits_two(tmp_path):
    out = tmp_path / "strict"
    code = _run("verify", *SMALL_RUN, "--set", "acceptance.d_tolerance=1e-12", "--out", str(out))
    assert code == 2
    document = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert document["passed"] is False


def test_verify_is_byte_reproducible_across_worker_counts(tmp_path):
    outputs = []
    for index, workers in enumerate(("1", "1", "2")):
        out = tmp_path / f"run{index}"
        _run("verify", "--seed", "99", "--paths", "4", "--workers", workers,
             "--set", "experiment.n_grid=[200,400]", "--out", str(out))
        outputs.append(((out / "report.csv").read_bytes(), (out / "assumptions.csv").read_bytes()))
    assert outputs[0] == outputs[1] == outputs[2]


def test_seed_flag_changes_the_report(tmp_path):
    reports = []
    for seed in ("1", "2"):
        out = tmp_path / seed
        _run("verify", *SMALL_RUN, "--seed", seed, "--out", str(out))
        reports.append((out / "report.csv").read_bytes())
    assert reports[0] != reports[1]


def test_verify_in_chain_mode(tmp_path):
    out = tmp_path / "chain"
    code = _run("verify", *SMALL_RUN, "--set", 'experiment.mode="chain"',
                "--set", "experiment.chain_paths=300", "--out", str(out))
    assert code in (0, 2)
    document = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert document["bracketing"]["rows"][0]["violations"] == 0
    assert document["independence"]["paths"] == 300
    names = [check["name"] for check in document["acceptance"]]
    assert "chain_bracketing" in names
    assert "marginal_total_variation" in names


@pytest.mark.parametrize(
    "args",
    [
        ("verify", "--set", "experiment.bogus=1"),
        ("verify", "--config", "does-not-exist.json"),
        ("verify", "--paths", "many"),
        ("verify", "--set", "plan.gamma=0.7"),
        ("sweep", "--grid", "plan.gamma"),
        ("report", "missing.csv"),
    ],
)
def test_configuration_errors_exit_one(tmp_path, monkeypatch, args):
    monkeypatch.chdir(tmp_path)
    assert _run(*args) == 1


def test_failed_run_leaves_the_output_directory_untouched(tmp_path):
    out = tmp_path / "untouched"
    out.mkdir()
    (out / "keep.txt").write_text("old", encoding="utf-8")
    _run("verify", *SMALL_RUN, "--set", "acceptance.d_tolerance=1e-12", "--out", str(out))
    assert (out / "keep.txt").read_text(encoding="utf-8") == "old"
    _run("diagnostics", "--set", "plan.beta=1e-9", "--set", "experiment.n_grid=[1000]",
         "--out", str(out))
    assert not (out / "diagnostics.json").exists()
    assert not [path for path in tmp_path.iterdir() if path.name.startswith(".untouched-")]


def test_sweep_writes_one_run_per_assignment(tmp_path):
    out = tmp_path / "sweep"
    code = _run("sweep", *SMALL_RUN, "--grid", "distribution.kind=identity,quadratic",
                "--out", str(out))
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    runs = manifest["runs"]
    assert [run["run"] for run in runs] == ["run_000", "run_001"]
    assert [run["assignment"] for run in runs] == [{"distribution.kind": "identity"},
                                                   {"distribution.kind": "quadratic"}]
    assert [run["target_alpha_gamma"] for run in runs] == pytest.approx([0.4, 0.2])
    for run in runs:
        assert (out / run["run"] / "report.csv").is_file()


def test_sweep_over_two_keys(tmp_path):
    out = tmp_path / "sweep2"
    code = _run("sweep", *SMALL_RUN, "--grid", "plan.gamma=0.3,0.4",
                "--grid", "experiment.seed=1,2", "--out", str(out))
    assert code == 0
    runs = json.loads((out / "manifest.json").read_text(encoding="utf-8"))["runs"]
    assert len(runs) == 4
    assert [run["seed"] for run in runs] == [1, 2, 1, 2]


def test_diagnostics(tmp_path):
    out = tmp_path / "diag"
    assert _run("diagnostics", "--out", str(out)) == 0
    document = json.loads((out / "diagnostics.json").read_text(encoding="utf-8"))
    statuses = {cert["status"] for cert in document["summability"]["certificates"]}
    assert statuses == {"convergent"}
    assert document["assumptions"]["ratio1_max"] < 0.5
    assert document["d_log_constant"] > 0.0
    assert [row["n"] for row in document["normalizer"]] == [1_000, 10_000, 100_000, 1_000_000]
    assert (out / "diagnostics.csv").is_file()


def test_simulate_dumps_samples(tmp_path):
    out = tmp_path / "samples"
    code = _run("simulate", "--paths", "2", "--workers", "1",
                "--set", "experiment.n_grid=[50,100]", "--out", str(out))
    assert code == 0
    lines = (out / "iid_samples.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "path_id,step,value,ratio,digit,next_digit"
    assert lines[1].endswith(",,,")
    assert len(lines) == 1 + 2 * 100
    assert json.loads((out / "simulate.json").read_text(encoding="utf-8"))["files"] == [
        "iid_samples.csv"]


def test_report_renders_a_table(tmp_path):
    path = FilesystemReportRepository(tmp_path).write_table(
        "report.csv", ["n", "statistic", "median"],
        [{"n": 1000, "statistic": "trimmed_over_d", "median": 0.98},
         {"n": 10000, "statistic": "trimmed_over_d", "median": 0.99}],
    )
    result = CliRunner().invoke(cli, ["report", str(path), "--columns", "n,median"])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0].split() == ["n", "median"]
    assert set(lines[1]) <= {"-", " "}
    assert lines[2].split() == ["1000", "0.98"]
    assert "statistic" not in result.output


def test_report_rejects_unknown_columns(tmp_path):
    path = FilesystemReportRepository(tmp_path).write_table("r.csv", ["n"], [{"n": 1}])
    result = CliRunner().invoke(cli, ["report", str(path), "--columns", "nope"])
    assert isinstance(result.exception, ConfigError)


def test_simulate_chain_dump_carries_the_digits(tmp_path):
    out = tmp_path / "chains"
    code = _run("simulate", "--paths", "2", "--workers", "2", "--set", 'experiment.mode="chain"',
                "--set", "experiment.n_grid=[50,100]", "--out", str(out))
    assert code == 0
    rows = FilesystemReportRepository(out).read_table(out / "chain_samples.csv")
    assert len(rows) == 2 * 100
    assert not (out / "iid_samples.csv").exists()
    for row, following in zip(rows, rows[1:], strict=False):
        digit, next_digit = int(row["digit"]), int(row["next_digit"])
        # Engel digits never decrease and R = B_{k+1} / B_k
        assert next_digit >= digit
        assert float(row["ratio"]) == pytest.approx(next_digit / digit)
        if following["path_id"] == row["path_id"]:
            assert int(following["step"]) == int(row["step"]) + 1
            assert int(following["digit"]) == next_digit
