"""Command-line entry point: ``oppenheim-lab <command> [options]``."""

import itertools
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import click

from oppenheim_lab import __version__
from oppenheim_lab.application.verification_service import raise_on_failure
from oppenheim_lab.domain.entities import ExperimentConfig
from oppenheim_lab.domain.entities.reports import AcceptanceCheck, ConvergenceReport
from oppenheim_lab.domain.exceptions import AcceptanceError, ConfigError
from oppenheim_lab.domain.exceptions.global_handler_exceptions import (
    EXIT_CONFIG,
    EXIT_OK,
    handle_exception,
    register_exception_handlers,
)
from oppenheim_lab.domain.repositories import ReportRepository
from oppenheim_lab.domain.services.diagnostics_service import (
    assumption_report,
    d_log_constant,
    normalizer_trend,
    summability_check,
)
from oppenheim_lab.infrastructure.config import LabSettings, parse_value
from oppenheim_lab.infrastructure.dependencies import (
    get_experiment_config,
    get_experiment_service,
    get_settings,
    get_uow_reports,
    get_verification_service,
)
from oppenheim_lab.infrastructure.repositories import FilesystemReportRepository
from oppenheim_lab.utils import render_table

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
REPORT_HEADER = ["seed", "report", "source", "n", "statistic", "target",
                 "mean", "median", "std", "min", "max", "paths"]
ASSUMPTION_HEADER = ["seed", "n", "ratio1", "ratio2", "summand1", "summand2",
                     "partial_sum1", "partial_sum2"]
SUMMARY_COLUMNS = ["report", "source", "n", "statistic", "target", "median", "mean", "std"]


def run_options(fn):
    """Options shared by every command that runs the model."""
    options = [
        click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
                     help="JSON config; defaults to $OPPENHEIM_LAB_CONFIG or the packaged one."),
        click.option("--seed", type=int, default=None, help="Unsigned 64-bit master seed."),
        click.option("--paths", type=int, default=None, help="Number of Monte Carlo paths M."),
        click.option("--nmax", type=int, default=None,
                     help="Largest n; grid points above it are dropped and N is appended."),
        click.option("--workers", type=int, default=None,
                     help="Worker processes (default: available CPUs)."),
        click.option("--out", "out_dir", type=click.Path(path_type=Path),
                     default=Path("reports"), show_default=True, help="Output directory."),
        click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                     help="Dotted config override, repeatable."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def resolve(config_path, overrides, seed, paths, nmax, workers) -> tuple[LabSettings,
                                                                          ExperimentConfig]:
    flags = list(overrides)
    if seed is not None:
        flags.append(f"experiment.seed={seed}")
    if paths is not None:
        flags.append(f"experiment.paths={paths}")
    if workers is not None:
        flags.append(f"experiment.workers={workers}")
    settings = get_settings(config_path, flags)
    if nmax is not None:
        if nmax < 2:
            raise ConfigError(f"--nmax must be >= 2, got {nmax}")
        settings.experiment.n_grid = [n for n in settings.experiment.n_grid if n < nmax] + [nmax]
    return settings, get_experiment_config(settings)


def _report_rows(seed: int, reports: list[ConvergenceReport]) -> list[dict]:
    return [{"seed": seed, "report": report.name, **asdict(row)}
            for report in reports for row in report.rows]


def _summary_text(config: ExperimentConfig, rows: list[dict],
                  checks: list[AcceptanceCheck]) -> str:
    def cell(value):
        return f"{value:.6g}" if isinstance(value, float) else ("" if value is None else str(value))

    lines = [
        f"seed: {config.seed}",
        f"model: F={config.distribution.kind} seq={config.sequence.kind} "
        f"family={config.family.kind}",
        f"plan: gamma={config.plan.gamma} beta={config.plan.beta:.6g} paths={config.paths}",
        "",
        render_table([{column: cell(row[column]) for column in SUMMARY_COLUMNS} for row in rows],
                     SUMMARY_COLUMNS),
        "acceptance:",
    ]
    lines += [f"  [{'PASS' if check.passed else 'FAIL'}] {check.name}: observed "
              f"{cell(check.observed)}; {check.threshold}" for check in checks]
    return "\n".join(lines) + "\n"


def run_verification(settings: LabSettings, config: ExperimentConfig,
                     reports: ReportRepository, prefix: str = "") -> list[AcceptanceCheck]:
    """Run the verification experiments and write report.csv/json, summary.txt, assumptions.csv."""
    service = get_experiment_service(config, settings.experiment.workers)
    verification = get_verification_service(config, settings)

    trimmed = service.run_trimmed_law()
    truncated = service.run_truncated_slln()
    counting = service.run_counting_concentration()
    assumptions = assumption_report(config.distribution, config.sequence, config.plan,
                                    config.n_grid, eps0=config.eps0, c=config.summability_c)
    checks = verification.evaluate(trimmed, truncated, counting)

    document = {
        "config": config.echo,
        "seed": config.seed,
        "reports": {report.name: report.to_dict() for report in (trimmed, truncated, counting)},
        "assumptions": assumptions.to_dict(),
    }
    if config.includes_chain:
        bracketing = service.run_chain_bracketing()
        independence = service.run_marginal_independence()
        checks.append(AcceptanceCheck(
            name="chain_bracketing",
            passed=bracketing.violations == 0,
            observed=float(bracketing.violations),
            threshold="|trimmed sum of R - trimmed sum of X| <= ell n on every path",
        ))
        checks += verification.evaluate_independence(independence)
        document["bracketing"] = bracketing.to_dict()
        document["independence"] = independence.to_dict()
    document["acceptance"] = [asdict(check) for check in checks]
    document["passed"] = all(check.passed for check in checks)

    rows = _report_rows(config.seed, [trimmed, truncated, counting])
    reports.write_table(f"{prefix}report.csv", REPORT_HEADER, rows)
    reports.write_document(f"{prefix}report.json", document)
    reports.write_table(f"{prefix}assumptions.csv", ASSUMPTION_HEADER,
                        [{"seed": config.seed, **record} for record in assumptions.to_records()])
    reports.write_text(f"{prefix}summary.txt", _summary_text(config, rows, checks))
    return checks


@click.group()
@click.version_option(__version__, prog_name="oppenheim-lab")
@click.option("--log-level", default="INFO", show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
def cli(log_level: str):
    """Simulate and verify trimmed-sum laws for Oppenheim expansions."""
    logging.basicConfig(level=log_level.upper(), format=LOG_FORMAT, force=True)


@cli.command()
@run_options
def simulate(config_path, seed, paths, nmax, workers, out_dir, overrides):
    """Dump raw sampled paths as CSV."""
    settings, config = resolve(config_path, overrides, seed, paths, nmax, workers)
    service = get_experiment_service(config, settings.experiment.workers)
    with get_uow_reports(out_dir) as uow:
        for source in service.sources:
            for path_id, (values, chain) in enumerate(service.iter_samples(source)):
                if chain is None:
                    uow.samples.add_iid(path_id, values)
                else:
                    uow.samples.add_chain(path_id, chain)
        written = uow.samples.flush()
        uow.reports.write_document("simulate.json", {
            "config": config.echo,
            "seed": config.seed,
            "files": [path.name for path in written],
        })
    click.echo(f"wrote {', '.join(path.name for path in written)} to {out_dir}")


@cli.command()
@run_options
def verify(config_path, seed, paths, nmax, workers, out_dir, overrides):
    """Run the limit-law experiments and check them against their tolerances."""
    settings, config = resolve(config_path, overrides, seed, paths, nmax, workers)
    with get_uow_reports(out_dir) as uow:
        checks = run_verification(settings, config, uow.reports)
    for check in checks:
        click.echo(f"[{'PASS' if check.passed else 'FAIL'}] {check.name}")
    raise_on_failure(checks)


@cli.command()
@run_options
@click.option("--grid", "grid", multiple=True, required=True, metavar="KEY=V1,V2,...",
              help="Config key and the values to sweep, repeatable; runs the cartesian product.")
def sweep(config_path, seed, paths, nmax, workers, out_dir, overrides, grid):
    """Run verify once per assignment of the swept keys."""
    axes = []
    for item in grid:
        key, sep, raw = item.partition("=")
        if not sep or not raw:
            raise ConfigError(f"--grid must look like key=v1,v2, got {item!r}")
        axes.append([(key.strip(), parse_value(value.strip())) for value in raw.split(",")])

    manifest = []
    with get_uow_reports(out_dir) as uow:
        for index, assignment in enumerate(itertools.product(*axes)):
            run = f"run_{index:03d}"
            run_overrides = [*overrides, *(f"{key}={json.dumps(value)}" for key, value in assignment)]
            settings, config = resolve(config_path, run_overrides, seed, paths, nmax, workers)
            logger.info("sweep %s: %s", run, dict(assignment))
            checks = run_verification(settings, config, uow.reports, prefix=f"{run}/")
            alpha = config.distribution.alpha
            manifest.append({
                "run": run,
                "assignment": dict(assignment),
                "beta": config.plan.beta,
                "target_alpha_gamma": None if alpha is None else alpha * config.plan.gamma,
                "seed": config.seed,
                "passed": all(check.passed for check in checks),
            })
        uow.reports.write_document("manifest.json", {"runs": manifest})
    for entry in manifest:
        click.echo(f"{entry['run']}: {entry['assignment']} "
                   f"target={entry['target_alpha_gamma']} passed={entry['passed']}")


@cli.command("identity-check")
@run_options
def identity_check(config_path, seed, paths, nmax, workers, out_dir, overrides):
    """Deterministic identities, oracle agreement and φ bounds; no Monte Carlo."""
    settings, config = resolve(config_path, overrides, seed, paths, nmax, workers)
    report = get_verification_service(config, settings).identity_check()
    with get_uow_reports(out_dir) as uow:
        uow.reports.write_document("identity_check.json",
                                   {"config": config.echo, "seed": config.seed, **report.to_dict()})
    for check in report.checks:
        click.echo(f"[{'PASS' if check.passed else 'FAIL'}] {check.name}")
    if not report.passed:
        raise AcceptanceError("deterministic identity checks failed")


@cli.command()
@run_options
def diagnostics(config_path, seed, paths, nmax, workers, out_dir, overrides):
    """Evaluate the trimming hypotheses and normalizer growth on the grid."""
    settings, config = resolve(config_path, overrides, seed, paths, nmax, workers)
    dist, seq, plan = config.distribution, config.sequence, config.plan
    assumptions = assumption_report(dist, seq, plan, config.n_grid, eps0=config.eps0,
                                    c=config.summability_c)
    summability = summability_check(dist, seq, plan.gamma, config.summability_c, config.n_max)
    trend = normalizer_trend(dist, seq, plan.gamma, config.n_grid)
    log_constant = d_log_constant(dist, seq, [(n, plan.t(n)) for n in config.n_grid])
    with get_uow_reports(out_dir) as uow:
        uow.reports.write_table("diagnostics.csv", ASSUMPTION_HEADER,
                                [{"seed": config.seed, **record}
                                 for record in assumptions.to_records()])
        uow.reports.write_document("diagnostics.json", {
            "config": config.echo,
            "seed": config.seed,
            "assumptions": assumptions.to_dict(),
            "summability": summability.to_dict(),
            "normalizer": [asdict(row) for row in trend],
            "d_log_constant": log_constant,
        })
    click.echo(f"max A_n t_n / d_n = {assumptions.ratio1_max:.6g}")
    click.echo(f"d_n >= {log_constant:.6g} n log t_n on the grid")
    for certificate in summability.certificates:
        click.echo(f"{certificate.name}: {certificate.status}")


@cli.command()
@click.argument("path", type=click.Path(path_type=Path))
@click.option("--columns", default=None, help="Comma-separated columns to show.")
def report(path: Path, columns: str | None):
    """Render a CSV report as a text table."""
    if not path.is_file():
        raise ConfigError(f"report file not found: {path}")
    rows = FilesystemReportRepository(path.parent).read_table(path)
    selected = [column.strip() for column in columns.split(",")] if columns else None
    if selected and rows:
        unknown = [column for column in selected if column not in rows[0]]
        if unknown:
            raise ConfigError(f"unknown columns {unknown}; available: {list(rows[0])}")
    click.echo(render_table(rows, selected), nl=False)


def main(argv: list[str] | None = None) -> int:
    register_exception_handlers()
    try:
        result = cli.main(args=argv, prog_name="oppenheim-lab", standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return EXIT_CONFIG
    except click.Abort:
        return EXIT_CONFIG
    except Exception as exc:
        return handle_exception(exc)
    return result if isinstance(result, int) else EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
