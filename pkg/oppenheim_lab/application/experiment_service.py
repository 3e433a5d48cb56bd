import logging
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2_contingency

from oppenheim_lab.domain.entities import (
    ChainPath,
    DistributionSpec,
    ExpansionFamily,
    ExperimentConfig,
    GoodSequence,
    RngStream,
    TrimTruncPlan,
)
from oppenheim_lab.domain.entities.reports import (
    BracketingReport,
    BracketingRow,
    ConcentrationRow,
    ConvergenceReport,
    IndependenceReport,
    StatisticRow,
)
from oppenheim_lab.domain.exceptions import ConfigError
from oppenheim_lab.domain.repositories import PathExecutor
from oppenheim_lab.domain.services.diagnostics_service import (
    counting_concentration_bound,
    truncation_concentration_bound,
)
from oppenheim_lab.domain.services.model_service import digit_masses
from oppenheim_lab.domain.services.sampler_service import sample_chain, sample_iid_x
from oppenheim_lab.domain.services.trimstats_service import breakdown, exact_moments, trimmed_sum
from oppenheim_lab.utils import n_log_n

logger = logging.getLogger(__name__)

# stream ids: iid paths use their path index, the other sources are shifted apart
CHAIN_STREAM_OFFSET = 1 << 32
MARGINAL_STREAM_OFFSET = 1 << 33
COMPARISON_STREAM_ID = 1 << 34

MARGINAL_BATCH = 5_000
TV_ATOMS = 50
MIN_EXPECTED_COUNT = 5.0
MAX_LAG_BINS = 20


@dataclass(frozen=True)
class PathTask:
    path_id: int
    seed: int
    source: str
    distribution: DistributionSpec
    sequence: GoodSequence
    family: ExpansionFamily
    plan: TrimTruncPlan
    n_grid: tuple[int, ...]
    max_chain_length: int
    max_digit_bits: int


@dataclass
class PathStatistics:
    """Per-grid-point sums of one path; arrays are indexed like ``n_grid``."""

    path_id: int
    source: str
    total: np.ndarray
    trimmed: np.ndarray
    truncated: np.ndarray
    exceed: np.ndarray
    geq: np.ndarray
    ratio_trimmed: np.ndarray | None = None


def draw_path(task: PathTask) -> tuple[np.ndarray, ChainPath | None]:
    """X_1..X_{max n} of one path, plus the chain it came from in chain mode."""
    n_max = task.n_grid[-1]
    if task.source == "chain":
        chain = sample_chain(
            task.family, task.distribution, task.sequence, n_max,
            RngStream(task.seed, CHAIN_STREAM_OFFSET + task.path_id),
            max_length=task.max_chain_length, max_digit_bits=task.max_digit_bits,
        )
        return chain.xs, chain
    values = sample_iid_x(task.distribution, task.sequence, n_max,
                          RngStream(task.seed, task.path_id))
    return values, None


def simulate_path(task: PathTask) -> PathStatistics:
    """Draw one path up to max n once and evaluate every grid prefix of it."""
    values, chain = draw_path(task)
    ratios = None if chain is None else chain.ratios

    size = len(task.n_grid)
    stats = PathStatistics(
        path_id=task.path_id,
        source=task.source,
        total=np.empty(size),
        trimmed=np.empty(size),
        truncated=np.empty(size),
        exceed=np.empty(size, dtype=np.int64),
        geq=np.empty(size, dtype=np.int64),
        ratio_trimmed=None if ratios is None else np.empty(size),
    )
    for i, n in enumerate(task.n_grid):
        parts = breakdown(values[:n], task.plan.r(n), task.plan.t(n))
        stats.total[i] = parts.total
        stats.trimmed[i] = parts.trimmed_sum
        stats.truncated[i] = parts.truncated_sum
        stats.exceed[i] = parts.exceed_count
        stats.geq[i] = parts.geq_count
        if ratios is not None:
            stats.ratio_trimmed[i] = trimmed_sum(ratios[:n], task.plan.r(n))
    return stats


@dataclass(frozen=True)
class MarginalBatch:
    seed: int
    start: int
    stop: int
    step: int
    distribution: DistributionSpec
    sequence: GoodSequence
    family: ExpansionFamily
    max_digit_bits: int


def sample_marginal_pairs(batch: MarginalBatch) -> np.ndarray:
    """(X_k, X_{k+1}) for the chains ``start..stop-1``, as a (count, 2) array."""
    out = np.empty((batch.stop - batch.start, 2))
    for row, path_id in enumerate(range(batch.start, batch.stop)):
        chain = sample_chain(
            batch.family, batch.distribution, batch.sequence, batch.step + 1,
            RngStream(batch.seed, MARGINAL_STREAM_OFFSET + path_id),
            max_length=batch.step + 1, max_digit_bits=batch.max_digit_bits,
        )
        out[row] = chain.xs[batch.step - 1], chain.xs[batch.step]
    return out


def _summarize(source: str, n: int, statistic: str, target: float | None,
               values: np.ndarray) -> StatisticRow:
    return StatisticRow(
        source=source,
        n=n,
        statistic=statistic,
        target=target,
        mean=float(np.mean(values)),
        median=float(np.median(values)),
        std=float(np.std(values)),
        min=float(np.min(values)),
        max=float(np.max(values)),
        paths=int(values.size),
    )


def _merge_atoms(masses: np.ndarray, minimum: float) -> list[np.ndarray]:
    """Group consecutive atoms so every group carries mass >= ``minimum``.

    The final group is open-ended (it also takes the tail beyond the last atom).
    """
    groups, current, mass = [], [], 0.0
    for s, p in enumerate(masses):
        current.append(s)
        mass += p
        if mass >= minimum:
            groups.append(np.array(current))
            current, mass = [], 0.0
    if current:
        if groups:
            groups[-1] = np.concatenate([groups[-1], current])
        else:
            groups.append(np.array(current))
    return groups


def _bin_codes(values: np.ndarray, seq: GoodSequence, groups: list[np.ndarray]) -> np.ndarray:
    """Group number of each value; atoms are positions 0.. of λ_1, λ_2, ..."""
    atom = np.asarray(seq.indices_above(values), dtype=np.int64) - 2
    edges = np.array([int(g[-1]) for g in groups[:-1]], dtype=np.int64)
    return np.searchsorted(edges, atom, side="left")


class ExperimentService:
    """Monte Carlo runs over the configured model; path statistics are computed once per source."""

    def __init__(self, config: ExperimentConfig, executor: PathExecutor):
        self.config = config
        self.executor = executor
        self._stats: dict[str, list[PathStatistics]] = {}
        self._moments = {
            n: exact_moments(n, config.plan.t(n), config.distribution, config.sequence)
            for n in config.n_grid
        }

    @property
    def sources(self) -> list[str]:
        sources = []
        if self.config.includes_iid:
            sources.append("iid")
        if self.config.includes_chain:
            sources.append("chain")
        return sources

    @property
    def alpha_gamma(self) -> float | None:
        alpha = self.config.distribution.alpha
        return None if alpha is None else alpha * self.config.plan.gamma

    def moments(self, n: int):
        return self._moments[n]

    def _tasks(self, source: str) -> list[PathTask]:
        cfg = self.config
        return [
            PathTask(
                path_id=path_id, seed=cfg.seed, source=source,
                distribution=cfg.distribution, sequence=cfg.sequence, family=cfg.family,
                plan=cfg.plan, n_grid=cfg.n_grid,
                max_chain_length=cfg.max_chain_length, max_digit_bits=cfg.max_digit_bits,
            )
            for path_id in range(cfg.paths)
        ]

    def iter_samples(self, source: str) -> Iterator[tuple[np.ndarray, ChainPath | None]]:
        """Raw paths one at a time in path order, from the streams the statistics use."""
        return self.executor.imap(draw_path, self._tasks(source))

    def path_statistics(self, source: str) -> list[PathStatistics]:
        if source not in self._stats:
            cfg = self.config
            tasks = self._tasks(source)
            logger.info("simulating %d %s paths up to n = %d", cfg.paths, source, cfg.n_max)
            results = self.executor.map(simulate_path, tasks)
            self._stats[source] = sorted(results, key=lambda stats: stats.path_id)
        return self._stats[source]

    def _column(self, source: str, attribute: str, index: int) -> np.ndarray:
        return np.array([getattr(stats, attribute)[index]
                         for stats in self.path_statistics(source)], dtype=np.float64)

    def run_trimmed_law(self) -> ConvergenceReport:
        cfg = self.config
        target = self.alpha_gamma
        report = ConvergenceReport(
            name="trimmed_law",
            targets={
                "trimmed_over_d": 1.0,
                "trimmed_deviation": 0.0,
                "trimmed_over_nlogn": target,
                "untrimmed_over_nlogn": 1.0,
                "exceed_over_a": 1.0,
            },
            notes={"gamma": cfg.plan.gamma, "beta": cfg.plan.beta, "eps": cfg.eps},
        )
        sandwich_violations = {}
        for source in self.sources:
            for i, n in enumerate(cfg.n_grid):
                moments = self.moments(n)
                norm = float(n_log_n(n))
                trimmed = self._column(source, "trimmed", i)
                truncated = self._column(source, "truncated", i)
                total = self._column(source, "total", i)
                exceed = self._column(source, "exceed", i)

                report.rows += [
                    _summarize(source, n, "trimmed_over_d", 1.0, trimmed / moments.d),
                    _summarize(source, n, "trimmed_deviation", 0.0,
                               np.abs(trimmed / moments.d - 1.0)),
                    _summarize(source, n, "trimmed_over_nlogn", target, trimmed / norm),
                    _summarize(source, n, "untrimmed_over_nlogn", 1.0, total / norm),
                    _summarize(source, n, "exceed_over_a", 1.0, exceed / moments.a),
                ]
                if source == "chain":
                    ratio_trimmed = self._column(source, "ratio_trimmed", i)
                    report.rows.append(_summarize(source, n, "ratio_trimmed_over_nlogn",
                                                  target, ratio_trimmed / norm))

                # 0 <= Z_n - S_n^r <= (r_n - (1 - ε)A_n)·t_n
                residual = truncated - trimmed
                upper = (cfg.plan.r(n) - (1.0 - cfg.eps) * moments.a) * moments.t
                slack = 1e-9 * np.maximum(1.0, np.abs(truncated))
                outside = (residual < -slack) | (residual > upper + slack)
                sandwich_violations[f"{source}:{n}"] = int(np.count_nonzero(outside))

        report.notes["sandwich_violations"] = sandwich_violations
        logger.info("trimmed law: %d rows over sources %s", len(report.rows), self.sources)
        return report

    def run_truncated_slln(self) -> ConvergenceReport:
        cfg = self.config
        report = ConvergenceReport(
            name="truncated_slln",
            targets={"truncated_over_d": 1.0, "truncated_deviation": 0.0},
            notes={"eps": cfg.eps},
        )
        for source in self.sources:
            for i, n in enumerate(cfg.n_grid):
                moments = self.moments(n)
                truncated = self._column(source, "truncated", i)
                ratio = truncated / moments.d
                report.rows += [
                    _summarize(source, n, "truncated_over_d", 1.0, ratio),
                    _summarize(source, n, "truncated_deviation", 0.0, np.abs(ratio - 1.0)),
                ]
                report.concentration.append(ConcentrationRow(
                    source=source,
                    n=n,
                    event="truncated",
                    eps=cfg.eps,
                    mass=moments.d,
                    frequency=float(np.mean(np.abs(truncated - moments.d) >= cfg.eps * moments.d)),
                    bound=truncation_concentration_bound(n, moments.t, moments.d, cfg.eps),
                ))
        return report

    def run_counting_concentration(self, eps: float | None = None) -> ConvergenceReport:
        """Exceedance counts against A_n and B̄_n, with the per-path count sandwiches."""
        cfg = self.config
        eps = cfg.eps if eps is None else eps
        if eps <= 0:
            raise ConfigError(f"eps must be positive, got {eps}")
        report = ConvergenceReport(
            name="counting_concentration",
            targets={"exceed_over_a": 1.0, "geq_over_bbar": 1.0},
            notes={"eps": eps},
        )
        sandwich, atom_violations = {}, {}
        for source in self.sources:
            for i, n in enumerate(cfg.n_grid):
                moments = self.moments(n)
                strict = self._column(source, "exceed", i)
                geq = self._column(source, "geq", i)
                report.rows += [
                    _summarize(source, n, "exceed_over_a", 1.0, strict / moments.a),
                    _summarize(source, n, "geq_over_bbar", 1.0, geq / moments.bbar),
                ]
                for event, counts, mass in (("strict", strict, moments.a),
                                            ("geq", geq, moments.bbar)):
                    report.concentration.append(ConcentrationRow(
                        source=source,
                        n=n,
                        event=event,
                        eps=eps,
                        mass=mass,
                        frequency=float(np.mean(np.abs(counts - mass) >= eps * mass)),
                        bound=counting_concentration_bound(mass, eps),
                    ))

                strict_ok = ((1 - eps) * moments.a <= strict) & (strict <= (1 + eps) * moments.a)
                geq_ok = ((1 - eps) * moments.bbar <= geq) & (geq <= (1 + eps) * moments.bbar)
                sandwich[f"{source}:{n}"] = float(np.mean(strict_ok & geq_ok))
                # both sandwiches force #{X_k = t_n} >= ⌊(1-ε)B̄_n⌋ - ⌈(1+ε)A_n⌉
                atom_floor = np.floor((1 - eps) * moments.bbar) - np.ceil((1 + eps) * moments.a)
                held = strict_ok & geq_ok
                atom_violations[f"{source}:{n}"] = int(
                    np.count_nonzero(held & (geq - strict < atom_floor)))

        report.notes["sandwich_fraction"] = sandwich
        report.notes["atom_count_violations"] = atom_violations
        return report

    def run_chain_bracketing(self) -> BracketingReport:
        """Compare trimmed sums of R and of its discretization X on every chain path."""
        cfg = self.config
        if not cfg.includes_chain:
            raise ConfigError("bracketing needs mode 'chain' or 'both'")
        ell = cfg.sequence.ell
        rows = []
        for i, n in enumerate(cfg.n_grid):
            gaps = np.abs(self._column("chain", "trimmed", i)
                          - self._column("chain", "ratio_trimmed", i))
            bound = ell * n
            normalized = gaps / float(n_log_n(n))
            normalized_bound = ell / float(np.log(n))
            rows.append(BracketingRow(
                n=n,
                max_gap=float(gaps.max()),
                bound=bound,
                max_normalized_gap=float(normalized.max()),
                normalized_bound=normalized_bound,
                violations=int(np.count_nonzero(gaps > bound * (1 + 1e-12))),
            ))
        return BracketingReport(rows=rows, ell=ell)

    def run_marginal_independence(self) -> IndependenceReport:
        """Law of X_k along sampled chains against digit_mass, lag-1 independence and iid agreement."""
        cfg = self.config
        if not cfg.includes_chain:
            raise ConfigError("marginal independence needs mode 'chain' or 'both'")
        step, paths = cfg.chain_step, cfg.chain_paths
        if step + 1 > cfg.max_chain_length:
            raise ConfigError(f"chain_step {step} exceeds max_chain_length {cfg.max_chain_length}")

        batches = [
            MarginalBatch(seed=cfg.seed, start=start, stop=min(start + MARGINAL_BATCH, paths),
                          step=step, distribution=cfg.distribution, sequence=cfg.sequence,
                          family=cfg.family, max_digit_bits=cfg.max_digit_bits)
            for start in range(0, paths, MARGINAL_BATCH)
        ]
        logger.info("sampling %d chains of length %d for the marginal law", paths, step + 1)
        pairs = np.concatenate(self.executor.map(sample_marginal_pairs, batches))
        current, following = pairs[:, 0], pairs[:, 1]

        seq, dist = cfg.sequence, cfg.distribution
        masses = digit_masses(TV_ATOMS, dist, seq)
        report = IndependenceReport(step=step, paths=paths,
                                    total_variation=_total_variation(current, masses, seq))

        lag_groups = _merge_atoms(masses, max(np.sqrt(MIN_EXPECTED_COUNT / paths),
                                              1.0 / MAX_LAG_BINS))
        if len(lag_groups) < 2:
            report.notices.append(
                f"lag-1 test skipped: {paths} paths leave fewer than 2 bins with "
                f"expected cell counts >= {MIN_EXPECTED_COUNT:g}")
        else:
            table = _contingency(_bin_codes(current, seq, lag_groups),
                                 _bin_codes(following, seq, lag_groups), len(lag_groups))
            result = chi2_contingency(table, correction=False)
            report.lag_chi2 = float(result.statistic)
            report.lag_p_value = float(result.pvalue)
            report.lag_dof = int(result.dof)

        comparison = sample_iid_x(dist, seq, paths, RngStream(cfg.seed, COMPARISON_STREAM_ID))
        groups = _merge_atoms(masses, MIN_EXPECTED_COUNT / paths)
        if len(groups) < 2:
            report.notices.append("two-sample test skipped: fewer than 2 bins")
        else:
            table = np.vstack([
                np.bincount(_bin_codes(current, seq, groups), minlength=len(groups)),
                np.bincount(_bin_codes(comparison, seq, groups), minlength=len(groups)),
            ])
            # drop bins that no sample reached
            table = table[:, table.sum(axis=0) > 0]
            if table.shape[1] < 2:
                report.notices.append("two-sample test skipped: observations fill one bin")
            else:
                result = chi2_contingency(table, correction=False)
                report.two_sample_chi2 = float(result.statistic)
                report.two_sample_p_value = float(result.pvalue)

        for notice in report.notices:
            logger.warning(notice)
        return report


def _total_variation(values: np.ndarray, masses: np.ndarray, seq: GoodSequence) -> float:
    """TV distance on the atoms λ_1..λ_K plus one tail bin."""
    atoms = masses.size
    atom = np.asarray(seq.indices_above(values), dtype=np.int64) - 2
    counts = np.bincount(np.minimum(atom, atoms), minlength=atoms + 1)[: atoms + 1]
    empirical = counts / values.size
    model = np.append(masses, max(0.0, 1.0 - float(masses.sum())))
    return 0.5 * float(np.abs(empirical - model).sum())


def _contingency(first: np.ndarray, second: np.ndarray, bins: int) -> np.ndarray:
    table = np.zeros((bins, bins), dtype=np.int64)
    np.add.at(table, (first, second), 1)
    # an all-zero row or column makes the expected table singular
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    return table
