"""Acceptance evaluation of experiment reports and the deterministic identity suite."""

import logging
import math
from dataclasses import dataclass

import numpy as np

from oppenheim_lab.domain.entities import (
    DistributionSpec,
    ExperimentConfig,
    RngStream,
    ScaledIntegerSequence,
)
from oppenheim_lab.domain.entities.reports import (
    AcceptanceCheck,
    ConvergenceReport,
    IdentityCheckReport,
    IndependenceReport,
)
from oppenheim_lab.domain.entities.rng_stream import open_uniforms
from oppenheim_lab.domain.exceptions import AcceptanceError
from oppenheim_lab.domain.services.diagnostics_service import d_log_constant, phi_bounds_check
from oppenheim_lab.domain.services.trimstats_service import (
    exact_a,
    exact_bbar,
    exact_d,
    exceed_counts,
    residual_bound_check,
    residual_identity,
    trimmed_sum,
)
from oppenheim_lab.utils import log_spaced, relative_difference

logger = logging.getLogger(__name__)

IDENTITY_VECTORS = 1000
IDENTITY_MAX_N = 1000
IDENTITY_VALUE_CAP = 10**9
ORACLE_NS = (1, 10, 100)
ORACLE_TS = (3.0, 10.0, 100.0)
PHI_POINTS = 10_000
PHI_U_MAX = 1e7
PHI_EPS = 0.01
TV_TOLERANCE = 0.01
LAG_P_BAND = (0.001, 0.999)
TWO_SAMPLE_LEVEL = 1e-3


@dataclass(frozen=True)
class AcceptanceSettings:
    d_tolerance: float = 0.05
    nlogn_tolerance: float = 0.15
    weak_law_band: tuple[float, float] = (0.8, 1.25)
    comparison_n: int = 10_000


class VerificationService:
    def __init__(self, config: ExperimentConfig, settings: AcceptanceSettings | None = None):
        self.config = config
        self.settings = settings or AcceptanceSettings()

    def _source(self, report: ConvergenceReport) -> str:
        return "iid" if any(row.source == "iid" for row in report.rows) else "chain"

    def evaluate(self, trimmed: ConvergenceReport, truncated: ConvergenceReport,
                 counting: ConvergenceReport | None = None) -> list[AcceptanceCheck]:
        """Tolerance and trend checks at the largest grid point."""
        cfg, settings = self.config, self.settings
        n = cfg.n_max
        source = self._source(trimmed)
        checks = []

        deviation = truncated.row(n, "truncated_deviation", source).median
        checks.append(AcceptanceCheck(
            name="truncated_slln",
            passed=deviation <= settings.d_tolerance,
            observed=deviation,
            threshold=f"median |Z_n/d_n - 1| <= {settings.d_tolerance} at n = {n}",
        ))

        deviation = trimmed.row(n, "trimmed_deviation", source).median
        passed = deviation <= settings.d_tolerance
        detail = ""
        earlier = settings.comparison_n
        if earlier in cfg.n_grid and earlier < n:
            previous = trimmed.row(earlier, "trimmed_deviation", source).median
            passed = passed and deviation < previous
            detail = f"median deviation at n = {earlier}: {previous:.6g}"
        checks.append(AcceptanceCheck(
            name="trimmed_law_d",
            passed=passed,
            observed=deviation,
            threshold=f"median |S_n/d_n - 1| <= {settings.d_tolerance}, shrinking along n",
            detail=detail,
        ))

        target = trimmed.targets.get("trimmed_over_nlogn")
        if target is not None:
            median = trimmed.row(n, "trimmed_over_nlogn", source).median
            checks.append(AcceptanceCheck(
                name="trimmed_law_nlogn",
                passed=abs(median - target) <= settings.nlogn_tolerance * target,
                observed=median,
                threshold=f"within {settings.nlogn_tolerance:.0%} of alpha*gamma = {target:.6g}",
            ))

        low, high = settings.weak_law_band
        median = trimmed.row(n, "untrimmed_over_nlogn", source).median
        checks.append(AcceptanceCheck(
            name="untrimmed_weak_law",
            passed=low <= median <= high,
            observed=median,
            threshold=f"median S_n/(n log n) in [{low}, {high}]",
        ))

        if counting is not None:
            strict = [row for row in counting.concentration
                      if row.event == "strict" and row.source == source]
            worst = max(strict, key=lambda row: row.frequency - row.bound)
            checks.append(AcceptanceCheck(
                name="counting_concentration",
                passed=all(row.frequency <= row.bound for row in strict),
                observed=worst.frequency,
                threshold="empirical frequency <= exp(-3 eps^2 A_n / (6 + 4 eps)) at every n",
                detail=f"n = {worst.n}, bound {worst.bound:.3g}",
            ))

        for check in checks:
            log = logger.info if check.passed else logger.warning
            log("%s: %s (observed %s)", check.name, "pass" if check.passed else "FAIL",
                check.observed)
        return checks

    def evaluate_independence(self, report: IndependenceReport) -> list[AcceptanceCheck]:
        """Marginal law, lag-1 and chain-vs-iid checks; skipped tests are not counted."""
        checks = [AcceptanceCheck(
            name="marginal_total_variation",
            passed=report.total_variation <= TV_TOLERANCE,
            observed=report.total_variation,
            threshold=f"TV <= {TV_TOLERANCE} at step {report.step}",
        )]
        low, high = LAG_P_BAND
        if report.lag_p_value is not None:
            checks.append(AcceptanceCheck(
                name="lag_independence",
                passed=low <= report.lag_p_value <= high,
                observed=report.lag_p_value,
                threshold=f"chi-square p in [{low}, {high}]",
            ))
        if report.two_sample_p_value is not None:
            checks.append(AcceptanceCheck(
                name="chain_vs_iid",
                passed=report.two_sample_p_value >= TWO_SAMPLE_LEVEL,
                observed=report.two_sample_p_value,
                threshold=f"not rejected at {TWO_SAMPLE_LEVEL}",
            ))
        return checks

    def identity_check(self) -> IdentityCheckReport:
        """Deterministic checks: no Monte Carlo, fixed internal seed for the test vectors."""
        report = IdentityCheckReport()
        report.checks.append(self._residual_identity_suite())
        report.checks += self._oracle_matrix()
        report.checks += self._phi_bounds()
        report.checks.append(self._schedule_recheck())
        return report

    def _residual_identity_suite(self) -> AcceptanceCheck:
        generator = RngStream(seed=0, stream_id=0).generator()
        mismatches = bound_failures = order_failures = 0
        for _ in range(IDENTITY_VECTORS):
            n = int(generator.integers(1, IDENTITY_MAX_N + 1))
            # Pareto-like integers, capped so every partial sum stays exact in float64
            values = np.minimum(np.floor(1.0 / open_uniforms(generator, n)), IDENTITY_VALUE_CAP)
            r = int(generator.integers(0, n + 1))
            t = float(values[int(generator.integers(0, n))])
            lhs, rhs = residual_identity(values, r, t)
            mismatches += lhs != rhs
            if trimmed_sum(values, r) != float(np.sort(values)[: n - r].sum()):
                order_failures += 1
            if r >= exceed_counts(values, t)[0] and not residual_bound_check(values, r, t):
                bound_failures += 1
        failures = mismatches + bound_failures + order_failures
        return AcceptanceCheck(
            name="residual_identity",
            passed=failures == 0,
            observed=float(failures),
            threshold=f"exact on {IDENTITY_VECTORS} integer vectors",
            detail=(f"identity mismatches {mismatches}, sort-oracle mismatches "
                    f"{order_failures}, residual bound failures {bound_failures}"),
        )

    def _oracle_matrix(self) -> list[AcceptanceCheck]:
        identity, integers = DistributionSpec.identity(), ScaledIntegerSequence(1)
        checks = [
            AcceptanceCheck(
                name="exact_d_hand_values",
                passed=(relative_difference(exact_d(1, 3.0, identity, integers), 1.5) <= 1e-12
                        and relative_difference(
                            exact_d(1, 3.0, DistributionSpec.quadratic(), integers),
                            1.25 + 3.0 * (3.0 / 8.0 - 2.0 / 9.0)) <= 1e-12),
                observed=exact_d(1, 3.0, identity, integers),
                threshold="d(1, 3) = 1.5 for identity F on the integers",
            )
        ]

        # exact_d raises ConsistencyError itself when its two forms disagree
        log_constant = math.inf
        lower_failures = order_failures = 0
        for dist in (DistributionSpec.identity(), DistributionSpec.quadratic()):
            for seq in (ScaledIntegerSequence(1), ScaledIntegerSequence(2)):
                for n in ORACLE_NS:
                    for t in ORACLE_TS:
                        d = exact_d(n, t, dist, seq)
                        floor = n * (dist.c1 * seq.phi(t) + seq.value(1) - dist.c2)
                        if d < floor - 1e-12 * max(1.0, abs(floor)):
                            lower_failures += 1
                        if exact_a(n, t, dist, seq) > exact_bbar(n, t, dist, seq):
                            order_failures += 1
                log_constant = min(log_constant, d_log_constant(
                    dist, seq, [(n, t) for n in ORACLE_NS for t in ORACLE_TS]))
        checks.append(AcceptanceCheck(
            name="exact_d_lower_bound",
            passed=lower_failures == 0,
            observed=float(lower_failures),
            threshold="d_n >= n (C1 phi(t) + lambda_1 - C2) on the oracle matrix",
        ))
        checks.append(AcceptanceCheck(
            name="exact_d_log_growth",
            passed=log_constant > 0.0,
            observed=log_constant,
            threshold="d_n >= c n log t with c > 0 on the oracle matrix",
        ))
        checks.append(AcceptanceCheck(
            name="exceedance_ordering",
            passed=order_failures == 0,
            observed=float(order_failures),
            threshold="A_n <= Bbar_n on the oracle matrix",
        ))
        return checks

    def _phi_bounds(self) -> list[AcceptanceCheck]:
        checks = []
        for scale in (1, 2):
            seq = ScaledIntegerSequence(scale)
            # lower-bound violations raise ModelError
            report = phi_bounds_check(seq, log_spaced(seq.value(2), PHI_U_MAX, PHI_POINTS),
                                      eps=PHI_EPS)
            checks.append(AcceptanceCheck(
                name=f"phi_bounds_scale_{scale}",
                passed=report.lower_violations == 0 and report.u0_far is not None,
                observed=report.u0_far,
                threshold=f"lower bound everywhere; upper bound (eps = {PHI_EPS}) from a finite U0",
                detail=f"upper bound holds on the grid from {report.u0}",
            ))
        return checks

    def _schedule_recheck(self) -> AcceptanceCheck:
        cfg = self.config
        short = [
            n for n in cfg.n_grid
            if cfg.plan.r(n) < (1.0 + cfg.eps0) * exact_a(n, cfg.plan.t(n), cfg.distribution,
                                                          cfg.sequence)
        ]
        return AcceptanceCheck(
            name="trimming_schedule",
            passed=not short,
            observed=float(len(short)),
            threshold=f"r_n >= (1 + {cfg.eps0}) A_n on the grid (beta = {cfg.plan.beta:.6g})",
            detail=f"short at n = {short}" if short else "",
        )


def raise_on_failure(checks: list[AcceptanceCheck]) -> None:
    failed = [check.name for check in checks if not check.passed]
    if failed:
        raise AcceptanceError(f"acceptance checks failed: {', '.join(failed)}")
