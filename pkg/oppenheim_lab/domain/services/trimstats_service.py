"""Trimming/truncation arithmetic and the exact moments A_n, B̄_n, d_n."""

import logging

import numpy as np

from oppenheim_lab.domain.entities.distribution import DistributionSpec
from oppenheim_lab.domain.entities.good_sequence import GoodSequence
from oppenheim_lab.domain.entities.trimmed_sum import ExactMoments, TrimmedSumBreakdown
from oppenheim_lab.domain.exceptions import ConsistencyError, InputError, SkipSignal
from oppenheim_lab.utils import compensated_sum, relative_difference

logger = logging.getLogger(__name__)

SELECTION_THRESHOLD = 100_000
ORACLE_RTOL = 1e-12
_BETA_CHUNK = 1_000_000


def _as_values(values) -> np.ndarray:
    return np.asarray(values, dtype=np.float64).ravel()


def _check_r(r: int, n: int) -> None:
    if r < 0 or r > n:
        raise InputError(f"trimming count r = {r} must lie in [0, {n}]")


def trim_order(values) -> np.ndarray:
    """Permutation σ with X_σ(1) >= X_σ(2) >= ...; ties keep the lower index first."""
    return np.argsort(-_as_values(values), kind="stable")


def split_top(values, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Split into (r largest, remaining) as multisets."""
    values = _as_values(values)
    n = values.size
    _check_r(r, n)
    if r == 0:
        return values[:0], values
    if r == n:
        return values, values[:0]
    if n >= SELECTION_THRESHOLD:
        part = np.partition(values, n - r)
        return part[n - r:], part[: n - r]
    order = trim_order(values)
    return values[order[:r]], values[order[r:]]


def trimmed_sum(values, r: int) -> float:
    """S_n^r: the sum left after removing the r largest values."""
    _, rest = split_top(values, r)
    return compensated_sum(rest)


def truncated_sum(values, t: float) -> float:
    """Z_n: sum of the values <= t (inclusive threshold)."""
    values = _as_values(values)
    return compensated_sum(values[values <= t])


def exceed_counts(values, t: float) -> tuple[int, int]:
    """(#{X_k > t}, #{X_k >= t})."""
    values = _as_values(values)
    return int(np.count_nonzero(values > t)), int(np.count_nonzero(values >= t))


def breakdown(values, r: int, t: float) -> TrimmedSumBreakdown:
    values = _as_values(values)
    top, rest = split_top(values, r)
    strict, geq = exceed_counts(values, t)
    return TrimmedSumBreakdown(
        total=compensated_sum(values),
        trimmed_sum=compensated_sum(rest),
        truncated_sum=compensated_sum(values[values <= t]),
        exceed_count=strict,
        geq_count=geq,
        top_r_sum=compensated_sum(top),
        over_threshold_sum=compensated_sum(values[values > t]),
    )


def residual_identity(values, r: int, t: float) -> tuple[float, float]:
    """Both sides of Z_n - S_n^r = Σ_{k<=r} X_σ(k) - Σ X_k 1{X_k > t}."""
    parts = breakdown(values, r, t)
    lhs = parts.truncated_sum - parts.trimmed_sum
    rhs = parts.top_r_sum - parts.over_threshold_sum
    return lhs, rhs


def residual_bound_check(values, r: int, t: float) -> bool:
    """Z_n - S_n^r <= (r - ℓ_n)·t whenever r >= ℓ_n = #{X_k > t}.

    Raises SkipSignal when r < ℓ_n, where no bound is claimed.
    """
    parts = breakdown(values, r, t)
    if r < parts.exceed_count:
        raise SkipSignal(f"r = {r} is below the exceedance count {parts.exceed_count}")
    bound = (r - parts.exceed_count) * t
    slack = 1e-12 * max(1.0, abs(bound), abs(parts.total))
    return parts.residual <= bound + slack


def _tail_below(t: float, dist: DistributionSpec, seq: GoodSequence) -> float:
    return dist.tail_at(seq.value(seq.index_above(t) - 1))


def exact_a(n: int, t: float, dist: DistributionSpec, seq: GoodSequence) -> float:
    """A_n = n·F(1/λ_{j_t - 1})."""
    if t < 1:
        raise InputError(f"t must be >= 1, got {t}")
    return n * _tail_below(t, dist, seq)


def exact_bbar(n: int, t: float, dist: DistributionSpec, seq: GoodSequence) -> float:
    """B̄_n = n·F(1/λ_{s-1}) with λ_s the smallest element of Λ that is >= t."""
    if t < 1:
        raise InputError(f"t must be >= 1, got {t}")
    j_t = seq.index_above(t)
    s = j_t - 1 if seq.value(j_t - 1) == t else j_t
    return n * dist.tail_at(seq.value(s - 1))


def _truncated_mean_forms(t: float, dist: DistributionSpec, seq: GoodSequence) -> tuple[float, float]:
    """E[X 1{X <= t}] as (defining sum Σ λ_s p_s, summation-by-parts form)."""
    top = seq.index_above(t) - 1
    if top <= 0:
        return 0.0, 0.0
    lam = seq.values(np.arange(top + 1))
    tails = dist.tail_at(lam)
    masses = tails[:-1] - tails[1:]
    direct = compensated_sum(lam[1:] * masses)
    by_parts = compensated_sum(
        np.concatenate([tails[:-1] * np.diff(lam), [-lam[top] * tails[top]]])
    )
    return direct, by_parts


def exact_d(n: int, t: float, dist: DistributionSpec, seq: GoodSequence) -> float:
    """d_n = n·Σ_{s < j_t} λ_s p_s, cross-checked against the summation-by-parts form."""
    if t < 1:
        raise InputError(f"t must be >= 1, got {t}")
    direct, by_parts = _truncated_mean_forms(t, dist, seq)
    if relative_difference(direct, by_parts) > ORACLE_RTOL:
        raise ConsistencyError(
            f"truncated mean forms disagree at t={t}: {direct!r} vs {by_parts!r}"
        )
    return n * direct


def exact_moments(n: int, t: float, dist: DistributionSpec, seq: GoodSequence) -> ExactMoments:
    return ExactMoments(
        n=n,
        t=t,
        a=exact_a(n, t, dist, seq),
        bbar=exact_bbar(n, t, dist, seq),
        d=exact_d(n, t, dist, seq),
    )


class IndexTables:
    """Per-index lookups a(j) = F(1/λ_{j-1}) and m(j) = Σ_{s<j} λ_s p_s.

    A_n = n·a(j_t) and d_n = n·m(j_t), so whole ranges of n are evaluated by
    indexing instead of re-summing.
    """

    def __init__(self, dist: DistributionSpec, seq: GoodSequence, j_max: int):
        lam = seq.values(np.arange(j_max + 1))
        tails = dist.tail_at(lam)
        masses = tails[:-1] - tails[1:]
        self.j_max = j_max
        self.a = np.concatenate([[1.0], tails[:-1]])
        self.m = np.concatenate([[0.0], np.cumsum(lam[1:] * masses)])
        self.m = np.concatenate([[0.0], self.m[:-1]])

    def lookup(self, j: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.a[j], self.m[j]


def choose_beta(
    dist: DistributionSpec,
    seq: GoodSequence,
    gamma: float,
    n_max: int,
    eps0: float = 0.1,
    margin: float = 1.0,
    n_min: int = 1,
) -> float:
    """β = margin·(1 + eps0)·max_{n_min <= n <= n_max} A_n / n^(1-γ) with t_n = n^γ."""
    if not (0 < gamma < 0.5):
        raise InputError(f"gamma must lie in (0, 1/2), got {gamma}")
    if eps0 < 0 or margin < 1:
        raise InputError(f"need eps0 >= 0 and margin >= 1, got {eps0}, {margin}")
    if not (1 <= n_min <= n_max):
        raise InputError(f"need 1 <= n_min <= n_max, got {n_min}, {n_max}")

    worst = 0.0
    for start in range(n_min, n_max + 1, _BETA_CHUNK):
        ns = np.arange(start, min(start + _BETA_CHUNK, n_max + 1), dtype=np.float64)
        t = ns**gamma
        lam = seq.values(seq.indices_above(t) - 1)
        # A_n / n^(1-γ) = n^γ·F(1/λ_{j_t - 1})
        worst = max(worst, float(np.max(t * dist.tail_at(lam))))

    beta = margin * (1.0 + eps0) * worst
    logger.debug("choose_beta: sup A_n/n^(1-γ) = %.6g on [%d, %d] -> β = %.6g",
                 worst, n_min, n_max, beta)
    return beta


def per_n_moments(ns: np.ndarray, gamma: float, tables: IndexTables,
                  seq: GoodSequence) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t_n, A_n, d_n) for a vector of n with t_n = n^γ."""
    ns = np.asarray(ns, dtype=np.float64)
    t = ns**gamma
    j = seq.indices_above(t)
    if int(j.max()) > tables.j_max:
        raise InputError(f"index {int(j.max())} beyond table size {tables.j_max}")
    a1, m1 = tables.lookup(j)
    return t, ns * a1, ns * m1


def required_table_size(n_max: int, gamma: float, seq: GoodSequence) -> int:
    return seq.index_above(float(n_max) ** gamma) + 1
