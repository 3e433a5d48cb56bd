"""Numerical evaluation of the concentration bounds and the trimming hypotheses."""

import logging
import math
from collections.abc import Callable, Iterable, Sequence

import numpy as np

from oppenheim_lab.domain.entities.distribution import DistributionSpec
from oppenheim_lab.domain.entities.good_sequence import GoodSequence
from oppenheim_lab.domain.entities.plan import TrimTruncPlan
from oppenheim_lab.domain.entities.reports import (
    AssumptionReport,
    NormalizerRow,
    PhiBoundsReport,
    SeriesCertificate,
    SummabilityReport,
)
from oppenheim_lab.domain.exceptions import ConfigError, InputError, ModelError
from oppenheim_lab.domain.services.trimstats_service import (
    IndexTables,
    exact_a,
    exact_d,
    per_n_moments,
    required_table_size,
)
from oppenheim_lab.utils import compensated_sum, n_log_n

logger = logging.getLogger(__name__)

DOMINATION_POWER = 2.0
FAR_LIMIT = 1e300
FAR_POINTS = 600
_SUM_CHUNK = 1_000_000


def bernstein_tail(t: float, m: float, var_z: float) -> float:
    """2·exp(-t² / (2·Var Z + (2/3)·M·t))."""
    if not t > 0:
        raise InputError(f"t must be positive, got {t}")
    if not m > 0:
        raise InputError(f"M must be positive, got {m}")
    if var_z < 0:
        raise InputError(f"Var Z must be nonnegative, got {var_z}")
    denominator = 2.0 * var_z + (2.0 / 3.0) * m * t
    return 2.0 * math.exp(-(t * t) / denominator)


def truncation_concentration_bound(n: int, t: float, d: float, eps: float) -> float:
    """Bound on P(|Z_n - d_n| >= ε·d_n) for summands truncated at ``t``."""
    if eps <= 0 or t <= 0 or n < 1:
        raise InputError(f"need eps > 0, t > 0 and n >= 1, got {eps}, {t}, {n}")
    return math.exp(-3.0 * eps**2 / (24.0 + 4.0 * eps) * d**2 / (n * t**2))


def counting_concentration_bound(mass: float, eps: float) -> float:
    """Bound on P(|count - mass| >= ε·mass) for a sum of indicators with expectation ``mass``."""
    if eps <= 0:
        raise InputError(f"eps must be positive, got {eps}")
    return math.exp(-3.0 * eps**2 * mass / (6.0 + 4.0 * eps))


def _first_holding(flags: np.ndarray, points: np.ndarray) -> float | None:
    """First point from which ``flags`` stays true through the end."""
    if flags.size == 0 or not flags[-1]:
        return None
    failing = np.flatnonzero(~flags)
    start = 0 if failing.size == 0 else int(failing[-1]) + 1
    return float(points[start])


def phi_bounds_check(seq: GoodSequence, u_grid, eps: float = 0.1) -> PhiBoundsReport:
    """Evaluate log u - log λ_1 - ℓ <= φ(u) <= (1 + ε)(log u - log λ_1) on ``u_grid``.

    Any lower-bound violation raises ModelError. The upper bound is only
    eventual, so the first grid point from which it keeps holding is reported.
    """
    u = np.asarray(u_grid, dtype=np.float64)
    lam1, lam2 = seq.value(1), seq.value(2)
    if u.size and float(u.min()) < lam2:
        raise InputError(f"u grid must lie in [λ_2, ∞) = [{lam2}, ∞)")
    if eps <= 0:
        raise InputError(f"eps must be positive, got {eps}")

    phi = seq.phis(u)
    log_ratio = np.log(u) - math.log(lam1)
    lower = log_ratio - seq.ell
    upper = (1.0 + eps) * log_ratio

    below = phi < lower - 1e-12 * np.maximum(1.0, np.abs(lower))
    violations = int(np.count_nonzero(below))
    if violations:
        worst = float(u[np.argmax(below)])
        raise ModelError(
            f"φ lower bound fails at {violations} grid points (first at u = {worst}); "
            f"the sequence is not good"
        )

    u0 = _first_holding(phi <= upper, u)
    u0_far = None
    if seq.has_closed_form_phi:
        start = float(u.max()) if u.size else lam2
        far = np.geomspace(max(start, lam2), FAR_LIMIT, FAR_POINTS)
        far_phi = np.array([seq.phi(float(p)) for p in far])
        far_upper = (1.0 + eps) * (np.log(far) - math.log(lam1))
        u0_far = _first_holding(far_phi <= far_upper, far)

    logger.debug("φ bounds: %d points, upper bound from %s (far out %s)", u.size, u0, u0_far)
    return PhiBoundsReport(
        eps=eps, u=u, phi=phi, lower=lower, upper=upper,
        lower_violations=violations, u0=u0, u0_far=u0_far,
    )


def _domination_start(rate: Callable[[float], float], start: float) -> float | None:
    """Smallest n >= start with rate(n) >= DOMINATION_POWER, ``rate`` nondecreasing there."""
    if rate(start) >= DOMINATION_POWER:
        return start
    lo, hi = start, start * 2.0
    while rate(hi) < DOMINATION_POWER:
        lo, hi = hi, hi * 2.0
        if hi > FAR_LIMIT:
            return None
    while hi - lo > 1.0:
        mid = math.floor((lo + hi) / 2.0)
        if mid in (lo, hi):
            break
        if rate(mid) >= DOMINATION_POWER:
            hi = mid
        else:
            lo = mid
    return math.ceil(hi)


def _certify(name: str, exponent: Callable[[np.ndarray], np.ndarray],
             rate: Callable[[float], float], rate_monotone_from: float,
             c: float, n_max: int) -> SeriesCertificate:
    partial = 0.0
    for begin in range(1, n_max + 1, _SUM_CHUNK):
        ns = np.arange(begin, min(begin + _SUM_CHUNK, n_max + 1), dtype=np.float64)
        partial += compensated_sum(np.exp(-exponent(ns)))

    if c == 0:
        return SeriesCertificate(name=name, partial_sum=partial, n_max=n_max, status="divergent")

    # summand(n) = exp(-exponent(n)) <= n^-p as soon as exponent(n)/log n >= p
    start = _domination_start(rate, max(2.0, rate_monotone_from))
    if start is None:
        return SeriesCertificate(name=name, partial_sum=partial, n_max=n_max,
                                 status="inconclusive")
    # Σ_{n >= N} n^-p <= ∫_{N-1}^∞ x^-p dx
    tail = (start - 1.0) ** (1.0 - DOMINATION_POWER) / (DOMINATION_POWER - 1.0)
    return SeriesCertificate(name=name, partial_sum=partial, n_max=n_max, status="convergent",
                             dominance_start=float(start), tail_bound=tail)


def summability_check(dist: DistributionSpec, seq: GoodSequence, gamma: float, c: float,
                      n_max: int) -> SummabilityReport:
    """Partial sums and domination certificates for Σ exp(-c·n·log²t_n/t_n²) and Σ exp(-c·n/t_n)."""
    if not (0 < gamma < 0.5):
        raise InputError(f"gamma must lie in (0, 1/2), got {gamma}")
    if c < 0:
        raise InputError(f"c must be nonnegative, got {c}")
    if n_max < 2:
        raise InputError(f"n_max must be >= 2, got {n_max}")

    # with t_n = n^γ: n·log²t/t² = γ²·n^(1-2γ)·log²n and n/t = n^(1-γ)
    a_sq, a_inv = 1.0 - 2.0 * gamma, 1.0 - gamma
    certificates = [
        _certify(
            "log_squared",
            lambda ns: c * gamma**2 * ns**a_sq * np.log(ns) ** 2,
            lambda n: c * gamma**2 * n**a_sq * math.log(n),
            2.0, c, n_max,
        ),
        _certify(
            "inverse_threshold",
            lambda ns: c * ns**a_inv,
            lambda n: c * n**a_inv / math.log(n),
            math.exp(1.0 / a_inv), c, n_max,
        ),
    ]

    exact = {"exp_neg_c_d2_over_n_t2": 0.0, "exp_neg_c_a": 0.0}
    tables = IndexTables(dist, seq, required_table_size(n_max, gamma, seq))
    for begin in range(1, n_max + 1, _SUM_CHUNK):
        ns = np.arange(begin, min(begin + _SUM_CHUNK, n_max + 1), dtype=np.float64)
        t, a, d = per_n_moments(ns, gamma, tables, seq)
        exact["exp_neg_c_d2_over_n_t2"] += compensated_sum(np.exp(-c * d**2 / (ns * t**2)))
        exact["exp_neg_c_a"] += compensated_sum(np.exp(-c * a))

    for cert in certificates:
        logger.info("summability %s: status=%s from n=%s", cert.name, cert.status,
                    cert.dominance_start)
    return SummabilityReport(gamma=gamma, c=c, n_max=n_max, certificates=certificates,
                             exact_partial_sums=exact)


def _cumulative_at(grid: np.ndarray, summand: Callable[[np.ndarray, np.ndarray, np.ndarray],
                                                     np.ndarray],
                   gamma: float, tables: IndexTables, seq: GoodSequence) -> np.ndarray:
    """Σ_{k <= n} summand(k) evaluated at each grid n."""
    out = np.empty(grid.size)
    running = 0.0
    begin = 1
    for i, n in enumerate(grid):
        while begin <= n:
            stop = min(begin + _SUM_CHUNK, int(n) + 1)
            ns = np.arange(begin, stop, dtype=np.float64)
            running += compensated_sum(summand(ns, *per_n_moments(ns, gamma, tables, seq)))
            begin = stop
        out[i] = running
    return out


def assumption_report(
    dist: DistributionSpec,
    seq: GoodSequence,
    plan: TrimTruncPlan,
    n_grid: Sequence[int],
    eps0: float = 0.1,
    c: float = 0.01,
) -> AssumptionReport:
    """Evaluate the trimming schedule and normalizer hypotheses on ``n_grid``.

    Raises ConfigError when r_n < ⌈(1 + ε₀)A_n⌉ at some grid point.
    """
    grid = np.asarray(n_grid, dtype=np.int64)
    if grid.size == 0 or np.any(np.diff(grid) <= 0) or grid[0] < 1:
        raise InputError(f"n_grid must be increasing positive integers, got {list(n_grid)}")

    t = np.array([plan.t(int(n)) for n in grid])
    a = np.array([exact_a(int(n), float(tn), dist, seq) for n, tn in zip(grid, t, strict=True)])
    d = np.array([exact_d(int(n), float(tn), dist, seq) for n, tn in zip(grid, t, strict=True)])
    r = np.array([plan.r(int(n)) for n in grid], dtype=np.int64)

    required = np.ceil((1.0 + eps0) * a).astype(np.int64)
    short = grid[r < required]
    if short.size:
        raise ConfigError(
            f"trimming schedule r_n < ceil((1 + {eps0})·A_n) at n = {short.tolist()}; "
            f"increase beta (current {plan.beta})"
        )
    if np.any(d <= 0):
        raise InputError(f"d_n vanishes at n = {grid[d <= 0].tolist()}; extend the grid")

    ratio1 = a * t / d
    ratio2 = (r - a) * t / d
    summand1 = np.exp(-c * d**2 / (grid * t**2))
    summand2 = np.exp(-c * a)

    tables = IndexTables(dist, seq, required_table_size(int(grid[-1]) + 1, plan.gamma, seq))
    partial1 = _cumulative_at(grid, lambda ns, tt, aa, dd: np.exp(-c * dd**2 / (ns * tt**2)),
                              plan.gamma, tables, seq)
    partial2 = _cumulative_at(grid, lambda ns, tt, aa, dd: np.exp(-c * aa),
                              plan.gamma, tables, seq)

    tail1 = np.empty(grid.size)
    tail2 = np.empty(grid.size)
    for i, n in enumerate(grid):
        ns = np.array([n, n + 1], dtype=np.float64)
        tt, aa, dd = per_n_moments(ns, plan.gamma, tables, seq)
        s1 = np.exp(-c * dd**2 / (ns * tt**2))
        s2 = np.exp(-c * aa)
        tail1[i] = s1[1] / s1[0] if s1[0] > 0 else 0.0
        tail2[i] = s2[1] / s2[0] if s2[0] > 0 else 0.0

    logger.info("assumptions: max A_n·t_n/d_n = %.4g over %d grid points", ratio1.max(), grid.size)
    return AssumptionReport(
        grid=grid, t=t, a=a, d=d, r=r, ratio1=ratio1, ratio2=ratio2,
        summand1=summand1, summand2=summand2, partial_sum1=partial1, partial_sum2=partial2,
        tail_ratio1=tail1, tail_ratio2=tail2, eps0=eps0, c=c,
    )


def normalizer_trend(dist: DistributionSpec, seq: GoodSequence, gamma: float,
                     n_grid: Sequence[int]) -> list[NormalizerRow]:
    """d_n / (n log n) along the grid next to its limit α·γ (when α is known)."""
    target = None if dist.alpha is None else dist.alpha * gamma
    rows = []
    for n in n_grid:
        if n < 2:
            raise InputError(f"n log n normalizer needs n >= 2, got {n}")
        value = exact_d(int(n), float(n) ** gamma, dist, seq) / float(n_log_n(n))
        rows.append(NormalizerRow(
            n=int(n),
            d_over_nlogn=value,
            target=target,
            deviation=None if target is None else abs(value - target),
        ))
    return rows


def d_log_constant(dist: DistributionSpec, seq: GoodSequence,
                   pairs: Iterable[tuple[int, float]]) -> float:
    """Largest c with d_n(t) >= c·n·log t on every (n, t) pair with t > 1."""
    ratios = [exact_d(int(n), float(t), dist, seq) / (n * math.log(t))
              for n, t in pairs if t > 1.0]
    if not ratios:
        raise InputError("d_n >= c n log t needs at least one pair with t > 1")
    c = min(ratios)
    logger.debug("d_n >= %.6g n log t on %d pairs", c, len(ratios))
    return c
