from dataclasses import dataclass


@dataclass(frozen=True)
class TrimmedSumBreakdown:
    total: float
    trimmed_sum: float
    truncated_sum: float
    exceed_count: int
    geq_count: int
    top_r_sum: float
    over_threshold_sum: float

    @property
    def residual(self) -> float:
        """Z_n - S_n^r."""
        return self.truncated_sum - self.trimmed_sum


@dataclass(frozen=True)
class ExactMoments:
    """A_n = Σ P(X_k > t), B̄_n = Σ P(X_k >= t) and d_n = Σ E[X_k 1{X_k <= t}]."""

    n: int
    t: float
    a: float
    bbar: float
    d: float
