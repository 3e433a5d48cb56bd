from dataclasses import asdict, dataclass, field

import numpy as np


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass
class PhiBoundsReport:
    """Lower/upper bound evaluation of φ on a grid.

    ``u0`` is the first grid point from which the upper bound holds through the
    end of the grid; ``u0_far`` extends the search on a log-spaced grid far
    beyond the grid when φ has a closed form.
    """

    eps: float
    u: np.ndarray
    phi: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    lower_violations: int
    u0: float | None
    u0_far: float | None

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "points": int(self.u.size),
            "u_max": float(self.u.max()) if self.u.size else None,
            "lower_violations": self.lower_violations,
            "upper_holds_from": self.u0,
            "upper_holds_far_out": self.u0_far,
        }


@dataclass
class SeriesCertificate:
    """Finite partial sum plus a domination certificate for an infinite series.

    ``status`` is "convergent" when summand(n) <= n^-p (p > 1) holds from
    ``dominance_start`` on, with ``tail_bound`` bounding the remaining tail.
    """

    name: str
    partial_sum: float
    n_max: int
    status: str
    dominance_start: float | None = None
    tail_bound: float | None = None


@dataclass
class SummabilityReport:
    gamma: float
    c: float
    n_max: int
    certificates: list[SeriesCertificate]
    exact_partial_sums: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "c": self.c,
            "n_max": self.n_max,
            "certificates": [asdict(cert) for cert in self.certificates],
            "exact_partial_sums": self.exact_partial_sums,
        }


@dataclass
class AssumptionReport:
    grid: np.ndarray
    t: np.ndarray
    a: np.ndarray
    d: np.ndarray
    r: np.ndarray
    ratio1: np.ndarray
    ratio2: np.ndarray
    summand1: np.ndarray
    summand2: np.ndarray
    partial_sum1: np.ndarray
    partial_sum2: np.ndarray
    tail_ratio1: np.ndarray
    tail_ratio2: np.ndarray
    eps0: float
    c: float

    @property
    def ratio1_max(self) -> float:
        return float(self.ratio1.max())

    @property
    def ratio1_log_band(self) -> tuple[float, float]:
        scaled = self.ratio1 * np.log(self.grid)
        return float(scaled.min()), float(scaled.max())

    def to_records(self) -> list[dict]:
        keys = ("ratio1", "ratio2", "summand1", "summand2", "partial_sum1", "partial_sum2")
        return [
            {"n": int(n), **{key: float(getattr(self, key)[i]) for key in keys}}
            for i, n in enumerate(self.grid)
        ]

    def to_dict(self) -> dict:
        low, high = self.ratio1_log_band
        return {
            "eps0": self.eps0,
            "c": self.c,
            "ratio1_max": self.ratio1_max,
            "ratio1_log_n_band": [low, high],
            "records": self.to_records(),
            "t": self.t.tolist(),
            "A": self.a.tolist(),
            "d": self.d.tolist(),
            "r": self.r.tolist(),
            "tail_ratio1": self.tail_ratio1.tolist(),
            "tail_ratio2": self.tail_ratio2.tolist(),
        }


@dataclass(frozen=True)
class StatisticRow:
    source: str
    n: int
    statistic: str
    target: float | None
    mean: float
    median: float
    std: float
    min: float
    max: float
    paths: int


@dataclass(frozen=True)
class ConcentrationRow:
    source: str
    n: int
    event: str
    eps: float
    mass: float
    frequency: float
    bound: float


@dataclass
class ConvergenceReport:
    name: str
    rows: list[StatisticRow] = field(default_factory=list)
    concentration: list[ConcentrationRow] = field(default_factory=list)
    targets: dict[str, float | None] = field(default_factory=dict)
    notes: dict[str, object] = field(default_factory=dict)

    def row(self, n: int, statistic: str, source: str = "iid") -> StatisticRow:
        for row in self.rows:
            if row.n == n and row.statistic == statistic and row.source == source:
                return row
        raise KeyError((n, statistic, source))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "targets": self.targets,
            "notes": {key: _plain(value) for key, value in self.notes.items()},
            "rows": [asdict(row) for row in self.rows],
            "concentration": [asdict(row) for row in self.concentration],
        }


@dataclass(frozen=True)
class AcceptanceCheck:
    name: str
    passed: bool
    observed: float | None
    threshold: str
    detail: str = ""


@dataclass
class IndependenceReport:
    step: int
    paths: int
    total_variation: float
    lag_chi2: float | None = None
    lag_p_value: float | None = None
    lag_dof: int | None = None
    two_sample_chi2: float | None = None
    two_sample_p_value: float | None = None
    notices: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BracketingRow:
    n: int
    max_gap: float
    bound: float
    max_normalized_gap: float
    normalized_bound: float
    violations: int


@dataclass
class BracketingReport:
    rows: list[BracketingRow]
    ell: float

    @property
    def violations(self) -> int:
        return sum(row.violations for row in self.rows)

    def to_dict(self) -> dict:
        return {"ell": self.ell, "rows": [asdict(row) for row in self.rows]}


@dataclass(frozen=True)
class NormalizerRow:
    n: int
    d_over_nlogn: float
    target: float | None
    deviation: float | None


@dataclass
class IdentityCheckReport:
    checks: list[AcceptanceCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [asdict(check) for check in self.checks]}
